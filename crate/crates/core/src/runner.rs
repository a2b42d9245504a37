//! Configuration-driven runs: simulate, observe, score and write artifacts.

use std::fmt::{self, Write as _};
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Resolved, ScenarioConfig};
use crate::error::{Error, Result};
use crate::metrics::{smape, SmapeReport, Window};
use crate::output::{write_estimates, write_pmu, write_trajectory};
use crate::pipeline::{observe, EstimateRow};
use crate::simulator::{simulate, NoiseKind, Trajectory};

/// Noise case label: 1 noisefree, 2 Gaussian, 3 Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "u8")]
pub enum Case {
    NoiseFree,
    Gaussian,
    Laplacian,
}

impl Case {
    pub fn noise_kind(self) -> NoiseKind {
        match self {
            Case::NoiseFree => NoiseKind::None,
            Case::Gaussian => NoiseKind::Gaussian,
            Case::Laplacian => NoiseKind::Laplacian,
        }
    }

    pub fn of(kind: NoiseKind) -> Self {
        match kind {
            NoiseKind::None => Case::NoiseFree,
            NoiseKind::Gaussian => Case::Gaussian,
            NoiseKind::Laplacian => Case::Laplacian,
        }
    }
}

impl TryFrom<u8> for Case {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Case::NoiseFree),
            2 => Ok(Case::Gaussian),
            3 => Ok(Case::Laplacian),
            _ => Err(Error::config("case", format!("must be 1, 2 or 3, got {v}"))),
        }
    }
}

impl From<Case> for u8 {
    fn from(c: Case) -> u8 {
        match c {
            Case::NoiseFree => 1,
            Case::Gaussian => 2,
            Case::Laplacian => 3,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Case::NoiseFree => "noisefree",
            Case::Gaussian => "gaussian",
            Case::Laplacian => "laplacian",
        };
        write!(f, "{} ({name})", u8::from(*self))
    }
}

/// What to run and where to put it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub case: Option<Case>,
    /// Run the observer stack; without it only the simulation outputs are
    /// written.
    pub observers: bool,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Invalid(_) => 2,
        Error::Io { .. } | Error::Csv(_) => 4,
        _ => 3,
    }
}

/// Identification summary of one machine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub machine: usize,
    pub theta: [f64; 3],
    pub theta_hat: [f64; 3],
    pub relative_error: [f64; 3],
    /// First sample time after which every channel stays within 1 %.
    pub converged_at: Option<f64>,
    pub excitation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub case: Case,
    pub seed: u64,
    pub smape: SmapeReport,
    pub parameters: Vec<ParameterSummary>,
    /// Lowest and highest terminal frequency over all machines [Hz].
    pub frequency_band: [f64; 2],
    pub clamped_samples: usize,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario  {}", self.scenario);
        let _ = writeln!(s, "case      {}", self.case);
        let _ = writeln!(s, "seed      {}", self.seed);
        let _ = writeln!(
            s,
            "frequency {:.4} .. {:.4} Hz",
            self.frequency_band[0], self.frequency_band[1]
        );
        let _ = writeln!(s, "clamped   {}", self.clamped_samples);
        s.push('\n');
        s.push_str(&self.smape.to_table());
        if !self.parameters.is_empty() {
            s.push('\n');
            let _ = writeln!(
                s,
                "{:<10}{:>14}{:>14}{:>14}{:>14}{:>14}",
                "machine", "err a1", "err a2", "err a2*Tm", "converged", "int Delta^2"
            );
            for p in &self.parameters {
                let conv = p
                    .converged_at
                    .map(|t| format!("{t:.2} s"))
                    .unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{:<10}{:>14}{:>14}{:>14}{:>14}{:>14}",
                    p.machine,
                    format!("{:.3e}", p.relative_error[0]),
                    format!("{:.3e}", p.relative_error[1]),
                    format!("{:.3e}", p.relative_error[2]),
                    conv,
                    format!("{:.3e}", p.excitation)
                );
            }
        }
        s
    }
}

/// Results of one run, in memory.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub resolved: Resolved,
    pub trajectory: Trajectory,
    /// `(machine, rows)` for every machine.
    pub estimates: Vec<(usize, Vec<EstimateRow>)>,
    pub report: RunReport,
}

/// Applies the overrides and returns the configuration that actually runs.
pub fn effective_config(
    config: &ScenarioConfig,
    seed: Option<u64>,
    case: Option<Case>,
) -> ScenarioConfig {
    let mut c = config.clone();
    if let Some(s) = seed {
        c.simulation.seed = s;
    }
    if let Some(k) = case {
        c.noise.kind = k.noise_kind();
    }
    c
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn parameter_summary(
    machine: usize,
    traj: &Trajectory,
    rows: &[EstimateRow],
) -> Option<ParameterSummary> {
    let last = rows.last()?;
    let theta = traj.params[machine].theta();
    let rel = |r: &EstimateRow| -> [f64; 3] {
        std::array::from_fn(|j| relative(r.theta_hat[j], theta[j]))
    };
    let mut converged_at = None;
    for r in rows.iter().rev() {
        if rel(r).iter().all(|e| *e < 0.01) {
            converged_at = Some(r.t);
        } else {
            break;
        }
    }
    Some(ParameterSummary {
        machine,
        theta,
        theta_hat: last.theta_hat,
        relative_error: rel(last),
        converged_at,
        excitation: last.excitation,
    })
}

/// Runs the observers on every machine and scores the monitored ones.
pub fn run_resolved(
    config: ScenarioConfig,
    resolved: Resolved,
    observers: bool,
) -> Result<ScenarioRun> {
    let r = &resolved;
    let traj = simulate(r.plant.clone(), r.x0.clone(), r.events.clone(), &r.settings)?;
    let mut estimates = vec![];
    if observers {
        for m in 0..traj.n_machines() {
            let rows = observe(
                r.observer,
                &traj.params[m],
                r.settings.pmu_rate,
                &traj.pmu_stream(m),
            )?;
            estimates.push((m, rows));
        }
    }

    let t: Vec<f64> = traj.pmu.iter().map(|s| s[0].t).collect();
    let mut table = SmapeReport::default();
    let mut parameters = vec![];
    let mut clamped = 0;
    for (m, rows) in &estimates {
        clamped += rows.iter().filter(|r| r.clamped).count();
        if !r.monitored.contains(m) {
            continue;
        }
        let truth = traj.states_at_pmu(*m);
        let series = |f: fn(&EstimateRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        let states: [(&str, Vec<f64>, Vec<f64>, Window); 3] = [
            (
                "x1",
                series(|r| r.x1_hat),
                truth.iter().map(|s| s.x1).collect(),
                r.state_window,
            ),
            (
                "x2",
                series(|r| r.x2_hat),
                truth.iter().map(|s| s.x2).collect(),
                r.x2_window,
            ),
            (
                "x3",
                series(|r| r.x3_hat),
                truth.iter().map(|s| s.x3).collect(),
                r.state_window,
            ),
        ];
        for (name, est, tru, w) in states {
            table.push(*m, name, w, smape(&t, &est, &tru, w)?);
        }
        parameters.extend(parameter_summary(*m, &traj, rows));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let band = traj
        .terminals
        .iter()
        .flatten()
        .fold([f64::INFINITY, f64::NEG_INFINITY], |b, s| {
            [b[0].min(s.omega_t / tau), b[1].max(s.omega_t / tau)]
        });
    let report = RunReport {
        scenario: config.name.clone(),
        case: Case::of(config.noise.kind),
        seed: r.settings.seed,
        smape: table,
        parameters,
        frequency_band: band,
        clamped_samples: clamped,
    };
    Ok(ScenarioRun {
        config,
        resolved,
        trajectory: traj,
        estimates,
        report,
    })
}

/// Resolves and runs a scenario with optional overrides.
pub fn run_scenario(
    config: &ScenarioConfig,
    seed: Option<u64>,
    case: Option<Case>,
) -> Result<ScenarioRun> {
    let c = effective_config(config, seed, case);
    let resolved = c.resolve(None)?;
    run_resolved(c, resolved, true)
}

#[derive(Serialize)]
struct ManifestEcho<'a> {
    version: &'a str,
    config_path: &'a Path,
    out: &'a Path,
    seed: u64,
    case: Case,
    observers: bool,
    files: Vec<&'a str>,
    scenario: &'a ScenarioConfig,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(io_err(path))
}

fn write_all(run: &ScenarioRun, manifest: &RunManifest, dir: &Path) -> Result<Vec<&'static str>> {
    let mut files = vec!["trajectory.csv", "pmu.csv"];
    write_trajectory(
        create(&dir.join("trajectory.csv"))?,
        &run.trajectory,
        run.resolved.trajectory_stride,
    )?;
    write_pmu(create(&dir.join("pmu.csv"))?, &run.trajectory)?;
    if manifest.observers {
        write_estimates(
            create(&dir.join("estimates.csv"))?,
            &run.trajectory,
            &run.estimates,
        )?;
        let smape_csv = run.report.smape.to_csv()?;
        fs::write(dir.join("smape.csv"), smape_csv).map_err(io_err(&dir.join("smape.csv")))?;
        files.extend(["estimates.csv", "smape.csv"]);
    }
    fs::write(dir.join("report.txt"), run.report.to_text())
        .map_err(io_err(&dir.join("report.txt")))?;
    files.extend(["report.txt", "manifest.json"]);
    let echo = ManifestEcho {
        version: env!("CARGO_PKG_VERSION"),
        config_path: &manifest.config,
        out: &manifest.out,
        seed: run.resolved.settings.seed,
        case: Case::of(run.config.noise.kind),
        observers: manifest.observers,
        files: files.clone(),
        scenario: &run.config,
    };
    let json = serde_json::to_string_pretty(&echo).expect("manifest serializes");
    fs::write(dir.join("manifest.json"), json + "\n")
        .map_err(io_err(&dir.join("manifest.json")))?;
    Ok(files)
}

/// Writes every artifact into a staging directory first and moves the files
/// into `manifest.out` only when all of them were written.
pub fn write_outputs(run: &ScenarioRun, manifest: &RunManifest) -> Result<()> {
    let out = &manifest.out;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let staging = out.join(".staging");
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    fs::create_dir(&staging).map_err(io_err(&staging))?;
    let result = write_all(run, manifest, &staging).and_then(|files| {
        for f in files {
            let to = out.join(f);
            fs::rename(staging.join(f), &to).map_err(io_err(&to))?;
        }
        Ok(())
    });
    let _ = fs::remove_dir_all(&staging);
    result
}

/// Full run as the CLI performs it.
pub fn run(manifest: &RunManifest) -> Result<RunReport> {
    let config = ScenarioConfig::load(&manifest.config)?;
    let c = effective_config(&config, manifest.seed, manifest.case);
    let resolved = c.resolve(None)?;
    log::info!(
        "scenario {} seed {} case {}: {} machines, t_end {} s",
        c.name,
        resolved.settings.seed,
        Case::of(c.noise.kind),
        resolved.plant.n_machines(),
        resolved.settings.t_end
    );
    let run = run_resolved(c, resolved, manifest.observers)?;
    write_outputs(&run, manifest)?;
    Ok(run.report)
}

/// Schema check of a scenario file without running it.
pub fn validate(path: &Path) -> Result<Vec<crate::config::Diagnostic>> {
    Ok(ScenarioConfig::load(path)?.diagnostics())
}
