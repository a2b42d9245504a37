//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "scenario1_case1"
//!
//! [simulation]
//! t_end = 120.0
//! dt_sim = 0.000833333333333333   # 1/1200 s by default
//! pmu_rate = 60.0
//! seed = 1
//! load_ramp = 0.2                 # seconds per load change, 0 = switch
//!
//! [noise]
//! kind = "none"                   # none | gaussian | laplacian
//! snr_db = 45.0
//!
//! [observer]                      # every key optional
//! lambda = 0.5
//! k1 = 6.0
//! k2 = 4.0
//! d1 = 4.0
//! d2 = 1.0
//! gamma = [1.5e7, 1.5e7, 1.5e7]
//! k = 1.0
//! x3_method = "primary"           # primary | alternative
//! parameters = "adaptive"         # adaptive | known
//!
//! [network]
//! preset = "wscc9"
//!
//! [fault]
//! bus = 6
//!
//! [[event]]
//! t = 2.0
//! kind = "fault_on"
//!
//! [load_variation]
//! interval = 2.0
//! min = -0.07
//! max = 0.07
//!
//! [evaluation]
//! monitored = [0]
//! x2_window = [50.0, 120.0]
//!
//! [output]
//! trajectory_stride = 20
//! ```
//!
//! The network is one of `preset = "wscc9"`, a bus-level description under
//! `[network.buses]`, or reduced matrices under `[network.kron]`. Machines
//! are `[[machine]]` entries with `p0`, `v0` and a `[machine.params]` table;
//! the preset supplies its own machines when none are listed.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebraic::X3Method;
use crate::drem::{DremConfig, HParams};
use crate::error::{Error, Result};
use crate::metrics::Window;
use crate::model::{derive_coefficients, GeneratorParams, RawGeneratorParams};
use crate::network::{wscc9, Branch, BusNetwork, CMatrix, FaultSpec, Load, ReducedNetwork};
use crate::pipeline::{ObserverConfig, ParameterSource};
use crate::presets::{wscc9_machines, wscc9_operating_points};
use crate::simulator::{
    initialize, Event, EventKind, LoadVariation, NoiseConfig, NoiseKind, OperatingPoint, Plant,
    RotorState, SimSettings,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub observer: ObserverSection,
    pub network: NetworkSection,
    #[serde(default, rename = "machine")]
    pub machines: Vec<MachineSection>,
    #[serde(default)]
    pub fault: Option<FaultSpec>,
    #[serde(default, rename = "event")]
    pub events: Vec<Event>,
    #[serde(default)]
    pub load_variation: Option<LoadVariation>,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt_sim: f64,
    #[serde(default = "default_pmu_rate")]
    pub pmu_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ramp")]
    pub load_ramp: f64,
}

fn default_dt() -> f64 {
    1.0 / 1200.0
}

fn default_pmu_rate() -> f64 {
    60.0
}

fn default_ramp() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverSection {
    pub lambda: f64,
    pub k1: f64,
    pub k2: f64,
    pub d1: f64,
    pub d2: f64,
    pub gamma: [f64; 3],
    pub k: f64,
    pub x3_method: X3Method,
    pub parameters: ParameterSource,
    /// Runs the gradient estimator alongside DREM with these gains.
    pub gradient_gain: Option<[f64; 3]>,
}

impl Default for ObserverSection {
    fn default() -> Self {
        let d = ObserverConfig::default();
        Self {
            lambda: d.drem.lambda,
            k1: d.drem.h.k1,
            k2: d.drem.h.k2,
            d1: d.drem.h.d1,
            d2: d.drem.h.d2,
            gamma: d.drem.gamma,
            k: d.k,
            x3_method: d.x3_method,
            parameters: d.parameters,
            gradient_gain: None,
        }
    }
}

impl ObserverSection {
    pub fn to_config(&self) -> ObserverConfig {
        ObserverConfig {
            drem: DremConfig {
                lambda: self.lambda,
                h: HParams {
                    k1: self.k1,
                    k2: self.k2,
                    d1: self.d1,
                    d2: self.d2,
                },
                gamma: self.gamma,
            },
            k: self.k,
            x3_method: self.x3_method,
            parameters: self.parameters,
            gradient_gain: self.gradient_gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub buses: Option<BusSection>,
    #[serde(default)]
    pub kron: Option<KronSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusSection {
    pub n_bus: usize,
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub loads: Vec<Load>,
    /// Terminal bus of each machine.
    pub gen_bus: Vec<usize>,
}

/// Reduced admittance matrices, row-major, real and imaginary parts apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KronSection {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default)]
    pub fault_re: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub fault_im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSection {
    /// Scheduled active power (ignored for machine 0, the reference).
    #[serde(default)]
    pub p0: f64,
    /// Terminal voltage setpoint.
    pub v0: f64,
    pub params: RawGeneratorParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Machines scored in the report; all machines when empty.
    pub monitored: Vec<usize>,
    /// sMAPE window for `x1` and `x3`; whole run when absent.
    pub state_window: Option<[f64; 2]>,
    /// sMAPE window for `x2`; whole run when absent.
    pub x2_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Every n-th simulation step goes to `trajectory.csv`.
    pub trajectory_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            trajectory_stride: 1,
        }
    }
}

/// One schema violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Non-empty list of violations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Everything a run needs, built from a valid scenario.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub plant: Plant,
    pub x0: Vec<RotorState>,
    pub events: Vec<Event>,
    pub settings: SimSettings,
    pub observer: ObserverConfig,
    pub monitored: Vec<usize>,
    pub state_window: Window,
    pub x2_window: Window,
    pub trajectory_stride: usize,
}

struct Checker(Vec<Diagnostic>);

impl Checker {
    fn push(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            key: key.into(),
            message: message.into(),
        });
    }

    fn require(&mut self, ok: bool, key: &str, message: &str) {
        if !ok {
            self.push(key, message);
        }
    }

    fn push_error(&mut self, prefix: &str, e: Error) {
        match e {
            Error::Config { key, reason } => self.push(key, reason),
            Error::InvalidParameter { name, reason } => {
                self.push(format!("{prefix}{name}"), reason)
            }
            other => self.push(prefix.trim_end_matches('.'), other.to_string()),
        }
    }
}

fn matrix(key: &str, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMatrix> {
    let n = re.len();
    if im.len() != n || re.iter().chain(im).any(|r| r.len() != n) {
        return Err(Error::config(
            key,
            "real and imaginary parts must both be square and equally sized",
        ));
    }
    Ok(CMatrix::from_fn(n, n, |i, k| {
        num_complex::Complex64::new(re[i][k], im[i][k])
    }))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "toml".to_string());
            Error::config(key, e.to_string().trim_end().to_string())
        })
    }

    /// Reads and parses a scenario file. A missing or unreadable file is a
    /// config error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn machine_data(&self) -> Vec<(RawGeneratorParams, OperatingPoint)> {
        if self.machines.is_empty() && self.network.preset.as_deref() == Some("wscc9") {
            wscc9_machines()
                .into_iter()
                .zip(wscc9_operating_points())
                .collect()
        } else {
            self.machines
                .iter()
                .map(|m| (m.params.clone(), OperatingPoint { p0: m.p0, v0: m.v0 }))
                .collect()
        }
    }

    fn bus_network(&self, xdp: Vec<f64>) -> Option<BusNetwork> {
        if self.network.preset.as_deref() == Some("wscc9") {
            let mut net = wscc9();
            if xdp.len() == net.gen_bus.len() {
                net.xdp = xdp;
            }
            return Some(net);
        }
        self.network.buses.as_ref().map(|b| BusNetwork {
            n_bus: b.n_bus,
            branches: b.branches.clone(),
            loads: b.loads.clone(),
            gen_bus: b.gen_bus.clone(),
            xdp,
        })
    }

    /// All schema violations; empty for a runnable scenario.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut c = Checker(vec![]);
        c.require(!self.name.trim().is_empty(), "name", "must not be empty");

        let s = &self.simulation;
        c.require(
            s.t_end.is_finite() && s.t_end >= 0.0,
            "simulation.t_end",
            "must be finite and non-negative",
        );
        c.require(
            s.dt_sim.is_finite() && s.dt_sim > 0.0,
            "simulation.dt_sim",
            "must be positive",
        );
        c.require(
            s.pmu_rate.is_finite() && s.pmu_rate > 0.0,
            "simulation.pmu_rate",
            "must be positive",
        );
        c.require(
            s.load_ramp.is_finite() && s.load_ramp >= 0.0,
            "simulation.load_ramp",
            "must be non-negative",
        );
        let settings = self.settings(s.seed);
        if s.dt_sim > 0.0 && s.pmu_rate > 0.0 {
            if let Err(e) = settings.pmu_stride() {
                c.push_error("simulation.", e);
            }
        }

        if self.noise.kind != NoiseKind::None {
            c.require(
                self.noise.snr_db.is_finite(),
                "noise.snr_db",
                "must be finite",
            );
        }

        let o = &self.observer;
        c.require(o.lambda > 0.0, "observer.lambda", "must be positive");
        c.require(o.k > 0.0, "observer.k", "must be positive");
        c.require(o.k2 > 0.0, "observer.k2", "must be positive");
        c.require(o.k1.is_finite(), "observer.k1", "must be finite");
        c.require(o.d1 >= 0.0, "observer.d1", "must be non-negative");
        c.require(o.d2 >= 0.0, "observer.d2", "must be non-negative");
        c.require(
            o.gamma.iter().all(|g| *g > 0.0),
            "observer.gamma",
            "every gain must be positive",
        );
        if let Some(g) = o.gradient_gain {
            c.require(
                g.iter().all(|g| *g > 0.0),
                "observer.gradient_gain",
                "every gain must be positive",
            );
        }

        let machines = self.machine_data();
        let n = machines.len();
        for (i, (raw, op)) in machines.iter().enumerate() {
            if let Err(e) = derive_coefficients(raw.clone()) {
                c.push_error(&format!("machine[{i}].params."), e);
            }
            c.require(op.v0 > 0.0, &format!("machine[{i}].v0"), "must be positive");
        }

        let net = &self.network;
        let sources = [
            net.preset.is_some(),
            net.buses.is_some(),
            net.kron.is_some(),
        ];
        let mut n_loads = 0;
        let mut bus_level = false;
        match sources.iter().filter(|b| **b).count() {
            0 => c.push("network", "needs one of `preset`, `buses` or `kron`"),
            1 => {
                if let Some(p) = &net.preset {
                    if p != "wscc9" {
                        c.push(
                            "network.preset",
                            format!("unknown preset `{p}` (known: wscc9)"),
                        );
                    }
                }
                if net.preset.is_none() && n == 0 {
                    c.push("machine", "at least one machine is required");
                }
                let xdp: Vec<f64> = machines.iter().map(|(r, _)| r.xdp).collect();
                if let Some(bn) = self.bus_network(xdp.clone()) {
                    bus_level = true;
                    n_loads = bn.loads.len();
                    if let Err(e) = bn.check() {
                        c.push_error("network.", e);
                    }
                    if let Some(f) = &self.fault {
                        c.require(f.bus < bn.n_bus, "fault.bus", "out of range");
                    }
                }
                if let Some(k) = &net.kron {
                    match matrix("network.kron", &k.re, &k.im) {
                        Ok(m) => c.require(
                            m.nrows() == n,
                            "network.kron",
                            "size differs from the machine count",
                        ),
                        Err(e) => c.push_error("network.kron", e),
                    }
                    match (&k.fault_re, &k.fault_im) {
                        (Some(re), Some(im)) => match matrix("network.kron.fault", re, im) {
                            Ok(m) => c.require(
                                m.nrows() == n,
                                "network.kron.fault_re",
                                "size differs from the machine count",
                            ),
                            Err(e) => c.push_error("network.kron.fault", e),
                        },
                        (None, None) => {}
                        _ => c.push("network.kron.fault_re", "fault_re and fault_im go together"),
                    }
                    if self.fault.is_some() {
                        c.push(
                            "fault",
                            "only for bus-level networks; give kron.fault_re/fault_im instead",
                        );
                    }
                }
            }
            _ => c.push(
                "network",
                "`preset`, `buses` and `kron` are mutually exclusive",
            ),
        }

        let has_fault =
            self.fault.is_some() || net.kron.as_ref().is_some_and(|k| k.fault_re.is_some());
        for (i, ev) in self.events.iter().enumerate() {
            let key = format!("event[{i}]");
            if !(ev.t >= 0.0 && ev.t <= s.t_end) {
                c.push(
                    format!("{key}.t"),
                    format!("time {} outside [0, t_end]", ev.t),
                );
            }
            match &ev.kind {
                EventKind::FaultOn | EventKind::FaultOff => {
                    c.require(
                        has_fault,
                        &format!("{key}.kind"),
                        "fault event without a fault definition",
                    );
                }
                EventKind::LoadSet { load, .. } | EventKind::LoadStep { load, .. } => {
                    if !bus_level {
                        c.push(
                            format!("{key}.kind"),
                            "load events need a bus-level network",
                        );
                    } else if *load >= n_loads {
                        c.push(format!("{key}.load"), format!("no load with index {load}"));
                    }
                }
            }
        }

        if let Some(lv) = &self.load_variation {
            if let Err(e) = lv.check() {
                c.push_error("load_variation.", e);
            }
            if !bus_level {
                c.push("load_variation", "needs a bus-level network");
            } else if let Some(bad) = lv.loads.iter().find(|&&l| l >= n_loads) {
                c.push("load_variation.loads", format!("no load with index {bad}"));
            }
        }

        let ev = &self.evaluation;
        if let Some(bad) = ev.monitored.iter().find(|&&m| m >= n) {
            c.push(
                "evaluation.monitored",
                format!("no machine with index {bad}"),
            );
        }
        for (key, w) in [
            ("evaluation.state_window", ev.state_window),
            ("evaluation.x2_window", ev.x2_window),
        ] {
            if let Some([a, b]) = w {
                if !(a <= b) {
                    c.push(key, "start must not exceed end");
                } else if b < 0.0 || a > s.t_end {
                    c.push(key, "does not overlap the simulated interval");
                }
            }
        }
        c.require(
            self.output.trajectory_stride >= 1,
            "output.trajectory_stride",
            "must be at least 1",
        );
        c.0
    }

    fn settings(&self, seed: u64) -> SimSettings {
        SimSettings {
            t_end: self.simulation.t_end,
            dt: self.simulation.dt_sim,
            pmu_rate: self.simulation.pmu_rate,
            noise: self.noise,
            seed,
        }
    }

    /// Builds the initialized plant, events and settings. `seed` replaces the
    /// scenario seed when given.
    pub fn resolve(&self, seed: Option<u64>) -> Result<Resolved> {
        let diags = self.diagnostics();
        if !diags.is_empty() {
            return Err(Error::Invalid(Diagnostics(diags)));
        }
        let seed = seed.unwrap_or(self.simulation.seed);
        let data = self.machine_data();
        let params = data
            .iter()
            .map(|(r, _)| derive_coefficients(r.clone()))
            .collect::<Result<Vec<GeneratorParams>>>()?;
        let ops: Vec<OperatingPoint> = data.iter().map(|(_, o)| *o).collect();
        let xdp: Vec<f64> = params.iter().map(|p| p.raw.xdp).collect();
        let net = match (&self.network.kron, self.bus_network(xdp.clone())) {
            (Some(k), _) => {
                let normal = matrix("network.kron", &k.re, &k.im)?;
                let faulted = match (&k.fault_re, &k.fault_im) {
                    (Some(re), Some(im)) => Some(matrix("network.kron.fault", re, im)?),
                    _ => None,
                };
                ReducedNetwork::from_matrices(normal, faulted, xdp)?
            }
            (None, Some(bn)) => ReducedNetwork::from_buses(bn, self.fault)?,
            (None, None) => return Err(Error::config("network", "no network given")),
        };
        let (plant, x0) = initialize(params, net, &ops)?;
        let plant = plant.with_load_ramp(self.simulation.load_ramp)?;
        let mut events = self.events.clone();
        if let Some(lv) = &self.load_variation {
            events.extend(lv.events(plant.net.loads(), self.simulation.t_end, seed)?);
        }
        let window = |w: Option<[f64; 2]>| w.map(|[a, b]| Window::new(a, b)).unwrap_or(Window::ALL);
        let monitored = if self.evaluation.monitored.is_empty() {
            (0..plant.n_machines()).collect()
        } else {
            self.evaluation.monitored.clone()
        };
        Ok(Resolved {
            plant,
            x0,
            events,
            settings: self.settings(seed),
            observer: self.observer.to_config(),
            monitored,
            state_window: window(self.evaluation.state_window),
            x2_window: window(self.evaluation.x2_window),
            trajectory_stride: self.output.trajectory_stride,
        })
    }
}
