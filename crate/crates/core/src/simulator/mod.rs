//! Fixed-step simulation of the coupled machines and network, event handling
//! and PMU sampling.
//!
//! Internally each machine carries its rotor angle `delta` (in the frame
//! rotating at `omega_s`) in place of the load angle; `x1 = delta - theta_t` is
//! recovered from the network solution at every evaluation, so it is always
//! consistent with the measured powers.

pub mod init;
pub mod noise;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{
    controller_derivatives, generator_derivatives, measure, GeneratorParams, MachineState,
    PmuSample, TerminalSignals,
};
use crate::network::{Load, ReducedNetwork};
pub use init::{initialize, OperatingPoint};
pub use noise::{NoiseConfig, NoiseKind, PmuNoise};

/// `(delta, x2, x3, Vf, q, Ef, p1, p2, p3)` of one machine.
pub type RotorState = [f64; 9];

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Right-hand side evaluated at one plant state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub deriv: Vec<RotorState>,
    pub terminals: Vec<TerminalSignals>,
    pub states: Vec<MachineState>,
}

/// Load transition between two settings with a cosine profile, so the
/// network (and every terminal phase) moves continuously.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ramp {
    t0: f64,
    duration: f64,
    from: Load,
    to: Load,
}

impl Ramp {
    fn active(&self, t: f64) -> bool {
        t >= self.t0 && t < self.t0 + self.duration
    }

    /// Load and its admittance rate at `t`.
    fn at(&self, t: f64) -> (Load, Complex64) {
        let s = ((t - self.t0) / self.duration).clamp(0.0, 1.0);
        let w = 0.5 * (1.0 - (PI * s).cos());
        let dw = 0.5 * PI * (PI * s).sin() / self.duration;
        let (dp, dq) = (self.to.p - self.from.p, self.to.q - self.from.q);
        let load = Load {
            bus: self.to.bus,
            p: self.from.p + w * dp,
            q: self.from.q + w * dq,
        };
        (load, Complex64::new(dp * dw, -dq * dw))
    }
}

/// Machines plus network.
#[derive(Debug, Clone)]
pub struct Plant {
    pub params: Vec<GeneratorParams>,
    pub net: ReducedNetwork,
    omega_s: f64,
    ramp_time: f64,
    ramps: Vec<Option<Ramp>>,
}

impl Plant {
    pub fn new(params: Vec<GeneratorParams>, net: ReducedNetwork) -> Result<Self> {
        if params.len() != net.n_machines() {
            return Err(Error::config(
                "machine",
                format!(
                    "{} machines but network has {}",
                    params.len(),
                    net.n_machines()
                ),
            ));
        }
        let omega_s = params[0].omega_s();
        if params.iter().any(|p| p.omega_s() != omega_s) {
            return Err(Error::config(
                "machine.omega_s",
                "all machines must share omega_s",
            ));
        }
        for (i, (p, &x)) in params.iter().zip(net.xdp()).enumerate() {
            if p.raw.xdp != x {
                return Err(Error::config(
                    format!("machine[{i}].xdp"),
                    "differs from the reactance used by the network",
                ));
            }
        }
        let ramps = vec![None; net.loads().len()];
        Ok(Self {
            params,
            net,
            omega_s,
            ramp_time: 0.0,
            ramps,
        })
    }

    /// Load changes take `seconds` to complete instead of switching at once.
    pub fn with_load_ramp(mut self, seconds: f64) -> Result<Self> {
        if !(seconds >= 0.0) {
            return Err(Error::config(
                "simulation.load_ramp",
                "must be non-negative",
            ));
        }
        self.ramp_time = seconds;
        Ok(self)
    }

    pub fn load_ramp(&self) -> f64 {
        self.ramp_time
    }

    /// Load values in effect at `t`.
    pub fn loads_at(&self, t: f64) -> Vec<Load> {
        self.net
            .loads()
            .iter()
            .zip(&self.ramps)
            .map(|(l, r)| match r {
                Some(r) if r.active(t) => r.at(t).0,
                _ => *l,
            })
            .collect()
    }

    /// Moves load `index` to `target`, starting at `t`.
    fn change_load(&mut self, index: usize, target: Load, t: f64) -> Result<()> {
        let from = *self
            .loads_at(t)
            .get(index)
            .ok_or_else(|| Error::config("event.load", format!("no load with index {index}")))?;
        self.net.set_load(index, target)?;
        self.ramps[index] = (self.ramp_time > 0.0).then_some(Ramp {
            t0: t,
            duration: self.ramp_time,
            from,
            to: target,
        });
        Ok(())
    }

    /// Network in effect at `t`.
    pub fn network_at(&self, t: f64) -> Result<Cow<'_, ReducedNetwork>> {
        if !self.ramps.iter().flatten().any(|r| r.active(t)) {
            return Ok(Cow::Borrowed(&self.net));
        }
        let (loads, rates): (Vec<Load>, Vec<Complex64>) = self
            .net
            .loads()
            .iter()
            .zip(&self.ramps)
            .map(|(l, r)| match r {
                Some(r) if r.active(t) => r.at(t),
                _ => (*l, Complex64::new(0.0, 0.0)),
            })
            .unzip();
        Ok(Cow::Owned(self.net.with_moving_loads(&loads, &rates)?))
    }

    pub fn n_machines(&self) -> usize {
        self.params.len()
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    pub fn evaluate(&self, t: f64, s: &[RotorState]) -> Result<Evaluation> {
        let net = self.network_at(t)?;
        let e: Vec<Complex64> = s
            .iter()
            .map(|m| Complex64::from_polar(m[2], m[0]))
            .collect();
        let v = net.terminal_phasors(&e)?;

        let n = s.len();
        let mut deriv = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        let mut e_dot = Vec::with_capacity(n);
        for ((m, p), v) in s.iter().zip(&self.params).zip(&v) {
            let vt = v.norm();
            let theta_t = v.arg();
            let ms = MachineState {
                x1: wrap_angle(m[0] - theta_t),
                x2: m[1],
                x3: m[2],
                vf: m[3],
                q: m[4],
                ef: m[5],
                p1: m[6],
                p2: m[7],
                p3: m[8],
            };
            // omega_t only enters the x1 equation, which is not integrated here
            let term = TerminalSignals {
                vt,
                theta_t,
                omega_t: self.omega_s,
            };
            let g = generator_derivatives(&ms, p, &term);
            let (c, _) = controller_derivatives(&ms, p, vt);
            deriv.push([m[1], g[1], g[2], c[0], c[1], c[2], c[3], c[4], c[5]]);
            e_dot.push(Complex64::from_polar(1.0, m[0]) * Complex64::new(g[2], m[2] * m[1]));
            states.push(ms);
        }
        let rates = net.phase_rates(&v, &e, &e_dot)?;
        let terminals = v
            .iter()
            .zip(rates)
            .map(|(v, w)| TerminalSignals {
                vt: v.norm(),
                theta_t: v.arg(),
                omega_t: self.omega_s + w,
            })
            .collect();
        Ok(Evaluation {
            deriv,
            terminals,
            states,
        })
    }

    /// One classical RK4 step; the network is re-solved at every stage.
    pub fn step(&self, t: f64, s: &[RotorState], dt: f64) -> Result<Vec<RotorState>> {
        let k1 = self.evaluate(t, s)?.deriv;
        self.step_with(t, s, &k1, dt)
    }

    /// RK4 step reusing an already computed first stage.
    pub fn step_with(
        &self,
        t: f64,
        s: &[RotorState],
        k1: &[RotorState],
        dt: f64,
    ) -> Result<Vec<RotorState>> {
        if !(dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        let shift = |k: &[RotorState], h: f64| -> Vec<RotorState> {
            s.iter()
                .zip(k)
                .map(|(x, d)| std::array::from_fn(|i| x[i] + h * d[i]))
                .collect()
        };
        let k2 = self.evaluate(t + 0.5 * dt, &shift(k1, 0.5 * dt))?.deriv;
        let k3 = self.evaluate(t + 0.5 * dt, &shift(&k2, 0.5 * dt))?.deriv;
        let k4 = self.evaluate(t + dt, &shift(&k3, dt))?.deriv;
        Ok(s.iter()
            .enumerate()
            .map(|(m, x)| {
                std::array::from_fn(|i| {
                    x[i] + dt / 6.0 * (k1[m][i] + 2.0 * k2[m][i] + 2.0 * k3[m][i] + k4[m][i])
                })
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventKind {
    FaultOn,
    FaultOff,
    /// Sets a load to absolute values.
    LoadSet {
        load: usize,
        p: f64,
        q: f64,
    },
    /// Adds to a load's current values.
    LoadStep {
        load: usize,
        dp: f64,
        #[serde(default)]
        dq: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    /// Faults switch at once; load changes follow the plant's ramp setting.
    fn apply(&self, plant: &mut Plant, t: f64) -> Result<()> {
        match &self.kind {
            EventKind::FaultOn => plant.net.set_fault(true),
            EventKind::FaultOff => plant.net.set_fault(false),
            EventKind::LoadSet { load, p, q } => {
                let bus = current_load(&plant.net, *load)?.bus;
                plant.change_load(*load, Load { bus, p: *p, q: *q }, t)
            }
            EventKind::LoadStep { load, dp, dq } => {
                let l = current_load(&plant.net, *load)?;
                let target = Load {
                    bus: l.bus,
                    p: l.p + dp,
                    q: l.q + dq,
                };
                plant.change_load(*load, target, t)
            }
        }
    }
}

fn current_load(net: &ReducedNetwork, index: usize) -> Result<Load> {
    net.loads()
        .get(index)
        .copied()
        .ok_or_else(|| Error::config("event.load", format!("no load with index {index}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub t_end: f64,
    pub dt: f64,
    pub pmu_rate: f64,
    pub noise: NoiseConfig,
    pub seed: u64,
}

impl SimSettings {
    /// Simulation steps between PMU samples.
    pub fn pmu_stride(&self) -> Result<usize> {
        let ratio = 1.0 / (self.pmu_rate * self.dt);
        let stride = ratio.round();
        if stride < 1.0 || (ratio - stride).abs() > 1e-6 * ratio {
            return Err(Error::config(
                "simulation.pmu_rate",
                format!("1/(pmu_rate*dt_sim) = {ratio} is not a whole number of simulation steps"),
            ));
        }
        Ok(stride as usize)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// RNG stream ids derived from the scenario seed.
pub const LOAD_STREAM: u64 = 1;
pub const NOISE_STREAM: u64 = 2;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulation record.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    /// `states[step][machine]`
    pub states: Vec<Vec<MachineState>>,
    pub terminals: Vec<Vec<TerminalSignals>>,
    /// Grid index of every PMU sample instant.
    pub pmu_steps: Vec<usize>,
    /// `pmu[sample][machine]`, noise included.
    pub pmu: Vec<Vec<PmuSample>>,
    /// Parameters after initialization (with `Tm` and `Vref` fixed).
    pub params: Vec<GeneratorParams>,
}

impl Trajectory {
    pub fn n_machines(&self) -> usize {
        self.params.len()
    }

    /// PMU stream of one machine.
    pub fn pmu_stream(&self, machine: usize) -> Vec<PmuSample> {
        self.pmu.iter().map(|s| s[machine]).collect()
    }

    /// True states of one machine at the PMU instants.
    pub fn states_at_pmu(&self, machine: usize) -> Vec<MachineState> {
        self.pmu_steps
            .iter()
            .map(|&k| self.states[k][machine])
            .collect()
    }

    pub fn terminals_at_pmu(&self, machine: usize) -> Vec<TerminalSignals> {
        self.pmu_steps
            .iter()
            .map(|&k| self.terminals[k][machine])
            .collect()
    }
}

/// Integrates the plant from `x0`, applying `events` at their (grid-quantized)
/// instants and sampling the PMUs every `1/pmu_rate` seconds.
pub fn simulate(
    mut plant: Plant,
    x0: Vec<RotorState>,
    mut events: Vec<Event>,
    settings: &SimSettings,
) -> Result<Trajectory> {
    if !(settings.dt > 0.0) {
        return Err(Error::config("simulation.dt_sim", "must be positive"));
    }
    if !(settings.t_end >= 0.0) {
        return Err(Error::config("simulation.t_end", "must be non-negative"));
    }
    let stride = settings.pmu_stride()?;
    let n_steps = settings.n_steps();
    for ev in &events {
        if !(ev.t >= 0.0 && ev.t <= settings.t_end) {
            return Err(Error::config(
                "event.t",
                format!("time {} outside [0, t_end]", ev.t),
            ));
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut next_event = 0;

    let n = plant.n_machines();
    let mut noise: Vec<PmuNoise> = (0..n).map(|_| PmuNoise::new(settings.noise)).collect();
    let mut rng = seeded_rng(settings.seed, NOISE_STREAM);

    let mut traj = Trajectory {
        dt: settings.dt,
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        terminals: Vec::with_capacity(n_steps + 1),
        pmu_steps: Vec::with_capacity(n_steps / stride + 1),
        pmu: Vec::with_capacity(n_steps / stride + 1),
        params: plant.params.clone(),
    };

    let mut x = x0;
    for k in 0..=n_steps {
        let t = k as f64 * settings.dt;
        while next_event < events.len()
            && (events[next_event].t / settings.dt).round() as usize == k
        {
            events[next_event].apply(&mut plant, t)?;
            next_event += 1;
        }
        let eval = plant.evaluate(t, &x)?;
        if k % stride == 0 {
            let row = eval
                .states
                .iter()
                .zip(&eval.terminals)
                .zip(&plant.params)
                .zip(noise.iter_mut())
                .map(|(((s, term), p), nz)| {
                    let clean = measure(t, s.x1, s.x3, term.vt, term.omega_t, p.y);
                    nz.apply(clean, &mut rng)
                })
                .collect();
            traj.pmu_steps.push(k);
            traj.pmu.push(row);
        }
        traj.times.push(t);
        traj.states.push(eval.states);
        traj.terminals.push(eval.terminals);
        if k < n_steps {
            x = plant.step_with(t, &x, &eval.deriv, settings.dt)?;
        }
    }
    Ok(traj)
}

/// How a varied load picks its next level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadPattern {
    /// Fresh uniform draw in `[min, max]` every interval.
    #[default]
    Uniform,
    /// Uniform step in `[-step, step]` from the previous level, clipped to
    /// `[min, max]`.
    Walk,
}

/// Seeded random variation of load active power around nominal.
///
/// From `start` on, every `interval` seconds each selected load moves to
/// `nominal + deviation`, the deviation following `pattern`. A walk starts
/// from `offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadVariation {
    #[serde(default = "default_interval")]
    pub interval: f64,
    #[serde(default = "default_interval")]
    pub start: f64,
    #[serde(default)]
    pub pattern: LoadPattern,
    #[serde(default)]
    pub step: f64,
    #[serde(default)]
    pub offset: f64,
    pub min: f64,
    pub max: f64,
    /// Load indices; all loads when empty.
    #[serde(default)]
    pub loads: Vec<usize>,
    /// Draw seed; the run seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_interval() -> f64 {
    1.0
}

impl LoadVariation {
    pub fn check(&self) -> Result<()> {
        let key = |k: &str| format!("load_variation.{k}");
        if !(self.interval > 0.0) {
            return Err(Error::config(key("interval"), "must be positive"));
        }
        if !(self.start >= 0.0) {
            return Err(Error::config(key("start"), "must be non-negative"));
        }
        if !(self.step >= 0.0) {
            return Err(Error::config(key("step"), "must be non-negative"));
        }
        if self.pattern == LoadPattern::Walk && self.step == 0.0 {
            return Err(Error::config(key("step"), "a walk needs a positive step"));
        }
        if !(self.min <= self.max) {
            return Err(Error::config(key("min"), "must not exceed max"));
        }
        Ok(())
    }

    /// Load-set events up to `t_end`, drawn from the load stream of
    /// `self.seed`, or of `seed` when that is unset.
    pub fn events(&self, nominal: &[Load], t_end: f64, seed: u64) -> Result<Vec<Event>> {
        self.check()?;
        let selected: Vec<usize> = if self.loads.is_empty() {
            (0..nominal.len()).collect()
        } else {
            self.loads.clone()
        };
        if let Some(&bad) = selected.iter().find(|&&i| i >= nominal.len()) {
            return Err(Error::config(
                "load_variation.loads",
                format!("no load with index {bad}"),
            ));
        }
        let mut rng = seeded_rng(self.seed.unwrap_or(seed), LOAD_STREAM);
        let mut dev = vec![self.offset.clamp(self.min, self.max); selected.len()];
        let mut events = vec![];
        let mut k = 0u64;
        loop {
            let t = self.start + k as f64 * self.interval;
            if t > t_end {
                break;
            }
            for d in dev.iter_mut() {
                *d = match self.pattern {
                    LoadPattern::Uniform => rng.random_range(self.min..=self.max),
                    LoadPattern::Walk if k == 0 => *d,
                    LoadPattern::Walk => {
                        (*d + self.step * rng.random_range(-1.0..=1.0)).clamp(self.min, self.max)
                    }
                };
            }
            for (d, &i) in dev.iter().zip(&selected) {
                events.push(Event {
                    t,
                    kind: EventKind::LoadSet {
                        load: i,
                        p: nominal[i].p + *d,
                        q: nominal[i].q,
                    },
                });
            }
            k += 1;
        }
        Ok(events)
    }
}
