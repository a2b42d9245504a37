//! Online identification of `theta = (a1, a2, a2*Tm)` by dynamic regressor
//! extension and mixing.
//!
//! The mechanical dynamics give the linear regression `z = psi^T theta` with
//!
//! ```text
//! z   = F2[x1] + F1[omega_t]
//! psi = (-F1[x1] - F0[omega_t - omega_s], -F0[y2], F0[step])
//! ```
//!
//! where `F0, F1, F2` are `l^2/(p+l)^2`, `l^2 p/(p+l)^2` and
//! `l^2 p^2/(p+l)^2`. A stable single-input three-output operator `H` extends
//! it to `Z = Psi theta`; multiplying by `adj(Psi)` decouples it into three
//! scalar regressions `calZ_j = Delta theta_j`, each with its own gradient
//! estimator.
//!
//! All filters run at the sample rate of their inputs with RK4, inputs
//! linearly interpolated between consecutive samples.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::integrate::{lerp, rk4};

/// Outputs of the three-filter family for one input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterOutputs {
    /// `l^2/(p+l)^2 [u]`
    pub f0: f64,
    /// `l^2 p/(p+l)^2 [u]`
    pub f1: f64,
    /// `l^2 p^2/(p+l)^2 [u]`
    pub f2: f64,
}

/// Shared second-order realization of the `F0, F1, F2` family:
/// `x1' = x2`, `x2' = -2 l x2 - l^2 x1 + u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    lambda: f64,
    x: [f64; 2],
}

impl FilterBank {
    pub fn new(lambda: f64) -> Self {
        assert!(lambda > 0.0, "filter parameter must be positive");
        Self {
            lambda,
            x: [0.0; 2],
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn outputs(&self, u: f64) -> FilterOutputs {
        let l = self.lambda;
        let l2 = l * l;
        FilterOutputs {
            f0: l2 * self.x[0],
            f1: l2 * self.x[1],
            f2: l2 * (u - 2.0 * l * self.x[1] - l2 * self.x[0]),
        }
    }

    /// Advances from input `u0` to input `u1` over `dt` and returns the
    /// outputs at the end of the step.
    pub fn step(&mut self, u0: f64, u1: f64, dt: f64) -> FilterOutputs {
        let l = self.lambda;
        self.x = rk4(self.x, dt, |s, x| {
            [x[1], -2.0 * l * x[1] - l * l * x[0] + lerp(u0, u1, s)]
        });
        self.outputs(u1)
    }
}

/// Regression pair `(z, psi)` from the filtered signals.
pub fn build_regressor(
    x1: &FilterOutputs,
    dw: &FilterOutputs,
    y2: &FilterOutputs,
    step: &FilterOutputs,
) -> (f64, [f64; 3]) {
    let z = x1.f2 + dw.f1;
    let psi = [-x1.f1 - dw.f0, -y2.f0, step.f0];
    (z, psi)
}

/// Constants of the operator `H(s) = [1, e^{-s d1}, (s+k1)/(s+k2) e^{-s d2}]^T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HParams {
    pub k1: f64,
    pub k2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for HParams {
    fn default() -> Self {
        Self {
            k1: 6.0,
            k2: 4.0,
            d1: 4.0,
            d2: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Delay {
    buf: VecDeque<f64>,
}

impl Delay {
    fn new(samples: usize) -> Self {
        Self {
            buf: std::iter::repeat_n(0.0, samples).collect(),
        }
    }

    fn push(&mut self, u: f64) -> f64 {
        self.buf.push_back(u);
        self.buf.pop_front().unwrap_or(u)
    }
}

/// Single-input three-output operator applied to a uniformly sampled stream.
#[derive(Debug, Clone, PartialEq)]
pub struct HOperator {
    params: HParams,
    dt: f64,
    delay1: Delay,
    delay2: Delay,
    // lead-lag state: x' = -k2 x + u, out = u + (k1 - k2) x
    lead: f64,
    last_u: Option<f64>,
}

impl HOperator {
    pub fn new(params: HParams, dt: f64) -> Self {
        assert!(params.k2 > 0.0, "lead-lag pole must be stable");
        assert!(
            params.d1 >= 0.0 && params.d2 >= 0.0,
            "delays must be non-negative"
        );
        Self {
            params,
            dt,
            delay1: Delay::new((params.d1 / dt).round() as usize),
            delay2: Delay::new((params.d2 / dt).round() as usize),
            lead: 0.0,
            last_u: None,
        }
    }

    /// Feeds the next sample and returns the three channels at its instant.
    pub fn push(&mut self, u: f64) -> [f64; 3] {
        let HParams { k1, k2, .. } = self.params;
        if let Some(u0) = self.last_u {
            self.lead = rk4([self.lead], self.dt, |s, x| [-k2 * x[0] + lerp(u0, u, s)])[0];
        }
        self.last_u = Some(u);
        let ll = u + (k1 - k2) * self.lead;
        [u, self.delay1.push(u), self.delay2.push(ll)]
    }
}

/// `(adj(Psi) * Z, det(Psi))` by explicit cofactors.
pub fn mix(z: &[f64; 3], psi: &[[f64; 3]; 3]) -> ([f64; 3], f64) {
    let m = psi;
    let cof =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    // adj[i][j] = cofactor C[j][i]
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
    let calz = std::array::from_fn(|i| (0..3).map(|j| adj[i][j] * z[j]).sum());
    (calz, det)
}

/// Largest `rate * h` an RK4 substep may take on a decaying mode; small
/// enough that the decay itself is reproduced to about 1e-9 per substep.
const STIFF_LIMIT: f64 = 0.05;
const MAX_SUBSTEPS: usize = 1 << 16;

/// RK4 over `[0, dt]` split into enough equal substeps that `rate * h` stays
/// below [`STIFF_LIMIT`]. `f` receives the fraction of the full step.
fn rk4_split<const N: usize>(
    x: [f64; N],
    dt: f64,
    rate: f64,
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
) -> [f64; N] {
    let n = ((rate * dt / STIFF_LIMIT).ceil() as usize).clamp(1, MAX_SUBSTEPS);
    let h = dt / n as f64;
    (0..n).fold(x, |x, i| rk4(x, h, |s, y| f((i as f64 + s) / n as f64, y)))
}

/// Integrates `theta_j' = -gamma_j Delta (Delta theta_j - calZ_j)` over one
/// step with `Delta` and `calZ` interpolated linearly between the samples.
/// Steps where `gamma_j Delta^2` is large are split into RK4 substeps.
pub fn drem_update(
    theta: [f64; 3],
    delta: (f64, f64),
    calz: ([f64; 3], [f64; 3]),
    gamma: [f64; 3],
    dt: f64,
) -> [f64; 3] {
    let d2 = delta.0.powi(2).max(delta.1.powi(2));
    std::array::from_fn(|j| {
        rk4_split([theta[j]], dt, gamma[j] * d2, |s, x| {
            let d = lerp(delta.0, delta.1, s);
            let c = lerp(calz.0[j], calz.1[j], s);
            [-gamma[j] * d * (d * x[0] - c)]
        })[0]
    })
}

/// `int Delta^2 dt` over one step with `Delta` linear in time.
pub fn excitation_increment(delta: (f64, f64), dt: f64) -> f64 {
    let (a, b) = delta;
    dt * (a * a + a * b + b * b) / 3.0
}

/// Classical vector gradient estimator `theta' = -Gamma psi (psi^T theta - z)`
/// with diagonal `Gamma`, substepped like [`drem_update`].
pub fn gradient_update(
    theta: [f64; 3],
    psi: ([f64; 3], [f64; 3]),
    z: (f64, f64),
    gain: [f64; 3],
    dt: f64,
) -> [f64; 3] {
    let rate = |p: &[f64; 3]| (0..3).map(|i| gain[i] * p[i] * p[i]).sum::<f64>();
    rk4_split(theta, dt, rate(&psi.0).max(rate(&psi.1)), |s, th| {
        let p: [f64; 3] = std::array::from_fn(|i| lerp(psi.0[i], psi.1[i], s));
        let e = p[0] * th[0] + p[1] * th[1] + p[2] * th[2] - lerp(z.0, z.1, s);
        std::array::from_fn(|i| -gain[i] * p[i] * e)
    })
}

/// Excitation integral together with whether it grew since the previous
/// report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcitationReport {
    pub integral: f64,
    pub grew: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DremConfig {
    pub lambda: f64,
    pub h: HParams,
    pub gamma: [f64; 3],
}

impl Default for DremConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            h: HParams::default(),
            gamma: [1.5e7; 3],
        }
    }
}

/// Signals consumed by the estimator at one sample instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorInputs {
    /// Load angle, offset by its value at the first sample.
    pub x1: f64,
    /// `omega_t - omega_s`.
    pub dw: f64,
    /// Active power.
    pub y2: f64,
}

/// Snapshot after one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DremOutput {
    pub theta: [f64; 3],
    pub z: f64,
    pub psi: [f64; 3],
    pub delta: f64,
    pub calz: [f64; 3],
    pub excitation: f64,
}

/// Classical gradient estimator run alongside for comparison.
#[derive(Debug, Clone, Copy)]
struct GradientBaseline {
    gain: [f64; 3],
    theta: [f64; 3],
    /// `(z, psi)` at the previous sample.
    prev: (f64, [f64; 3]),
}

/// Complete per-machine estimator: filters, `H`, mixing and scalar updates.
#[derive(Debug, Clone)]
pub struct DremEstimator {
    config: DremConfig,
    dt: f64,
    filters: [FilterBank; 4],
    h: [HOperator; 4],
    prev_inputs: Option<[f64; 4]>,
    prev: Option<(f64, [f64; 3])>,
    theta: [f64; 3],
    excitation: f64,
    reported: f64,
    gradient: Option<GradientBaseline>,
}

impl DremEstimator {
    pub fn new(config: DremConfig, dt: f64) -> Self {
        let fb = FilterBank::new(config.lambda);
        let h = HOperator::new(config.h, dt);
        Self {
            config,
            dt,
            filters: [fb.clone(), fb.clone(), fb.clone(), fb],
            h: [h.clone(), h.clone(), h.clone(), h],
            prev_inputs: None,
            prev: None,
            theta: [0.0; 3],
            excitation: 0.0,
            reported: 0.0,
            gradient: None,
        }
    }

    /// Runs the classical gradient estimator on the same regression as a
    /// baseline.
    pub fn with_gradient_baseline(mut self, gain: [f64; 3]) -> Self {
        self.gradient = Some(GradientBaseline {
            gain,
            theta: [0.0; 3],
            prev: (0.0, [0.0; 3]),
        });
        self
    }

    pub fn theta(&self) -> [f64; 3] {
        self.theta
    }

    pub fn gradient_theta(&self) -> Option<[f64; 3]> {
        self.gradient.map(|g| g.theta)
    }

    pub fn excitation(&self) -> f64 {
        self.excitation
    }

    pub fn excitation_report(&mut self) -> ExcitationReport {
        let r = ExcitationReport {
            integral: self.excitation,
            grew: self.excitation > self.reported,
        };
        self.reported = self.excitation;
        r
    }

    /// Consumes the next sample. The first call only primes the filters.
    pub fn update(&mut self, inp: RegressorInputs) -> DremOutput {
        let u = [inp.x1, inp.dw, inp.y2, 1.0];
        let dt = self.dt;
        let outs: [FilterOutputs; 4] = match self.prev_inputs {
            Some(u0) => std::array::from_fn(|i| self.filters[i].step(u0[i], u[i], dt)),
            None => std::array::from_fn(|i| self.filters[i].outputs(u[i])),
        };
        self.prev_inputs = Some(u);
        let (z, psi) = build_regressor(&outs[0], &outs[1], &outs[2], &outs[3]);

        let zc = self.h[0].push(z);
        let cols: [[f64; 3]; 3] = std::array::from_fn(|j| self.h[j + 1].push(psi[j]));
        // Psi row r holds channel r of every regressor component
        let psi_ext: [[f64; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|j| cols[j][r]));
        let (calz, delta) = mix(&zc, &psi_ext);

        if let Some((d0, c0)) = self.prev {
            self.theta = drem_update(self.theta, (d0, delta), (c0, calz), self.config.gamma, dt);
            self.excitation += excitation_increment((d0, delta), dt);
        }
        self.prev = Some((delta, calz));

        if let Some(g) = &mut self.gradient {
            let (z0, p0) = g.prev;
            if self.excitation > 0.0 || z0 != 0.0 {
                g.theta = gradient_update(g.theta, (p0, psi), (z0, z), g.gain, dt);
            }
            g.prev = (z, psi);
        }

        DremOutput {
            theta: self.theta,
            z,
            psi,
            delta,
            calz,
            excitation: self.excitation,
        }
    }
}
