//! Per-machine observer chain over a PMU stream: algebraic `x1`, `x3`, DREM
//! identification and the I&I speed observer.
//!
//! Every machine only sees its own PMU and its own `Y`.

use serde::{Deserialize, Serialize};

use crate::algebraic::{estimate, X3Method};
use crate::drem::{DremConfig, DremEstimator, RegressorInputs};
use crate::error::{Error, Result};
use crate::iii::{IiiObserver, ObserverInputs};
use crate::model::{GeneratorParams, PmuSample};

/// Parameters fed to the speed observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterSource {
    /// DREM estimates (certainty equivalence).
    #[default]
    Adaptive,
    /// The machine's true `(a1, a2, a2*Tm)`.
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverConfig {
    pub drem: DremConfig,
    pub k: f64,
    pub x3_method: X3Method,
    pub parameters: ParameterSource,
    pub gradient_gain: Option<[f64; 3]>,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            drem: DremConfig::default(),
            k: 1.0,
            x3_method: X3Method::Primary,
            parameters: ParameterSource::Adaptive,
            gradient_gain: None,
        }
    }
}

/// One row of observer output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub t: f64,
    pub x1_hat: f64,
    pub x3_hat: f64,
    pub x2_hat: f64,
    pub clamped: bool,
    pub theta_hat: [f64; 3],
    pub delta: f64,
    pub excitation: f64,
    pub gradient_theta: Option<[f64; 3]>,
}

/// Observer state of one machine.
#[derive(Debug, Clone)]
pub struct MachineObserver {
    config: ObserverConfig,
    y: f64,
    omega_s: f64,
    true_theta: [f64; 3],
    dt: f64,
    drem: DremEstimator,
    iii: Option<IiiObserver>,
    x1_origin: f64,
    last_t: Option<f64>,
}

impl MachineObserver {
    /// `params` provides `Y` and `omega_s`, and the true parameters when the
    /// observer runs with known parameters.
    pub fn new(config: ObserverConfig, params: &GeneratorParams, pmu_rate: f64) -> Result<Self> {
        if !(config.k > 0.0) {
            return Err(Error::param("observer.k", "must be positive"));
        }
        if !(config.drem.lambda > 0.0) {
            return Err(Error::param("observer.lambda", "must be positive"));
        }
        let dt = 1.0 / pmu_rate;
        let mut drem = DremEstimator::new(config.drem, dt);
        if let Some(g) = config.gradient_gain {
            drem = drem.with_gradient_baseline(g);
        }
        Ok(Self {
            config,
            y: params.y,
            omega_s: params.omega_s(),
            true_theta: params.theta(),
            dt,
            drem,
            iii: None,
            x1_origin: 0.0,
            last_t: None,
        })
    }

    pub fn drem(&mut self) -> &mut DremEstimator {
        &mut self.drem
    }

    /// Consumes the next sample of the uniform stream.
    pub fn process(&mut self, sample: &PmuSample) -> Result<EstimateRow> {
        if let Some(t0) = self.last_t {
            if ((sample.t - t0) - self.dt).abs() > 1e-6 * self.dt {
                return Err(Error::InvalidSample {
                    t: sample.t,
                    reason: format!("expected spacing {}, got {}", self.dt, sample.t - t0),
                });
            }
        }
        self.last_t = Some(sample.t);

        let alg = estimate(sample, self.y, self.config.x3_method)?;
        let omega_t = sample.omega_t();
        if self.iii.is_none() {
            self.x1_origin = alg.x1_hat;
        }
        let out = self.drem.update(RegressorInputs {
            x1: alg.x1_hat - self.x1_origin,
            dw: omega_t - self.omega_s,
            y2: sample.y2,
        });
        let inputs = ObserverInputs {
            x1: alg.x1_hat,
            omega_t,
            y2: sample.y2,
        };
        let theta = match self.config.parameters {
            ParameterSource::Adaptive => out.theta,
            ParameterSource::Known => self.true_theta,
        };
        let x2_hat = match &mut self.iii {
            None => {
                let o = IiiObserver::new(self.config.k, self.omega_s, inputs)?;
                self.iii = Some(o);
                o.x2_hat()
            }
            Some(o) => o.step_adaptive(inputs, theta, self.dt),
        };
        Ok(EstimateRow {
            t: sample.t,
            x1_hat: alg.x1_hat,
            x3_hat: alg.x3_hat,
            x2_hat,
            clamped: alg.clamped,
            theta_hat: out.theta,
            delta: out.delta,
            excitation: out.excitation,
            gradient_theta: self.drem.gradient_theta(),
        })
    }
}

/// Runs a fresh observer over a whole stream.
pub fn observe(
    config: ObserverConfig,
    params: &GeneratorParams,
    pmu_rate: f64,
    stream: &[PmuSample],
) -> Result<Vec<EstimateRow>> {
    let mut obs = MachineObserver::new(config, params, pmu_rate)?;
    stream.iter().map(|s| obs.process(s)).collect()
}
