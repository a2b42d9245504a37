//! Immersion and invariance observer for the rotor speed deviation `x2`.
//!
//! `x2_hat = xI + k*x1`, where the integral part follows
//!
//! ```text
//! xI' = -(a1 + k)(xI + k x1) + k (omega_t - omega_s) + a2 (Tm - y2)
//! ```
//!
//! With exact parameters the error `x2_hat - x2` decays as
//! `exp(-(a1 + k) t)`. The adaptive form replaces `(a1, a2, a2*Tm)` by the
//! running estimates.

use crate::error::{Error, Result};
use crate::integrate::{lerp, rk4};

/// Signals driving the observer at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverInputs {
    pub x1: f64,
    pub omega_t: f64,
    pub y2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IiiObserver {
    k: f64,
    omega_s: f64,
    xi: f64,
    last: ObserverInputs,
}

impl IiiObserver {
    /// Starts with `x2_hat = 0`.
    pub fn new(k: f64, omega_s: f64, first: ObserverInputs) -> Result<Self> {
        Self::with_initial(k, omega_s, first, 0.0)
    }

    /// Starts with a given `x2_hat(0)`.
    pub fn with_initial(k: f64, omega_s: f64, first: ObserverInputs, x2_hat0: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::param("k", format!("must be positive, got {k}")));
        }
        Ok(Self {
            k,
            omega_s,
            xi: x2_hat0 - k * first.x1,
            last: first,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn x_i(&self) -> f64 {
        self.xi
    }

    pub fn x2_hat(&self) -> f64 {
        self.xi + self.k * self.last.x1
    }

    /// Advances with known `theta = (a1, a2, a2*Tm)`.
    pub fn step_known(&mut self, next: ObserverInputs, a1: f64, a2: f64, tm: f64, dt: f64) -> f64 {
        self.step_adaptive(next, [a1, a2, a2 * tm], dt)
    }

    /// Advances with the current parameter estimate held over the step.
    pub fn step_adaptive(&mut self, next: ObserverInputs, theta: [f64; 3], dt: f64) -> f64 {
        let (k, ws, u0) = (self.k, self.omega_s, self.last);
        self.xi = rk4([self.xi], dt, |s, x| {
            let x1 = lerp(u0.x1, next.x1, s);
            let wt = lerp(u0.omega_t, next.omega_t, s);
            let y2 = lerp(u0.y2, next.y2, s);
            [-(theta[0] + k) * (x[0] + k * x1) + k * (wt - ws) - theta[1] * y2 + theta[2]]
        })[0];
        self.last = next;
        self.x2_hat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OMEGA_S_60HZ;

    const WS: f64 = OMEGA_S_60HZ;

    /// Synthetic single-machine trajectory obeying the mechanical equations
    /// exactly: x2 and omega_t are prescribed, x1 and y2 follow from them.
    fn synthetic(t: f64, a1: f64, a2: f64, tm: f64) -> (ObserverInputs, f64) {
        let x2 = 0.1 * (1.3 * t).sin();
        let x2d = 0.13 * (1.3 * t).cos();
        let dw = 0.05 * (0.7 * t).cos();
        // x1 = int (x2 - dw)
        let x1 = 0.3 + 0.1 / 1.3 * (1.0 - (1.3 * t).cos()) - 0.05 / 0.7 * (0.7 * t).sin();
        let y2 = tm - (x2d + a1 * x2) / a2;
        (
            ObserverInputs {
                x1,
                omega_t: WS + dw,
                y2,
            },
            x2,
        )
    }

    #[test]
    fn rejects_nonpositive_gain() {
        let u = ObserverInputs {
            x1: 0.0,
            omega_t: WS,
            y2: 0.0,
        };
        assert!(IiiObserver::new(0.0, WS, u).is_err());
    }

    #[test]
    fn output_identity_and_zero_start() {
        let u = ObserverInputs {
            x1: 0.4,
            omega_t: WS,
            y2: 0.8,
        };
        let o = IiiObserver::new(1.0, WS, u).unwrap();
        assert_eq!(o.x2_hat(), 0.0);
        assert_eq!(o.x_i(), -0.4);
    }

    #[test]
    fn error_follows_exponential_law() {
        let (a1, a2, tm, k) = (0.5, 30.0, 0.8, 1.0);
        let dt = 1e-3;
        let (u0, x20) = synthetic(0.0, a1, a2, tm);
        let mut o = IiiObserver::with_initial(k, WS, u0, 0.2).unwrap();
        let e0 = o.x2_hat() - x20;
        for n in 1..=5000 {
            let t = n as f64 * dt;
            let (u, x2) = synthetic(t, a1, a2, tm);
            let e = o.step_known(u, a1, a2, tm, dt) - x2;
            let want = e0 * (-(a1 + k) * t).exp();
            assert!(
                (e - want).abs() < 1e-6 * want.abs() + 1e-7,
                "t={t}: {e} vs {want}"
            );
        }
    }

    #[test]
    fn stays_on_invariant_manifold() {
        let (a1, a2, tm, k) = (0.5, 30.0, 0.8, 1.0);
        let dt = 1e-3;
        let (u0, x20) = synthetic(0.0, a1, a2, tm);
        let mut o = IiiObserver::with_initial(k, WS, u0, x20).unwrap();
        for n in 1..=10000 {
            let (u, x2) = synthetic(n as f64 * dt, a1, a2, tm);
            assert!((o.step_known(u, a1, a2, tm, dt) - x2).abs() < 1e-7);
        }
    }

    #[test]
    fn equilibrium_converges_to_zero() {
        let (a1, a2, tm) = (0.5, 30.0, 0.8);
        let u = ObserverInputs {
            x1: 0.6,
            omega_t: WS,
            y2: tm,
        };
        let mut o = IiiObserver::with_initial(1.0, WS, u, 0.3).unwrap();
        for _ in 0..1200 {
            o.step_known(u, a1, a2, tm, 1.0 / 60.0);
        }
        assert!(o.x2_hat().abs() < 1e-8);
    }

    #[test]
    fn adaptive_with_true_theta_matches_known() {
        let (a1, a2, tm) = (0.5, 30.0, 0.8);
        let (u0, _) = synthetic(0.0, a1, a2, tm);
        let mut a = IiiObserver::new(1.0, WS, u0).unwrap();
        let mut b = a;
        for n in 1..300 {
            let (u, _) = synthetic(n as f64 / 60.0, a1, a2, tm);
            let xa = a.step_known(u, a1, a2, tm, 1.0 / 60.0);
            let xb = b.step_adaptive(u, [a1, a2, a2 * tm], 1.0 / 60.0);
            assert_eq!(xa, xb);
        }
    }

    #[test]
    fn cascade_converges_as_theta_converges() {
        let (a1, a2, tm) = (0.5, 30.0, 0.8);
        let theta = [a1, a2, a2 * tm];
        let dt = 1.0 / 60.0;
        let (u0, _) = synthetic(0.0, a1, a2, tm);
        let mut known = IiiObserver::new(1.0, WS, u0).unwrap();
        let mut adaptive = known;
        let mut gap = 0.0;
        for n in 1..=1800 {
            let t = n as f64 * dt;
            let (u, _) = synthetic(t, a1, a2, tm);
            let w = 1.0 - (-0.5 * t).exp();
            let th = theta.map(|v| v * (0.5 + 0.5 * w));
            let xk = known.step_known(u, a1, a2, tm, dt);
            let xa = adaptive.step_adaptive(u, th, dt);
            gap = (xk - xa).abs();
        }
        assert!(gap < 1e-4, "{gap}");
    }
}
