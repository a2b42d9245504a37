//! Instantaneous reconstruction of the load angle `x1` and the internal
//! voltage `x3` from a single PMU frame and the transient admittance `Y`.
//!
//! Under noise the radicands can turn negative and the arcsine argument can
//! leave `[-1, 1]`; such values are clamped and the estimate is flagged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PmuSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum X3Method {
    /// From reactive power and current magnitude.
    #[default]
    Primary,
    /// From active power and current magnitude.
    Alternative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicEstimate {
    pub t: f64,
    pub x1_hat: f64,
    pub x3_hat: f64,
    pub clamped: bool,
}

fn check(sample: &PmuSample, y: f64) -> Result<()> {
    if !(y > 0.0) {
        return Err(Error::param("Y", format!("must be positive, got {y}")));
    }
    if !(sample.y1 > 0.0) {
        return Err(Error::InvalidSample {
            t: sample.t,
            reason: format!("terminal voltage y1={} is not positive", sample.y1),
        });
    }
    Ok(())
}

/// `x3 = sqrt((y4^2 + 2*Y*y3)/Y^2 + y1^2)`.
pub fn estimate_x3(sample: &PmuSample, y: f64) -> Result<(f64, bool)> {
    check(sample, y)?;
    let r = (sample.y4 * sample.y4 + 2.0 * y * sample.y3) / (y * y) + sample.y1 * sample.y1;
    Ok((r.max(0.0).sqrt(), r < 0.0))
}

/// `x3 = sqrt((y4^2 + Y^2*y1^2 +/- 2*sqrt(Y^2*(y4^2*y1^2 - y2^2))) / Y^2)`.
///
/// Active power, voltage and current magnitude admit two internal voltages
/// that differ in the sign of `x3*cos(x1) - Vt`. That sign equals the sign of
/// the reactive power, so only `sign(y3)` is used to pick the root.
pub fn estimate_x3_alt(sample: &PmuSample, y: f64) -> Result<(f64, bool)> {
    check(sample, y)?;
    let (y1, y2, y4) = (sample.y1, sample.y2, sample.y4);
    let inner = y * y * (y4 * y4 * y1 * y1 - y2 * y2);
    let branch = if sample.y3 >= 0.0 { 2.0 } else { -2.0 };
    let r = (y4 * y4 + y * y * y1 * y1 + branch * inner.max(0.0).sqrt()) / (y * y);
    Ok((r.max(0.0).sqrt(), inner < 0.0 || r < 0.0))
}

/// `x1 = asin(y2 / (Y*y1*x3))` on the principal branch.
pub fn estimate_x1(sample: &PmuSample, y: f64, x3_hat: f64) -> Result<(f64, bool)> {
    check(sample, y)?;
    if !(x3_hat > 0.0) {
        return Err(Error::DegenerateEstimate {
            t: sample.t,
            reason: "internal voltage estimate is zero".into(),
        });
    }
    let arg = sample.y2 / (y * sample.y1 * x3_hat);
    let clamped = !(-1.0..=1.0).contains(&arg);
    Ok((arg.clamp(-1.0, 1.0).asin(), clamped))
}

/// Both states from one frame.
pub fn estimate(sample: &PmuSample, y: f64, method: X3Method) -> Result<AlgebraicEstimate> {
    let (x3_hat, c3) = match method {
        X3Method::Primary => estimate_x3(sample, y)?,
        X3Method::Alternative => estimate_x3_alt(sample, y)?,
    };
    let (x1_hat, c1) = estimate_x1(sample, y, x3_hat)?;
    Ok(AlgebraicEstimate {
        t: sample.t,
        x1_hat,
        x3_hat,
        clamped: c1 || c3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{measure, OMEGA_S_60HZ};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sample(x1: f64, x3: f64, vt: f64, y: f64) -> PmuSample {
        measure(0.0, x1, x3, vt, OMEGA_S_60HZ, y)
    }

    #[test]
    fn round_trip_reference_point() {
        let s = sample(0.4, 1.1, 1.02, 7.576);
        let (x3, c) = estimate_x3(&s, 7.576).unwrap();
        assert!(!c);
        assert!((x3 - 1.1).abs() < 1e-12);
        let (x1, c) = estimate_x1(&s, 7.576, x3).unwrap();
        assert!(!c);
        assert!((x1 - 0.4).abs() < 1e-12);
        let (x3a, _) = estimate_x3_alt(&s, 7.576).unwrap();
        assert!((x3a - x3).abs() < 1e-10);
    }

    #[test]
    fn zero_angle_closes_exactly() {
        let (x3, vt, y) = (1.3, 1.0, 4.0);
        let s = PmuSample {
            t: 0.0,
            y1: vt,
            y2: 0.0,
            y3: y * (vt * x3 - vt * vt),
            y4: y * (x3 - vt),
            y5: 60.0,
        };
        assert_relative_eq!(estimate_x3(&s, y).unwrap().0, x3, max_relative = 1e-15);
        // zero active power with x3 > Vt: alt reduces to (y4 + Y*y1)/Y
        assert_relative_eq!(
            estimate_x3_alt(&s, y).unwrap().0,
            (s.y4 + y * vt) / y,
            max_relative = 1e-15
        );
        assert_eq!(estimate_x1(&s, y, x3).unwrap().0, 0.0);
    }

    #[test]
    fn clamps_and_flags_under_noise() {
        let mut s = sample(0.2, 1.0, 1.0, 5.0);
        s.y3 = -10.0;
        let (x3, c) = estimate_x3(&s, 5.0).unwrap();
        assert!(c);
        assert_eq!(x3, 0.0);

        let s = sample(1.5, 1.0, 1.0, 5.0);
        let (x1, c) = estimate_x1(&s, 5.0, 0.9).unwrap();
        assert!(c);
        assert_eq!(x1, std::f64::consts::FRAC_PI_2);

        let mut s = sample(0.3, 1.0, 1.0, 5.0);
        s.y2 = 50.0;
        assert!(estimate_x3_alt(&s, 5.0).unwrap().1);
    }

    #[test]
    fn error_paths() {
        let mut s = sample(0.2, 1.0, 1.0, 5.0);
        assert!(matches!(
            estimate_x1(&s, 5.0, 0.0),
            Err(Error::DegenerateEstimate { .. })
        ));
        s.y1 = 0.0;
        assert!(matches!(
            estimate_x3(&s, 5.0),
            Err(Error::InvalidSample { .. })
        ));
        assert!(matches!(
            estimate_x3_alt(&s, 5.0),
            Err(Error::InvalidSample { .. })
        ));
    }

    #[test]
    fn stateless_under_permutation() {
        let samples: Vec<_> = (0..20)
            .map(|k| sample(0.05 * k as f64 - 0.4, 1.1, 1.0, 6.0))
            .collect();
        let fwd: Vec<_> = samples
            .iter()
            .map(|s| estimate(s, 6.0, X3Method::Primary).unwrap())
            .collect();
        let rev: Vec<_> = samples
            .iter()
            .rev()
            .map(|s| estimate(s, 6.0, X3Method::Primary).unwrap())
            .collect();
        assert!(fwd.iter().zip(rev.iter().rev()).all(|(a, b)| a == b));
    }

    proptest! {
        #[test]
        fn round_trip_recovers_state(
            x1 in -1.4f64..1.4, x3 in 0.5f64..1.5, vt in 0.9f64..1.1, y in 2.0f64..10.0
        ) {
            let s = sample(x1, x3, vt, y);
            for m in [X3Method::Primary, X3Method::Alternative] {
                let e = estimate(&s, y, m).unwrap();
                prop_assert!((e.x3_hat - x3).abs() <= 1e-10 * x3);
                prop_assert!((e.x1_hat - x1).abs() <= 1e-10 * x1.abs().max(1e-3));
            }
        }
    }
}
