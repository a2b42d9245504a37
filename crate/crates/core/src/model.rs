//! Third-order flux-decay generator with AVR and PSS, stator algebra and the
//! PMU measurement map.
//!
//! Everything here is a pure function of its arguments. Angles are in radians,
//! speeds in rad/s and everything else in per-unit; the only Hz quantity is the
//! measured frequency `y5`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nominal synchronous speed of a 60 Hz system.
pub const OMEGA_S_60HZ: f64 = 120.0 * PI;

/// Machine constants as they appear in a parameter file, before the derived
/// coefficients are computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeneratorParams {
    /// Inertia constant [s].
    #[serde(rename = "H")]
    pub h: f64,
    /// Damping [pu torque per rad/s].
    #[serde(rename = "D")]
    pub d: f64,
    /// Mechanical torque [pu]. Overwritten by the equilibrium initializer.
    #[serde(rename = "Tm", default)]
    pub tm: f64,
    #[serde(rename = "Td0p")]
    pub td0p: f64,
    pub xd: f64,
    pub xdp: f64,
    #[serde(default = "default_omega_s")]
    pub omega_s: f64,
    /// AVR setpoint [pu]. Overwritten by the equilibrium initializer.
    #[serde(rename = "Vref", default)]
    pub vref: f64,
    #[serde(rename = "TR")]
    pub tr: f64,
    #[serde(rename = "TB")]
    pub tb: f64,
    #[serde(rename = "TC")]
    pub tc: f64,
    #[serde(rename = "TA")]
    pub ta: f64,
    #[serde(rename = "KA")]
    pub ka: f64,
    #[serde(rename = "Tw")]
    pub tw: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    #[serde(rename = "T3")]
    pub t3: f64,
    #[serde(rename = "T4")]
    pub t4: f64,
    #[serde(rename = "Kp")]
    pub kp: f64,
    #[serde(default)]
    pub pss_form: PssForm,
}

/// Third-row realization of the PSS state equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PssForm {
    /// `p3' = -p1 - c1*c3*x2`.
    AsWritten,
    /// `p3' = -c0*p1 - c0*c3*x2` with `c0 = 1/(Tw*T2*T4)`, which realizes
    /// `Kp * Tw s/(1+Tw s) * (1+T1 s)/(1+T2 s) * (1+T3 s)/(1+T4 s)`.
    #[default]
    Washout,
}

fn default_omega_s() -> f64 {
    OMEGA_S_60HZ
}

/// Machine constants together with the derived model coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorParams {
    pub raw: RawGeneratorParams,
    /// Transient admittance magnitude `1 / x'd`.
    pub y: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    /// PSS realization coefficients.
    pub c: [f64; 5],
}

impl GeneratorParams {
    pub fn omega_s(&self) -> f64 {
        self.raw.omega_s
    }

    pub fn tm(&self) -> f64 {
        self.raw.tm
    }

    /// The mechanical parameter vector `(a1, a2, a2*Tm)` identified online.
    pub fn theta(&self) -> [f64; 3] {
        [self.a1, self.a2, self.a2 * self.raw.tm]
    }

    /// Sets the operating point found by the equilibrium initializer.
    pub fn with_operating_point(mut self, tm: f64, vref: f64) -> Self {
        self.raw.tm = tm;
        self.raw.vref = vref;
        self
    }
}

/// Computes `a1..a4`, `Y` and `c1..c5` from the raw machine constants.
pub fn derive_coefficients(raw: RawGeneratorParams) -> Result<GeneratorParams> {
    let positive = [
        ("H", raw.h),
        ("Td0p", raw.td0p),
        ("xdp", raw.xdp),
        ("T2", raw.t2),
        ("T4", raw.t4),
        ("Tw", raw.tw),
        ("TR", raw.tr),
        ("TB", raw.tb),
        ("TA", raw.ta),
        ("KA", raw.ka),
        ("omega_s", raw.omega_s),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(
                name,
                format!("must be strictly positive, got {v}"),
            ));
        }
    }
    if raw.xd < raw.xdp {
        return Err(Error::param(
            "xd",
            format!("xd={} must not be smaller than xdp={}", raw.xd, raw.xdp),
        ));
    }
    if raw.d < 0.0 {
        return Err(Error::param(
            "D",
            format!("must be non-negative, got {}", raw.d),
        ));
    }

    let ws = raw.omega_s;
    let a1 = ws * raw.d / (2.0 * raw.h);
    let a2 = ws / (2.0 * raw.h);
    let a3 = raw.xd / (raw.xdp * raw.td0p);
    let a4 = (raw.xd - raw.xdp) / (raw.xdp * raw.td0p);

    let (tw, t1, t2, t3, t4, kp) = (raw.tw, raw.t1, raw.t2, raw.t3, raw.t4, raw.kp);
    let den = tw * t4 * t2;
    let c = [
        (t4 * tw + t4 * t2 + t2 * tw) / den,
        (tw + t4 + t2) / den,
        kp * t1 * t3 / (t2 * t4),
        kp * (t1 + t3) / (t2 * t4),
        kp / (t2 * t4),
    ];

    Ok(GeneratorParams {
        y: 1.0 / raw.xdp,
        a1,
        a2,
        a3,
        a4,
        c,
        raw,
    })
}

/// Dynamic state of one machine: the three flux-decay states followed by the
/// AVR states `(Vf, q, Ef)` and the PSS states `(p1, p2, p3)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MachineState {
    /// Load angle `delta - theta_t` [rad].
    pub x1: f64,
    /// Relative shaft speed `omega - omega_s` [rad/s].
    pub x2: f64,
    /// Quadrature-axis internal voltage `E'q` [pu].
    pub x3: f64,
    pub vf: f64,
    pub q: f64,
    pub ef: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl MachineState {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.x1, self.x2, self.x3, self.vf, self.q, self.ef, self.p1, self.p2, self.p3,
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        Self {
            x1: a[0],
            x2: a[1],
            x3: a[2],
            vf: a[3],
            q: a[4],
            ef: a[5],
            p1: a[6],
            p2: a[7],
            p3: a[8],
        }
    }
}

/// Terminal bus voltage magnitude, phase and phase speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalSignals {
    pub vt: f64,
    pub theta_t: f64,
    pub omega_t: f64,
}

/// One PMU frame: `y1..y5` = (Vt, Pt, Qt, It, ft).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmuSample {
    pub t: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub y4: f64,
    pub y5: f64,
}

impl PmuSample {
    pub fn channels(&self) -> [f64; 5] {
        [self.y1, self.y2, self.y3, self.y4, self.y5]
    }

    pub fn from_channels(t: f64, y: [f64; 5]) -> Self {
        Self {
            t,
            y1: y[0],
            y2: y[1],
            y3: y[2],
            y4: y[3],
            y5: y[4],
        }
    }

    /// Terminal phase speed recovered from the frequency channel [rad/s].
    pub fn omega_t(&self) -> f64 {
        2.0 * PI * self.y5
    }
}

/// Stator currents `(Itd, Itq)` for zero stator resistance and `x'd = xq`.
pub fn stator_currents(x1: f64, x3: f64, vt: f64, y: f64) -> (f64, f64) {
    let itq = y * vt * x1.sin();
    let itd = y * (x3 - vt * x1.cos());
    (itd, itq)
}

/// Noiseless PMU measurement vector.
pub fn measure(t: f64, x1: f64, x3: f64, vt: f64, omega_t: f64, y: f64) -> PmuSample {
    let (s, c) = x1.sin_cos();
    PmuSample {
        t,
        y1: vt,
        y2: y * vt * x3 * s,
        y3: y * (vt * x3 * c - vt * vt),
        // (x3 - vt)^2 + 4 vt x3 sin^2(x1/2) avoids cancellation near x1 = 0
        y4: y * ((x3 - vt).powi(2) + 4.0 * vt * x3 * (0.5 * x1).sin().powi(2)).sqrt(),
        y5: omega_t / (2.0 * PI),
    }
}

/// Right-hand side of the flux-decay equations for `(x1, x2, x3)`. The
/// electrical torque is taken equal to the terminal active power.
pub fn generator_derivatives(
    s: &MachineState,
    p: &GeneratorParams,
    term: &TerminalSignals,
) -> [f64; 3] {
    let (sin1, cos1) = s.x1.sin_cos();
    let pt = p.y * term.vt * s.x3 * sin1;
    [
        s.x2 - term.omega_t + p.omega_s(),
        -p.a1 * s.x2 + p.a2 * (p.raw.tm - pt),
        -p.a3 * s.x3 + p.a4 * term.vt * cos1 + s.ef / p.raw.td0p,
    ]
}

/// AVR and PSS state derivatives `(Vf, q, Ef, p1, p2, p3)` and the stabilizer
/// output `Vpss`.
pub fn controller_derivatives(s: &MachineState, p: &GeneratorParams, vt: f64) -> ([f64; 6], f64) {
    let r = &p.raw;
    let [c1, c2, c3, c4, c5] = p.c;

    let vpss = s.p1 + c3 * s.x2;
    let err = r.vref - s.vf + vpss;
    let lead = r.tc / r.tb;

    let dvf = (vt - s.vf) / r.tr;
    let dq = ((1.0 - lead) * err - s.q) / r.tb;
    // lead-lag output is q + (TC/TB)*err
    let def = (r.ka * (s.q + lead * err) - s.ef) / r.ta;

    let dp1 = -c1 * s.p1 + s.p2 + (c4 - c1 * c3) * s.x2;
    let dp2 = -c2 * s.p1 + s.p3 + (c5 - c2 * c3) * s.x2;
    let dp3 = match r.pss_form {
        PssForm::AsWritten => -s.p1 - c1 * c3 * s.x2,
        PssForm::Washout => {
            let c0 = 1.0 / (r.tw * r.t2 * r.t4);
            -c0 * (s.p1 + c3 * s.x2)
        }
    };

    ([dvf, dq, def, dp1, dp2, dp3], vpss)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Published-style AVR/PSS constants used across the test suite.
    pub(crate) fn sample_raw() -> RawGeneratorParams {
        RawGeneratorParams {
            h: 4.33,
            d: 2.0,
            tm: 0.8,
            td0p: 5.4,
            xd: 0.67,
            xdp: 0.132,
            omega_s: OMEGA_S_60HZ,
            vref: 1.05,
            tr: 0.02,
            tb: 10.0,
            tc: 1.0,
            ta: 0.05,
            ka: 50.0,
            tw: 10.0,
            t1: 0.5,
            t2: 0.1,
            t3: 0.4,
            t4: 0.08,
            kp: 0.5,
            pss_form: PssForm::AsWritten,
        }
    }

    #[test]
    fn zero_damping_gives_zero_a1() {
        let mut raw = sample_raw();
        raw.h = 3.0;
        raw.d = 0.0;
        let p = derive_coefficients(raw).unwrap();
        assert_eq!(p.a1, 0.0);
    }

    #[test]
    fn equal_reactances_give_zero_a4() {
        let mut raw = sample_raw();
        raw.xd = raw.xdp;
        assert_eq!(derive_coefficients(raw).unwrap().a4, 0.0);
    }

    #[test]
    fn coefficients_match_hand_evaluation() {
        // frozen from an independent evaluation of the four ratios
        let p = derive_coefficients(sample_raw()).unwrap();
        assert_relative_eq!(p.a1, 87.06492342512128, max_relative = 1e-14);
        assert_relative_eq!(p.a2, 43.53246171256064, max_relative = 1e-14);
        assert_relative_eq!(p.a3, 0.9399551066217732, max_relative = 1e-14);
        assert_relative_eq!(p.a4, 0.754769921436588, max_relative = 1e-14);
        assert_relative_eq!(p.y, 1.0 / 0.132, max_relative = 1e-15);
        // second route: a1 = D * a2, a3 - a4 = 1 / Td0p
        assert_relative_eq!(p.a1, p.raw.d * p.a2, max_relative = 1e-14);
        assert_relative_eq!(p.a3 - p.a4, 1.0 / p.raw.td0p, max_relative = 1e-12);
    }

    #[test]
    fn pss_coefficients_match_transfer_function() {
        // Expand Kp*Tw*s*(1+T1 s)(1+T3 s) / ((1+Tw s)(1+T2 s)(1+T4 s)) by hand.
        let p = derive_coefficients(sample_raw()).unwrap();
        let r = &p.raw;
        let lead = r.tw * r.t2 * r.t4;
        let s2 = r.tw * r.t2 + r.tw * r.t4 + r.t2 * r.t4;
        let s1 = r.tw + r.t2 + r.t4;
        assert_relative_eq!(p.c[0], s2 / lead, max_relative = 1e-14);
        assert_relative_eq!(p.c[1], s1 / lead, max_relative = 1e-14);
        let num3 = r.kp * r.tw * r.t1 * r.t3;
        let num2 = r.kp * r.tw * (r.t1 + r.t3);
        let num1 = r.kp * r.tw;
        assert_relative_eq!(p.c[2], num3 / lead, max_relative = 1e-14);
        assert_relative_eq!(p.c[3], num2 / lead, max_relative = 1e-14);
        assert_relative_eq!(p.c[4], num1 / lead, max_relative = 1e-14);
    }

    #[test]
    fn rejects_non_positive_constants() {
        for field in ["H", "Td0p", "xdp", "T2", "T4", "Tw"] {
            let mut raw = sample_raw();
            match field {
                "H" => raw.h = 0.0,
                "Td0p" => raw.td0p = -1.0,
                "xdp" => raw.xdp = 0.0,
                "T2" => raw.t2 = 0.0,
                "T4" => raw.t4 = -0.1,
                _ => raw.tw = 0.0,
            }
            match derive_coefficients(raw) {
                Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, field),
                other => panic!("expected invalid {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn derive_is_bitwise_deterministic() {
        let a = derive_coefficients(sample_raw()).unwrap();
        let b = derive_coefficients(sample_raw()).unwrap();
        assert_eq!(a.a1.to_bits(), b.a1.to_bits());
        assert_eq!(a.c.map(f64::to_bits), b.c.map(f64::to_bits));
        assert_eq!(a, b);
    }

    #[test]
    fn stator_currents_examples() {
        assert_eq!(stator_currents(0.0, 1.03, 1.03, 5.0), (0.0, 0.0));
        let (itd, itq) = stator_currents(PI / 2.0, 1.0, 1.0, 2.0);
        assert_relative_eq!(itq, 2.0, max_relative = 1e-15);
        assert_relative_eq!(itd, 2.0, max_relative = 1e-15);
        let (itd, itq) = stator_currents(0.4, 1.1, 1.02, 7.576);
        assert_relative_eq!(itq, 3.0092380285569433, max_relative = 1e-14);
        assert_relative_eq!(itd, 1.2160827476228258, max_relative = 1e-14);
    }

    #[test]
    fn measure_examples() {
        let s = measure(0.0, 0.0, 1.0, 1.0, OMEGA_S_60HZ, 5.0);
        assert_eq!((s.y2, s.y3, s.y4), (0.0, 0.0, 0.0));
        assert_relative_eq!(s.y5, 60.0, max_relative = 1e-15);

        let s = measure(0.0, 0.4, 1.1, 1.02, OMEGA_S_60HZ, 7.576);
        assert_eq!(s.y1, 1.02);
        assert_relative_eq!(s.y2, 3.3101618314126378, max_relative = 1e-14);
        assert_relative_eq!(s.y3, -0.05280142238510748, max_relative = 1e-12);
        assert_relative_eq!(s.y4, 3.2456695397990143, max_relative = 1e-14);
        let (itd, itq) = stator_currents(0.4, 1.1, 1.02, 7.576);
        assert_relative_eq!(s.y4 * s.y4, itd * itd + itq * itq, max_relative = 1e-12);
    }

    fn equilibrium_oracle(p: &GeneratorParams, ef: f64, vt: f64) -> (f64, f64) {
        // x3 from the flux equation by bisection; x1 from torque balance
        let f = |x3: f64| {
            let s1 = p.raw.tm / (p.y * vt * x3);
            let c1 = (1.0 - s1 * s1).sqrt();
            -p.a3 * x3 + p.a4 * vt * c1 + ef / p.raw.td0p
        };
        let (mut lo, mut hi) = (p.raw.tm / (p.y * vt) * 1.0001, 10.0);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let x3 = 0.5 * (lo + hi);
        ((p.raw.tm / (p.y * vt * x3)).asin(), x3)
    }

    #[test]
    fn equilibrium_has_zero_derivatives() {
        let p = derive_coefficients(sample_raw()).unwrap();
        let (ef, vt) = (1.8, 1.02);
        let (x1, x3) = equilibrium_oracle(&p, ef, vt);
        let s = MachineState {
            x1,
            x2: 0.0,
            x3,
            ef,
            ..Default::default()
        };
        let term = TerminalSignals {
            vt,
            theta_t: 0.0,
            omega_t: p.omega_s(),
        };
        for d in generator_derivatives(&s, &p, &term) {
            assert!(d.abs() < 1e-10, "{d}");
        }
    }

    #[test]
    fn synchronized_and_torque_balanced() {
        let p = derive_coefficients(sample_raw()).unwrap();
        let term = TerminalSignals {
            vt: 1.0,
            theta_t: 0.3,
            omega_t: p.omega_s(),
        };
        let s = MachineState {
            x1: 0.3,
            x2: 0.0,
            x3: 1.2,
            ..Default::default()
        };
        let d = generator_derivatives(&s, &p, &term);
        assert_eq!(d[0], 0.0);

        let mut p2 = p.clone();
        p2.raw.tm = p.y * 1.0 * 1.2 * 0.3f64.sin();
        assert!(generator_derivatives(&s, &p2, &term)[1].abs() < 1e-14);
    }

    #[test]
    fn avr_zero_error_decays_ef() {
        let p = derive_coefficients(sample_raw()).unwrap();
        let s = MachineState {
            vf: p.raw.vref,
            ef: 2.0,
            ..Default::default()
        };
        let (d, vpss) = controller_derivatives(&s, &p, p.raw.vref);
        assert_eq!(vpss, 0.0);
        assert_eq!(d[0], 0.0);
        assert_relative_eq!(d[2], -2.0 / p.raw.ta, max_relative = 1e-15);
    }

    #[test]
    fn pss_at_rest() {
        let p = derive_coefficients(sample_raw()).unwrap();
        let s = MachineState {
            vf: 1.0,
            ef: 1.5,
            q: 0.01,
            ..Default::default()
        };
        let (d, vpss) = controller_derivatives(&s, &p, 1.0);
        assert_eq!(vpss, 0.0);
        assert_eq!(&d[3..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn washout_form_realizes_stabilizer_transfer_function() {
        use nalgebra::{Matrix3, Vector3};
        use num_complex::Complex64;
        let mut raw = sample_raw();
        raw.pss_form = PssForm::Washout;
        let p = derive_coefficients(raw).unwrap();
        let r = &p.raw;
        let c3 = p.c[2];
        // state matrix and input vector read back from controller_derivatives
        let mut a = Matrix3::<f64>::zeros();
        let mut b = Vector3::<f64>::zeros();
        let base = MachineState::from_array([0.0; 9]);
        for j in 0..4 {
            let mut s = base;
            match j {
                0 => s.p1 = 1.0,
                1 => s.p2 = 1.0,
                2 => s.p3 = 1.0,
                _ => s.x2 = 1.0,
            }
            let (d, _) = controller_derivatives(&s, &p, 0.0);
            for i in 0..3 {
                if j < 3 {
                    a[(i, j)] = d[3 + i];
                } else {
                    b[i] = d[3 + i];
                }
            }
        }
        for w in [0.01, 0.3, 1.0, 7.0, 40.0] {
            let jw = Complex64::new(0.0, w);
            let m = Matrix3::<Complex64>::identity() * jw - a.map(Complex64::from);
            let x = m.lu().solve(&b.map(Complex64::from)).unwrap();
            let got = x[0] + c3;
            let want = r.kp * r.tw * jw * (1.0 + jw * r.t1) * (1.0 + jw * r.t3)
                / ((1.0 + jw * r.tw) * (1.0 + jw * r.t2) * (1.0 + jw * r.t4));
            assert!(
                (got - want).norm() < 1e-10 * (1.0 + want.norm()),
                "w={w}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn controller_matches_matrix_form() {
        // Second implementation: the PSS as (A p + B x2), the AVR in expanded form.
        use rand::{Rng, SeedableRng};
        let p = derive_coefficients(sample_raw()).unwrap();
        let [c1, c2, c3, c4, c5] = p.c;
        let a = [[-c1, 1.0, 0.0], [-c2, 0.0, 1.0], [-1.0, 0.0, 0.0]];
        let b = [c4 - c1 * c3, c5 - c2 * c3, -c1 * c3];
        let r = &p.raw;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let arr: [f64; 9] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let s = MachineState::from_array(arr);
            let vt: f64 = rng.random_range(0.8..1.2);
            let (d, vpss) = controller_derivatives(&s, &p, vt);

            let pv = [s.p1, s.p2, s.p3];
            for i in 0..3 {
                let want: f64 = (0..3).map(|j| a[i][j] * pv[j]).sum::<f64>() + b[i] * s.x2;
                assert_relative_eq!(d[3 + i], want, epsilon = 1e-12, max_relative = 1e-12);
            }
            let u = r.vref - s.vf + s.p1 + c3 * s.x2;
            assert_relative_eq!(vpss, s.p1 + c3 * s.x2);
            assert_relative_eq!(d[0], vt / r.tr - s.vf / r.tr, epsilon = 1e-12);
            assert_relative_eq!(
                d[1],
                u / r.tb - r.tc * u / (r.tb * r.tb) - s.q / r.tb,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                d[2],
                r.ka * s.q / r.ta + r.ka * r.tc * u / (r.tb * r.ta) - s.ef / r.ta,
                epsilon = 1e-10
            );
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn current_magnitude_consistent(
                x1 in -1.5f64..1.5, x3 in 0.3f64..2.0, vt in 0.5f64..1.3, y in 1.0f64..12.0
            ) {
                let s = measure(0.0, x1, x3, vt, OMEGA_S_60HZ, y);
                let (itd, itq) = stator_currents(x1, x3, vt, y);
                let i2 = itd * itd + itq * itq;
                // Itd itself loses digits when x3 ~ vt*cos(x1); allow for its rounding
                let slack = 1e-15 * y * y * x3 * vt;
                prop_assert!((s.y4 * s.y4 - i2).abs() <= 1e-12 * i2 + slack);
            }

            #[test]
            fn power_circle_identity(
                x1 in -1.5f64..1.5, x3 in 0.3f64..2.0, vt in 0.5f64..1.3, y in 1.0f64..12.0
            ) {
                let s = measure(0.0, x1, x3, vt, OMEGA_S_60HZ, y);
                let lhs = s.y2 * s.y2 + (s.y3 + y * s.y1 * s.y1).powi(2);
                let rhs = (y * s.y1 * x3).powi(2);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
            }
        }
    }
}
