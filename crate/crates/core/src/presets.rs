//! Built-in machine data for the 3-machine WSCC test system.
//!
//! Electrical and inertia data follow the classical Anderson-Fouad set; the
//! damping is chosen so that `a1` is about 2 1/s for every machine, and all
//! machines share one AVR/PSS tuning. The stabilizer gain `Kp` acts on the
//! speed deviation in rad/s.

use crate::model::{PssForm, RawGeneratorParams, OMEGA_S_60HZ};
use crate::simulator::OperatingPoint;

pub fn wscc9_machines() -> Vec<RawGeneratorParams> {
    let h = [23.64, 6.4, 3.01];
    let d = [0.24, 0.064, 0.032];
    let xd = [0.146, 0.8958, 1.3125];
    let xdp = [0.0608, 0.1198, 0.1813];
    let td0p = [8.96, 6.0, 5.89];
    (0..3)
        .map(|i| RawGeneratorParams {
            h: h[i],
            d: d[i],
            tm: 0.0,
            td0p: td0p[i],
            xd: xd[i],
            xdp: xdp[i],
            omega_s: OMEGA_S_60HZ,
            vref: 0.0,
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
            kp: 0.05,
            pss_form: PssForm::Washout,
        })
        .collect()
}

pub fn wscc9_operating_points() -> Vec<OperatingPoint> {
    vec![
        OperatingPoint { p0: 0.0, v0: 1.04 },
        OperatingPoint {
            p0: 1.63,
            v0: 1.025,
        },
        OperatingPoint {
            p0: 0.85,
            v0: 1.025,
        },
    ]
}
