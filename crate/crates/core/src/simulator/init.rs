//! Steady-state initialization.
//!
//! Machine 0 is the angle reference. A damped Newton iteration finds the
//! rotor angles of the other machines and all internal voltages so that every
//! terminal voltage matches its setpoint and machines `1..n` deliver their
//! scheduled power. The remaining states, `Tm` and `Vref` follow in closed
//! form from the zero-derivative conditions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{wrap_angle, Plant, RotorState};
use crate::error::{Error, Result};
use crate::model::GeneratorParams;
use crate::network::ReducedNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Scheduled active power; ignored for the reference machine.
    pub p0: f64,
    /// Terminal voltage setpoint.
    pub v0: f64,
}

const NEWTON_TOL: f64 = 1e-12;
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

fn residual(net: &ReducedNetwork, ops: &[OperatingPoint], z: &[f64]) -> Result<Vec<f64>> {
    let n = ops.len();
    let e: Vec<Complex64> = (0..n)
        .map(|i| {
            let delta = if i == 0 { 0.0 } else { z[i - 1] };
            Complex64::from_polar(z[n - 1 + i], delta)
        })
        .collect();
    let v = net.terminal_phasors(&e)?;
    let cur = net.currents(&e);
    let mut r: Vec<f64> = v.iter().zip(ops).map(|(v, op)| v.norm() - op.v0).collect();
    r.extend((1..n).map(|i| (v[i] * cur[i].conj()).re - ops[i].p0));
    Ok(r)
}

fn norm_inf(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves the network operating point, returning `(delta_i, E'q_i)`.
pub fn solve_operating_point(
    net: &ReducedNetwork,
    ops: &[OperatingPoint],
) -> Result<Vec<(f64, f64)>> {
    let n = ops.len();
    if n != net.n_machines() {
        return Err(Error::Initialization(format!(
            "{} operating points for {} machines",
            n,
            net.n_machines()
        )));
    }
    let dim = 2 * n - 1;
    let mut z: Vec<f64> = vec![0.0; n - 1];
    z.extend(ops.iter().map(|op| op.v0 + 0.1));

    let mut r = residual(net, ops, &z)?;
    for _ in 0..100 {
        if norm_inf(&r) < NEWTON_TOL {
            break;
        }
        let h = 1e-7;
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..dim {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            let rp = residual(net, ops, &zp)?;
            let rm = residual(net, ops, &zm)?;
            for i in 0..dim {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_vec(r.iter().map(|v| -v).collect()))
            .ok_or_else(|| Error::Initialization("singular Jacobian".into()))?;

        let mut alpha = 1.0;
        let r0 = norm_inf(&r);
        loop {
            let trial: Vec<f64> = z
                .iter()
                .zip(step.iter())
                .map(|(z, s)| z + alpha * s)
                .collect();
            let rt = residual(net, ops, &trial)?;
            if norm_inf(&rt) < r0 || alpha < 1e-6 {
                z = trial;
                r = rt;
                break;
            }
            alpha *= 0.5;
        }
    }
    if norm_inf(&r) >= NEWTON_TOL * 100.0 {
        return Err(Error::Initialization(format!(
            "power-flow residual {:.3e} after Newton iterations",
            norm_inf(&r)
        )));
    }
    Ok((0..n)
        .map(|i| (if i == 0 { 0.0 } else { z[i - 1] }, z[n - 1 + i]))
        .collect())
}

/// Builds an equilibrium plant state and fixes `Tm` and `Vref` of every
/// machine accordingly.
pub fn initialize(
    params: Vec<GeneratorParams>,
    net: ReducedNetwork,
    ops: &[OperatingPoint],
) -> Result<(Plant, Vec<RotorState>)> {
    let internal = solve_operating_point(&net, ops)?;
    let e: Vec<Complex64> = internal
        .iter()
        .map(|&(d, eq)| Complex64::from_polar(eq, d))
        .collect();
    let v = net.terminal_phasors(&e)?;
    let cur = net.currents(&e);

    let mut fixed = Vec::with_capacity(params.len());
    let mut state = Vec::with_capacity(params.len());
    for (i, p) in params.into_iter().enumerate() {
        let (delta, x3) = internal[i];
        let vt = v[i].norm();
        let x1 = wrap_angle(delta - v[i].arg());
        let tm = (v[i] * cur[i].conj()).re;
        let ef = p.raw.td0p * (p.a3 * x3 - p.a4 * vt * x1.cos());
        let err = ef / p.raw.ka;
        let q = (1.0 - p.raw.tc / p.raw.tb) * err;
        let vref = vt + err;
        fixed.push(p.with_operating_point(tm, vref));
        state.push([delta, 0.0, x3, vt, q, ef, 0.0, 0.0, 0.0]);
    }

    let plant = Plant::new(fixed, net)?;
    let eval = plant.evaluate(0.0, &state)?;
    let worst = eval
        .deriv
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if worst > EQUILIBRIUM_TOL {
        return Err(Error::Initialization(format!(
            "equilibrium residual {worst:.3e} exceeds {EQUILIBRIUM_TOL:e}"
        )));
    }
    Ok((plant, state))
}
