//! Algebraic network coupling between machines.
//!
//! A bus network with constant-impedance loads is Kron-reduced onto the
//! generator internal EMF nodes (each EMF sits behind its transient reactance
//! `x'd`). Given all internal phasors `E_i = E'q_i * exp(j*delta_i)`, the
//! injected currents are `I = Ykron * E` and the terminal phasors are
//! `V = E - j*x'd*I`. Because `V` is linear in `E`, the terminal phase speed is
//! obtained exactly from the internal phasor rates:
//! `d(theta_t)/dt = Im(dV/dt / V)`. While load admittances move, `dV/dt` also
//! carries the rate of the reduced matrix,
//! `dYkron/dt = X^T * diag(dY_load/dt) * X` with `X = Yee^-1 * Yek`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TerminalSignals;

pub type CMatrix = DMatrix<Complex64>;

const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    #[serde(default)]
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    #[serde(default)]
    pub b: f64,
}

/// Constant-impedance load given by its consumption at 1 pu voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub bus: usize,
    pub p: f64,
    #[serde(default)]
    pub q: f64,
}

impl Load {
    pub fn admittance(&self) -> Complex64 {
        Complex64::new(self.p, -self.q)
    }
}

/// Bus-level description. Buses are zero-indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusNetwork {
    pub n_bus: usize,
    pub branches: Vec<Branch>,
    pub loads: Vec<Load>,
    /// Terminal bus of each machine.
    pub gen_bus: Vec<usize>,
    /// Transient reactance of each machine.
    pub xdp: Vec<f64>,
}

/// Shunt admittance applied at `bus` while a fault is active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub bus: usize,
    #[serde(default)]
    pub g: f64,
    #[serde(default = "default_fault_b")]
    pub b: f64,
}

fn default_fault_b() -> f64 {
    -1.0e4
}

impl BusNetwork {
    pub fn n_machines(&self) -> usize {
        self.gen_bus.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.n_bus == 0 {
            return Err(Error::config("network.n_bus", "must be at least 1"));
        }
        if self.gen_bus.is_empty() {
            return Err(Error::config("machine", "at least one machine is required"));
        }
        if self.gen_bus.len() != self.xdp.len() {
            return Err(Error::config(
                "machine",
                "xdp count differs from machine count",
            ));
        }
        for (i, br) in self.branches.iter().enumerate() {
            if br.from >= self.n_bus || br.to >= self.n_bus || br.from == br.to {
                return Err(Error::config(
                    format!("network.branch[{i}]"),
                    format!("invalid endpoints {}-{}", br.from, br.to),
                ));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::config(
                    format!("network.branch[{i}]"),
                    "zero impedance",
                ));
            }
        }
        for (i, l) in self.loads.iter().enumerate() {
            if l.bus >= self.n_bus {
                return Err(Error::config(
                    format!("network.load[{i}].bus"),
                    "out of range",
                ));
            }
        }
        for (i, &b) in self.gen_bus.iter().enumerate() {
            if b >= self.n_bus {
                return Err(Error::config(format!("machine[{i}].bus"), "out of range"));
            }
        }
        Ok(())
    }

    /// Bus admittance matrix including line charging and load shunts.
    pub fn bus_admittance(&self) -> CMatrix {
        let n = self.n_bus;
        let mut y = CMatrix::zeros(n, n);
        for br in &self.branches {
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
            let ysh = Complex64::new(0.0, br.b / 2.0);
            y[(br.from, br.from)] += ys + ysh;
            y[(br.to, br.to)] += ys + ysh;
            y[(br.from, br.to)] -= ys;
            y[(br.to, br.from)] -= ys;
        }
        for l in &self.loads {
            y[(l.bus, l.bus)] += l.admittance();
        }
        y
    }

    /// Reduced admittance seen from the machine internal nodes, optionally
    /// with a fault shunt.
    pub fn reduce(&self, fault: Option<&FaultSpec>) -> Result<CMatrix> {
        kron_reduce(&self.augmented(fault), self.n_machines())
    }

    /// Reduced admittance together with its rate for the given load
    /// admittance rates (one per load).
    pub fn reduce_with_rates(
        &self,
        fault: Option<&FaultSpec>,
        load_rates: &[Complex64],
    ) -> Result<(CMatrix, CMatrix)> {
        let n = self.n_machines();
        let (ykron, x) = kron_parts(&self.augmented(fault), n)?;
        let mut d = vec![Complex64::new(0.0, 0.0); self.n_bus];
        for (l, r) in self.loads.iter().zip(load_rates) {
            d[l.bus] += r;
        }
        let mut rate = CMatrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                rate[(i, k)] = (0..self.n_bus).map(|b| x[(b, i)] * d[b] * x[(b, k)]).sum();
            }
        }
        Ok((ykron, rate))
    }

    fn augmented(&self, fault: Option<&FaultSpec>) -> CMatrix {
        let n = self.n_machines();
        let nb = self.n_bus;
        let mut full = CMatrix::zeros(n + nb, n + nb);
        full.view_mut((n, n), (nb, nb))
            .copy_from(&self.bus_admittance());
        for (i, (&bus, &xdp)) in self.gen_bus.iter().zip(&self.xdp).enumerate() {
            let yg = Complex64::new(1.0, 0.0) / Complex64::new(0.0, xdp);
            full[(i, i)] += yg;
            full[(n + bus, n + bus)] += yg;
            full[(i, n + bus)] -= yg;
            full[(n + bus, i)] -= yg;
        }
        if let Some(f) = fault {
            full[(n + f.bus, n + f.bus)] += Complex64::new(f.g, f.b);
        }
        full
    }
}

/// Eliminates every node after the first `keep` from a nodal admittance
/// matrix: `Y_kk - Y_ke * Y_ee^-1 * Y_ek`.
pub fn kron_reduce(y: &CMatrix, keep: usize) -> Result<CMatrix> {
    kron_parts(y, keep).map(|(r, _)| r)
}

/// Reduced matrix and `X = Y_ee^-1 * Y_ek`.
fn kron_parts(y: &CMatrix, keep: usize) -> Result<(CMatrix, CMatrix)> {
    let n = y.nrows();
    if y.ncols() != n || keep > n {
        return Err(Error::NetworkSolve(format!(
            "cannot reduce a {}x{} matrix to {keep} nodes",
            n,
            y.ncols()
        )));
    }
    let ne = n - keep;
    if ne == 0 {
        return Ok((y.clone(), CMatrix::zeros(0, keep)));
    }
    let ykk = y.view((0, 0), (keep, keep));
    let yke = y.view((0, keep), (keep, ne));
    let yek = y.view((keep, 0), (ne, keep)).clone_owned();
    let yee = y.view((keep, keep), (ne, ne)).clone_owned();
    let lu = yee.lu();
    let x = lu.solve(&yek).ok_or_else(|| {
        Error::NetworkSolve("eliminated-node admittance block is singular".into())
    })?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NetworkSolve(
            "eliminated-node admittance block is singular".into(),
        ));
    }
    Ok((ykk - yke * &x, x))
}

#[derive(Debug, Clone)]
struct Solved {
    ykron: CMatrix,
    // V = m * E
    m: CMatrix,
    m_dot: Option<CMatrix>,
}

impl Solved {
    fn new(ykron: CMatrix, xdp: &[f64]) -> Self {
        let n = ykron.nrows();
        let mut m = CMatrix::identity(n, n);
        for i in 0..n {
            for k in 0..n {
                m[(i, k)] -= J * xdp[i] * ykron[(i, k)];
            }
        }
        Self {
            ykron,
            m,
            m_dot: None,
        }
    }

    fn with_rate(ykron: CMatrix, rate: CMatrix, xdp: &[f64]) -> Self {
        let mut s = Self::new(ykron, xdp);
        let mut m_dot = rate;
        for i in 0..m_dot.nrows() {
            for k in 0..m_dot.ncols() {
                m_dot[(i, k)] *= -J * xdp[i];
            }
        }
        s.m_dot = Some(m_dot);
        s
    }
}

/// Network reduced to machine internal nodes, with a pre-reduced faulted
/// variant.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    xdp: Vec<f64>,
    normal: Solved,
    faulted: Option<Solved>,
    fault_active: bool,
    buses: Option<(BusNetwork, Option<FaultSpec>)>,
}

impl ReducedNetwork {
    pub fn from_buses(net: BusNetwork, fault: Option<FaultSpec>) -> Result<Self> {
        net.check()?;
        if let Some(f) = &fault {
            if f.bus >= net.n_bus {
                return Err(Error::config("fault.bus", "out of range"));
            }
        }
        let normal = Solved::new(net.reduce(None)?, &net.xdp);
        let faulted = match &fault {
            Some(f) => Some(Solved::new(net.reduce(Some(f))?, &net.xdp)),
            None => None,
        };
        Ok(Self {
            xdp: net.xdp.clone(),
            normal,
            faulted,
            fault_active: false,
            buses: Some((net, fault)),
        })
    }

    /// Builds directly from already-reduced matrices.
    pub fn from_matrices(
        ykron: CMatrix,
        ykron_fault: Option<CMatrix>,
        xdp: Vec<f64>,
    ) -> Result<Self> {
        let n = xdp.len();
        if n == 0 {
            return Err(Error::config(
                "network.kron",
                "at least one machine is required",
            ));
        }
        check_matrix("network.kron", &ykron, n)?;
        if let Some(f) = &ykron_fault {
            check_matrix("network.kron_fault", f, n)?;
        }
        Ok(Self {
            normal: Solved::new(ykron, &xdp),
            faulted: ykron_fault.map(|f| Solved::new(f, &xdp)),
            xdp,
            fault_active: false,
            buses: None,
        })
    }

    pub fn n_machines(&self) -> usize {
        self.xdp.len()
    }

    pub fn xdp(&self) -> &[f64] {
        &self.xdp
    }

    pub fn fault_active(&self) -> bool {
        self.fault_active
    }

    pub fn has_fault(&self) -> bool {
        self.faulted.is_some()
    }

    pub fn bus_network(&self) -> Option<&BusNetwork> {
        self.buses.as_ref().map(|(b, _)| b)
    }

    fn active(&self) -> &Solved {
        match (&self.faulted, self.fault_active) {
            (Some(f), true) => f,
            _ => &self.normal,
        }
    }

    /// Currently active reduced admittance matrix.
    pub fn ykron(&self) -> &CMatrix {
        &self.active().ykron
    }

    pub fn set_fault(&mut self, active: bool) -> Result<()> {
        if active && self.faulted.is_none() {
            return Err(Error::config("fault", "no fault location configured"));
        }
        self.fault_active = active;
        Ok(())
    }

    /// Replaces one load and re-reduces both the normal and faulted matrices.
    pub fn set_load(&mut self, index: usize, load: Load) -> Result<()> {
        let (net, fault) = self
            .buses
            .as_mut()
            .ok_or_else(|| Error::config("event", "load events need a bus-level network"))?;
        let slot = net
            .loads
            .get_mut(index)
            .ok_or_else(|| Error::config("event.load", format!("no load with index {index}")))?;
        *slot = load;
        self.normal = Solved::new(net.reduce(None)?, &net.xdp);
        if let Some(f) = fault {
            self.faulted = Some(Solved::new(net.reduce(Some(f))?, &net.xdp));
        }
        Ok(())
    }

    /// Copy with all loads replaced while they move at `rates` (admittance
    /// per second, `dp - j*dq`); terminal phase speeds then include the
    /// network motion.
    pub fn with_moving_loads(&self, loads: &[Load], rates: &[Complex64]) -> Result<Self> {
        let (net, fault) = self
            .buses
            .as_ref()
            .ok_or_else(|| Error::config("event", "load events need a bus-level network"))?;
        if loads.len() != net.loads.len() || rates.len() != loads.len() {
            return Err(Error::NetworkSolve("load count mismatch".into()));
        }
        let mut net = net.clone();
        net.loads.copy_from_slice(loads);
        let (y, r) = net.reduce_with_rates(None, rates)?;
        let normal = Solved::with_rate(y, r, &net.xdp);
        let faulted = match fault {
            Some(f) => {
                let (y, r) = net.reduce_with_rates(Some(f), rates)?;
                Some(Solved::with_rate(y, r, &net.xdp))
            }
            None => None,
        };
        Ok(Self {
            xdp: self.xdp.clone(),
            normal,
            faulted,
            fault_active: self.fault_active,
            buses: Some((net, *fault)),
        })
    }

    pub fn loads(&self) -> &[Load] {
        self.buses
            .as_ref()
            .map(|(b, _)| b.loads.as_slice())
            .unwrap_or(&[])
    }

    /// Terminal phasors for internal phasors `e`.
    pub fn terminal_phasors(&self, e: &[Complex64]) -> Result<Vec<Complex64>> {
        let s = self.active();
        if e.len() != s.m.nrows() {
            return Err(Error::NetworkSolve(format!(
                "{} internal phasors for {} machines",
                e.len(),
                s.m.nrows()
            )));
        }
        Ok(matvec(&s.m, e))
    }

    /// Machine current injections `I = Ykron * E`.
    pub fn currents(&self, e: &[Complex64]) -> Vec<Complex64> {
        matvec(&self.active().ykron, e)
    }

    /// `d(theta_t)/dt` for each machine given terminal phasors `v`, internal
    /// phasors `e` and their rates `e_dot`.
    pub fn phase_rates(
        &self,
        v: &[Complex64],
        e: &[Complex64],
        e_dot: &[Complex64],
    ) -> Result<Vec<f64>> {
        let s = self.active();
        let mut v_dot = matvec(&s.m, e_dot);
        if let Some(md) = &s.m_dot {
            for (vd, w) in v_dot.iter_mut().zip(matvec(md, e)) {
                *vd += w;
            }
        }
        v.iter()
            .zip(&v_dot)
            .map(|(v, vd)| {
                if v.norm_sqr() == 0.0 {
                    Err(Error::NetworkSolve(
                        "terminal voltage collapsed to zero".into(),
                    ))
                } else {
                    Ok((vd / v).im)
                }
            })
            .collect()
    }

    /// Terminal voltage magnitude, phase and phase speed for every machine.
    ///
    /// `internal` holds `(E'q, delta)` and `rates` holds their time
    /// derivatives; `delta` is measured in the frame rotating at `omega_s`.
    pub fn solve_terminals(
        &self,
        internal: &[(f64, f64)],
        rates: &[(f64, f64)],
        omega_s: f64,
    ) -> Result<Vec<TerminalSignals>> {
        let e: Vec<Complex64> = internal
            .iter()
            .map(|&(eq, d)| Complex64::from_polar(eq, d))
            .collect();
        let v = self.terminal_phasors(&e)?;
        let e_dot: Vec<Complex64> = internal
            .iter()
            .zip(rates)
            .map(|(&(eq, d), &(deq, dd))| {
                Complex64::from_polar(1.0, d) * Complex64::new(deq, eq * dd)
            })
            .collect();
        let w = self.phase_rates(&v, &e, &e_dot)?;
        Ok(v.iter()
            .zip(w)
            .map(|(v, w)| TerminalSignals {
                vt: v.norm(),
                theta_t: v.arg(),
                omega_t: omega_s + w,
            })
            .collect())
    }
}

fn check_matrix(key: &str, m: &CMatrix, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::config(
            key,
            format!("expected {n}x{n}, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for k in 0..i {
            if (m[(i, k)] - m[(k, i)]).norm() > 1e-9 * scale {
                return Err(Error::config(key, "matrix must be symmetric"));
            }
        }
    }
    Ok(())
}

fn matvec(m: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|k| m[(i, k)] * x[k]).sum())
        .collect()
}

/// The 3-machine, 9-bus WSCC test system (100 MVA base), zero-indexed.
pub fn wscc9() -> BusNetwork {
    let br = |from: usize, to: usize, r: f64, x: f64, b: f64| Branch {
        from: from - 1,
        to: to - 1,
        r,
        x,
        b,
    };
    BusNetwork {
        n_bus: 9,
        branches: vec![
            br(1, 4, 0.0, 0.0576, 0.0),
            br(4, 5, 0.010, 0.085, 0.176),
            br(4, 6, 0.017, 0.092, 0.158),
            br(5, 7, 0.032, 0.161, 0.306),
            br(6, 9, 0.039, 0.170, 0.358),
            br(7, 8, 0.0085, 0.072, 0.149),
            br(8, 9, 0.0119, 0.1008, 0.209),
            br(2, 7, 0.0, 0.0625, 0.0),
            br(3, 9, 0.0, 0.0586, 0.0),
        ],
        loads: vec![
            Load {
                bus: 4,
                p: 1.25,
                q: 0.5,
            },
            Load {
                bus: 5,
                p: 0.9,
                q: 0.3,
            },
            Load {
                bus: 7,
                p: 1.0,
                q: 0.35,
            },
        ],
        gen_bus: vec![0, 1, 2],
        xdp: vec![0.0608, 0.1198, 0.1813],
    }
}
