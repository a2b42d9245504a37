#![allow(dead_code)]

use std::path::PathBuf;

use pmu_dse::config::ScenarioConfig;
use pmu_dse::model::derive_coefficients;
use pmu_dse::network::{wscc9, FaultSpec, ReducedNetwork};
use pmu_dse::presets::{wscc9_machines, wscc9_operating_points};
use pmu_dse::simulator::{initialize, simulate, NoiseConfig, Plant, RotorState, SimSettings};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

pub fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&scenario_path(name)).unwrap()
}

pub fn settings(t_end: f64, dt: f64, pmu_rate: f64) -> SimSettings {
    SimSettings {
        t_end,
        dt,
        pmu_rate,
        noise: NoiseConfig::default(),
        seed: 0,
    }
}

pub fn wscc_plant(fault: Option<FaultSpec>) -> (Plant, Vec<RotorState>) {
    let params = wscc9_machines()
        .into_iter()
        .map(|r| derive_coefficients(r).unwrap())
        .collect();
    let net = ReducedNetwork::from_buses(wscc9(), fault).unwrap();
    initialize(params, net, &wscc9_operating_points()).unwrap()
}

/// Equilibrium with a rotor angle and a speed kick.
pub fn kicked(mut x: Vec<RotorState>) -> Vec<RotorState> {
    x[1][0] += 0.1;
    x[2][1] += 0.5;
    x
}

/// Flattened state of all machines after 2 s from the kicked equilibrium.
pub fn final_state(dt: f64) -> Vec<f64> {
    let (plant, x0) = wscc_plant(None);
    let rate = 1.0 / (dt * 5.0);
    let traj = simulate(plant, kicked(x0), vec![], &settings(2.0, dt, rate)).unwrap();
    traj.states
        .last()
        .unwrap()
        .iter()
        .flat_map(|s| s.to_array())
        .collect()
}

/// `(coarse error, fine error)` at `dt` and `dt/2` against a `dt/8` reference.
pub fn order_errors(dt: f64) -> (f64, f64) {
    let reference = final_state(dt / 8.0);
    let err = |x: Vec<f64>| {
        x.iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    (err(final_state(dt)), err(final_state(dt / 2.0)))
}
