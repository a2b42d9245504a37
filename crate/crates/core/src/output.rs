//! CSV writers for trajectories, PMU streams and observer estimates.
//!
//! Floats use the shortest representation that round-trips.

use std::io::Write;

use crate::error::Result;
use crate::pipeline::EstimateRow;
use crate::simulator::Trajectory;

pub const TRAJECTORY_HEADER: [&str; 14] = [
    "t",
    "machine_id",
    "x1",
    "x2",
    "x3",
    "Vf",
    "q",
    "Ef",
    "p1",
    "p2",
    "p3",
    "Vt",
    "theta_t",
    "omega_t",
];

pub const PMU_HEADER: [&str; 7] = ["t", "machine_id", "y1", "y2", "y3", "y4", "y5"];

pub const ESTIMATES_HEADER: [&str; 17] = [
    "t",
    "machine_id",
    "x1_hat",
    "x2_hat",
    "x3_hat",
    "clamped",
    "theta1_hat",
    "theta2_hat",
    "theta3_hat",
    "delta",
    "excitation",
    "x1",
    "x2",
    "x3",
    "theta1",
    "theta2",
    "theta3",
];

const GRADIENT_HEADER: [&str; 3] = ["theta1_grad", "theta2_grad", "theta3_grad"];

fn f(v: f64) -> String {
    v.to_string()
}

/// One row per machine for every `stride`-th simulation step.
pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory, stride: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for k in (0..traj.times.len()).step_by(stride.max(1)) {
        for (m, (s, term)) in traj.states[k].iter().zip(&traj.terminals[k]).enumerate() {
            let mut rec = vec![f(traj.times[k]), m.to_string()];
            rec.extend(s.to_array().map(f));
            rec.extend([f(term.vt), f(term.theta_t), f(term.omega_t)]);
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_pmu<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PMU_HEADER)?;
    for row in &traj.pmu {
        for (m, s) in row.iter().enumerate() {
            let mut rec = vec![f(s.t), m.to_string()];
            rec.extend(s.channels().map(f));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Estimates of each listed machine next to the true values at the same
/// instants, ordered by time and then machine.
pub fn write_estimates<W: Write>(
    out: W,
    traj: &Trajectory,
    estimates: &[(usize, Vec<EstimateRow>)],
) -> Result<()> {
    let gradient = estimates
        .iter()
        .any(|(_, rows)| rows.first().is_some_and(|r| r.gradient_theta.is_some()));
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = ESTIMATES_HEADER.to_vec();
    if gradient {
        header.extend(GRADIENT_HEADER);
    }
    w.write_record(&header)?;
    let n = estimates.iter().map(|(_, r)| r.len()).max().unwrap_or(0);
    for k in 0..n {
        for (m, rows) in estimates {
            let Some(r) = rows.get(k) else { continue };
            let truth = traj.states[traj.pmu_steps[k]][*m];
            let theta = traj.params[*m].theta();
            let mut rec = vec![
                f(r.t),
                m.to_string(),
                f(r.x1_hat),
                f(r.x2_hat),
                f(r.x3_hat),
                u8::from(r.clamped).to_string(),
            ];
            rec.extend(r.theta_hat.map(f));
            rec.extend([
                f(r.delta),
                f(r.excitation),
                f(truth.x1),
                f(truth.x2),
                f(truth.x3),
            ]);
            rec.extend(theta.map(f));
            if gradient {
                rec.extend(r.gradient_theta.unwrap_or([f64::NAN; 3]).map(f));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::pipeline::observe;
    use crate::simulator::simulate;

    fn small_run() -> Trajectory {
        let c = ScenarioConfig::from_toml(
            "name = \"t\"\n[simulation]\nt_end = 0.1\n[network]\npreset = \"wscc9\"\n",
        )
        .unwrap();
        let r = c.resolve(None).unwrap();
        simulate(r.plant, r.x0, r.events, &r.settings).unwrap()
    }

    fn text(buf: Vec<u8>) -> String {
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn trajectory_layout_and_stride() {
        let traj = small_run();
        let mut buf = vec![];
        write_trajectory(&mut buf, &traj, 1).unwrap();
        let s = text(buf);
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_HEADER.join(","));
        assert_eq!(s.lines().count(), 1 + 3 * traj.times.len());
        let first: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(first.len(), 14);
        assert_eq!(first[2], traj.states[0][0].x1);

        let mut buf = vec![];
        write_trajectory(&mut buf, &traj, 20).unwrap();
        assert_eq!(text(buf).lines().count(), 1 + 3 * 7);
    }

    #[test]
    fn pmu_values_round_trip() {
        let traj = small_run();
        let mut buf = vec![];
        write_pmu(&mut buf, &traj).unwrap();
        let s = text(buf);
        assert_eq!(s.lines().count(), 1 + 3 * traj.pmu.len());
        let row: Vec<f64> = s
            .lines()
            .nth(2)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row[1], 1.0);
        assert_eq!(row[2..], traj.pmu[0][1].channels());
    }

    #[test]
    fn estimates_join_truth() {
        let traj = small_run();
        let rows = observe(
            Default::default(),
            &traj.params[2],
            60.0,
            &traj.pmu_stream(2),
        )
        .unwrap();
        let mut buf = vec![];
        write_estimates(&mut buf, &traj, &[(2, rows.clone())]).unwrap();
        let s = text(buf);
        assert_eq!(s.lines().next().unwrap(), ESTIMATES_HEADER.join(","));
        let last: Vec<&str> = s.lines().last().unwrap().split(',').collect();
        assert_eq!(last[1], "2");
        assert_eq!(
            last[11].parse::<f64>().unwrap(),
            traj.states_at_pmu(2).last().unwrap().x1
        );
        assert_eq!(last[16].parse::<f64>().unwrap(), traj.params[2].theta()[2]);
        assert_eq!(s.lines().count(), 1 + rows.len());
    }
}
