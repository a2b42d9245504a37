//! Accuracy metrics and error-law fits.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// Closed time window `[start, end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub const ALL: Window = Window {
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
    };

    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Result of one sMAPE evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Smape {
    /// Percent, in `[0, 200]`.
    pub value: f64,
    /// Pairs that entered the mean.
    pub samples: usize,
    /// Pairs skipped because both values were zero.
    pub degenerate: usize,
}

/// Symmetric mean absolute percentage error over the samples inside `window`.
///
/// `t`, `est` and `truth` are aligned series.
pub fn smape(t: &[f64], est: &[f64], truth: &[f64], window: Window) -> Result<Smape> {
    assert!(
        t.len() == est.len() && t.len() == truth.len(),
        "series must be aligned"
    );
    let mut sum = 0.0;
    let mut samples = 0;
    let mut degenerate = 0;
    for ((&t, &a), &b) in t.iter().zip(est).zip(truth) {
        if !window.contains(t) {
            continue;
        }
        let den = (a.abs() + b.abs()) / 2.0;
        if den == 0.0 {
            degenerate += 1;
            continue;
        }
        sum += (a - b).abs() / den;
        samples += 1;
    }
    if samples == 0 {
        return Err(Error::EmptyWindow {
            start: window.start,
            end: window.end,
        });
    }
    Ok(Smape {
        value: 100.0 * sum / samples as f64,
        samples,
        degenerate,
    })
}

/// Least-squares slope of `ln|e|` against `t`.
pub fn error_decay_fit(t: &[f64], e: &[f64]) -> Result<f64> {
    assert_eq!(t.len(), e.len(), "series must be aligned");
    if t.len() < 2 {
        return Err(Error::Fit("need at least two samples".into()));
    }
    if let Some((i, _)) = e.iter().enumerate().find(|(_, v)| !(v.abs() > 0.0)) {
        return Err(Error::Fit(format!(
            "non-positive error magnitude at t={}",
            t[i]
        )));
    }
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let l: Vec<f64> = e.iter().map(|v| v.abs().ln()).collect();
    let lm = l.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|t| (t - tm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all samples share one timestamp".into()));
    }
    let sxy: f64 = t.iter().zip(&l).map(|(t, l)| (t - tm) * (l - lm)).sum();
    Ok(sxy / sxx)
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmapeRow {
    pub machine: usize,
    pub state: String,
    pub window: Window,
    pub smape: Smape,
}

/// Per-machine, per-state sMAPE table.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SmapeReport {
    pub rows: Vec<SmapeRow>,
}

impl SmapeReport {
    pub fn push(&mut self, machine: usize, state: &str, window: Window, smape: Smape) {
        self.rows.push(SmapeRow {
            machine,
            state: state.to_string(),
            window,
            smape,
        });
    }

    pub fn get(&self, machine: usize, state: &str) -> Option<&Smape> {
        self.rows
            .iter()
            .find(|r| r.machine == machine && r.state == state)
            .map(|r| &r.smape)
    }

    /// Aligned plain-text table: one line per machine, one column per state.
    pub fn to_table(&self) -> String {
        let mut states: Vec<&str> = vec![];
        let mut machines: Vec<usize> = vec![];
        for r in &self.rows {
            if !states.contains(&r.state.as_str()) {
                states.push(&r.state);
            }
            if !machines.contains(&r.machine) {
                machines.push(r.machine);
            }
        }
        let mut out = format!("{:<10}", "machine");
        for s in &states {
            let _ = write!(out, "{:>14}", format!("sMAPE {s}"));
        }
        out.push('\n');
        for m in machines {
            let _ = write!(out, "{m:<10}");
            for s in &states {
                match self.get(m, s) {
                    Some(v) => {
                        let _ = write!(out, "{:>14}", format!("{:.4} %", v.value));
                    }
                    None => {
                        let _ = write!(out, "{:>14}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// `machine,state,window_start,window_end,smape_percent,samples,degenerate`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record([
            "machine",
            "state",
            "window_start",
            "window_end",
            "smape_percent",
            "samples",
            "degenerate",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.machine.to_string(),
                r.state.clone(),
                r.window.start.to_string(),
                r.window.end.to_string(),
                r.smape.value.to_string(),
                r.smape.samples.to_string(),
                r.smape.degenerate.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Fit(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
