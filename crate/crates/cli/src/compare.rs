//! Discrete accelerated descent against the accelerated flow as `s -> 0`.

use std::fs;
use std::path::Path;

use mirrorlab::consistency::{compare_flow_discrete, iterations_for_horizon, DeviationReport};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::format_float;
use crate::registry::build_problem;

pub const DEFAULT_STEPS: [f64; 3] = [1e-2, 2.5e-3, 6.25e-4];
pub const DEFAULT_HORIZON: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub horizon: f64,
    pub start_norm: f64,
    pub runs: Vec<DeviationReport>,
    /// Whether the maximum deviation strictly decreases along `runs`.
    pub monotone: bool,
}

impl CompareReport {
    /// `10 sqrt(s) (1 + |x0|)` for each run.
    pub fn envelopes(&self) -> Vec<f64> {
        self.runs
            .iter()
            .map(|r| 10.0 * r.sqrt_s * (1.0 + self.start_norm))
            .collect()
    }
}

/// Compares over `(0, horizon]` for each step, using the configured problem
/// and the flow tolerance `cfg.algorithm.tol`.
pub fn compare(cfg: &ExperimentConfig, steps: &[f64], horizon: f64) -> CliResult<CompareReport> {
    cfg.validate()?;
    if steps.is_empty() || steps.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(CliError::Config("steps must be positive".into()));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(CliError::Config(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let problem = build_problem(cfg)?;
    let obj = problem.objective.as_ref();
    let map = problem.map.as_ref();
    let runs = steps
        .par_iter()
        .map(|&s| {
            let iters = iterations_for_horizon(s, horizon);
            compare_flow_discrete(&problem.x0, obj, map, s, iters, cfg.algorithm.tol)
        })
        .collect::<mirrorlab::Result<Vec<_>>>()?;
    let monotone = runs
        .windows(2)
        .all(|w| w[1].max_deviation < w[0].max_deviation);
    Ok(CompareReport {
        horizon,
        start_norm: problem.x0.norm(),
        runs,
        monotone,
    })
}

/// Writes `compare.csv` with one line per step and `deviation_<i>.csv` with
/// the matched-time deviations of run `i`.
pub fn write_compare(dir: &Path, report: &CompareReport) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut summary = String::from("step,sqrt_s,iterations,max_deviation,envelope\n");
    for (i, (r, env)) in report.runs.iter().zip(report.envelopes()).enumerate() {
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(r.step),
            format_float(r.sqrt_s),
            r.deviations.len() - 1,
            format_float(r.max_deviation),
            format_float(env)
        ));
        let mut detail = String::from("k,t,deviation\n");
        for (k, (t, d)) in r.times.iter().zip(&r.deviations).enumerate() {
            detail.push_str(&format!("{k},{},{}\n", format_float(*t), format_float(*d)));
        }
        let path = dir.join(format!("deviation_{i}.csv"));
        fs::write(&path, detail).map_err(|e| CliError::io(&path, e))?;
    }
    let path = dir.join("compare.csv");
    fs::write(&path, summary).map_err(|e| CliError::io(&path, e))
}
