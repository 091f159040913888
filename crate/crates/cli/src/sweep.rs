//! Cartesian parameter sweeps, run concurrently into separate directories.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{run_experiment, RunOptions};

/// One point of the sweep grid.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, String)>,
    pub config: ExperimentConfig,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub point: SweepPoint,
    pub result: CliResult<usize>,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        self.result.as_ref().map_or_else(|e| e.exit_code(), |_| 0)
    }
}

fn dir_name(index: usize, assignments: &[(String, String)]) -> String {
    let label: String = assignments
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("_")
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._=-+".contains(c) {
                c
            } else {
                '-'
            }
        })
        .collect();
    if label.is_empty() {
        format!("{index:03}")
    } else {
        format!("{index:03}-{label}")
    }
}

/// Expands the grid in row-major order (the last varied key changes fastest)
/// and points each configuration at its own directory under `root`.
pub fn expand(
    base: &ExperimentConfig,
    varies: &[(String, Vec<String>)],
    root: &Path,
) -> CliResult<Vec<SweepPoint>> {
    let mut grid: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in varies {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((key.clone(), v.clone()));
                    next
                })
            })
            .collect();
    }
    grid.into_iter()
        .enumerate()
        .map(|(index, assignments)| {
            let mut config = base.clone();
            for (k, v) in &assignments {
                config.set_key(k, v)?;
            }
            config.output.dir = Some(root.join(dir_name(index, &assignments)));
            config.validate()?;
            Ok(SweepPoint {
                index,
                assignments,
                config,
            })
        })
        .collect()
}

/// Runs every point on a pool of `jobs` threads (all cores when `None`) and
/// writes `sweep.csv` under `root`.
pub fn run_sweep(
    points: Vec<SweepPoint>,
    root: &Path,
    opts: RunOptions,
    jobs: Option<usize>,
) -> CliResult<Vec<SweepOutcome>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<SweepOutcome> = pool.install(|| {
        points
            .into_par_iter()
            .map(|point| {
                let dir: PathBuf = point
                    .config
                    .output
                    .dir
                    .clone()
                    .expect("expand sets the directory");
                let result = run_experiment(&point.config, opts, &dir).map(|e| e.audit.violations);
                if let Err(e) = &result {
                    log::warn!("sweep point {}: {e}", point.index);
                }
                SweepOutcome { point, result }
            })
            .collect()
    });
    write_summary(root, &outcomes)?;
    Ok(outcomes)
}

fn write_summary(root: &Path, outcomes: &[SweepOutcome]) -> CliResult<()> {
    fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
    let keys: Vec<&str> = outcomes
        .first()
        .map(|o| {
            o.point
                .assignments
                .iter()
                .map(|(k, _)| k.as_str())
                .collect()
        })
        .unwrap_or_default();
    let path = root.join("sweep.csv");
    let mut w =
        csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, std::io::Error::other(e)))?;
    let mut header = vec!["index", "dir"];
    header.extend(&keys);
    header.extend(["exit_code", "violations", "error"]);
    let io = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
    w.write_record(&header).map_err(io)?;
    for o in outcomes {
        let dir = o
            .point
            .config
            .output
            .dir
            .as_ref()
            .expect("expand sets the directory");
        let mut row = vec![o.point.index.to_string(), dir.display().to_string()];
        row.extend(o.point.assignments.iter().map(|(_, v)| v.clone()));
        row.push(o.exit_code().to_string());
        match &o.result {
            Ok(v) => row.extend([v.to_string(), String::new()]),
            Err(CliError::Audit { violations, .. }) => {
                row.extend([violations.to_string(), String::new()])
            }
            Err(e) => row.extend([String::new(), e.to_string()]),
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))
}
