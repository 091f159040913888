//! Power-law rate checks on trace files.

use std::path::{Path, PathBuf};

use mirrorlab::diagnostics::{fit_rate, running_min, FitWindow};

use crate::error::{CliError, CliResult};
use crate::output::{format_float, read_table, Table};

/// A quantity to fit and the slope it must not exceed.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCheck {
    pub column: String,
    /// Fit the prefix minima instead of the raw series.
    pub running_min: bool,
    pub target: f64,
}

impl RateCheck {
    fn new(column: &str, running_min: bool, target: f64) -> Self {
        RateCheck {
            column: column.into(),
            running_min,
            target,
        }
    }

    pub fn label(&self) -> String {
        if self.running_min {
            format!("min({})", self.column)
        } else {
            self.column.clone()
        }
    }

    /// Parses `column=target` or `min(column)=target`.
    pub fn parse(spec: &str) -> CliResult<Self> {
        let bad = || {
            CliError::Config(format!(
                "expected column=target or min(column)=target, got '{spec}'"
            ))
        };
        let (lhs, rhs) = spec.split_once('=').ok_or_else(bad)?;
        let target: f64 = rhs.trim().parse().map_err(|_| bad())?;
        let lhs = lhs.trim();
        let (column, running_min) = match lhs.strip_prefix("min(").and_then(|s| s.strip_suffix(')'))
        {
            Some(inner) => (inner, true),
            None => (lhs, false),
        };
        if column.is_empty() {
            return Err(bad());
        }
        Ok(RateCheck::new(column, running_min, target))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub quantity: String,
    pub slope: f64,
    pub target: f64,
    pub pass: bool,
}

/// Checks implied by the algorithm that produced a trace. `order` is the
/// order of the higher-order scheme.
pub fn default_checks(algorithm: &str, order: u32) -> CliResult<Vec<RateCheck>> {
    let p = order as f64;
    Ok(match algorithm {
        "md" => vec![
            RateCheck::new("f_gap", false, -1.0 + 0.15),
            RateCheck::new("step_norm_sq", true, -2.0 + 0.15),
        ],
        "amd-unconstrained" => vec![
            RateCheck::new("f_gap", false, -2.0 + 0.15),
            RateCheck::new("grad_norm_sq", true, -3.0 + 0.2),
        ],
        "amd-constrained" => vec![
            RateCheck::new("f_gap", false, -2.0 + 0.15),
            RateCheck::new("gradient_map_norm_sq", true, -3.0 + 0.2),
        ],
        "amd-higher-order" => vec![
            RateCheck::new("f_gap", false, -p + 0.15),
            RateCheck::new("grad_dual_pow", true, -(p + 1.0) + 0.25),
        ],
        "flow-mirror" => vec![
            RateCheck::new("f_gap", false, -1.0 + 0.15),
            RateCheck::new("velocity_norm_sq", true, -2.0 + 0.2),
        ],
        "flow-amd" => vec![
            RateCheck::new("f_gap", false, -2.0 + 0.15),
            RateCheck::new("grad_norm_sq", true, -3.0 + 0.25),
        ],
        other => {
            return Err(CliError::Config(format!(
                "no default rate checks for algorithm '{other}'"
            )))
        }
    })
}

/// Fits every check against the table's leading `k` or `t` column. Rows
/// with a nonpositive abscissa are skipped.
pub fn compute_rates(
    table: &Table,
    checks: &[RateCheck],
    window: FitWindow,
) -> CliResult<Vec<RateRow>> {
    let axis = table
        .columns
        .first()
        .filter(|c| *c == "k" || *c == "t")
        .ok_or_else(|| CliError::Config("trace must start with a k or t column".into()))?;
    let times = table.column(axis).expect("axis column exists");
    let keep: Vec<usize> = (0..times.len()).filter(|&i| times[i] > 0.0).collect();
    let ts: Vec<f64> = keep.iter().map(|&i| times[i]).collect();
    checks
        .iter()
        .map(|c| {
            let full = table
                .column(&c.column)
                .ok_or_else(|| CliError::Config(format!("trace has no column '{}'", c.column)))?;
            let series = if c.running_min {
                running_min(&full)
            } else {
                full
            };
            let values: Vec<f64> = keep.iter().map(|&i| series[i]).collect();
            let fit = fit_rate(&values, &ts, window)?;
            Ok(RateRow {
                quantity: c.label(),
                slope: fit.slope,
                target: c.target,
                pass: fit.slope <= c.target,
            })
        })
        .collect()
}

/// Locates `trace.csv` and, when present, `meta.json` for a run directory
/// or a trace file path.
pub fn locate(path: &Path) -> (PathBuf, Option<serde_json::Value>) {
    let (trace, dir) = if path.is_dir() {
        (path.join("trace.csv"), path.to_path_buf())
    } else {
        (
            path.to_path_buf(),
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        )
    };
    let meta = std::fs::read_to_string(dir.join("meta.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok());
    (trace, meta)
}

pub fn load(path: &Path) -> CliResult<(Table, Option<serde_json::Value>)> {
    let (trace, meta) = locate(path);
    Ok((read_table(&trace)?, meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Text,
}

pub fn render(rows: &[RateRow], format: Format) -> String {
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.quantity.clone(),
                format_float(r.slope),
                format_float(r.target),
                r.pass.to_string(),
            ]
        })
        .collect();
    let header = ["quantity", "slope", "target", "pass"].map(String::from);
    let mut out = String::new();
    match format {
        Format::Csv => {
            for line in std::iter::once(&header).chain(&cells) {
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        Format::Text => {
            let mut widths = header.each_ref().map(|h| h.len());
            for line in &cells {
                for (w, c) in widths.iter_mut().zip(line) {
                    *w = (*w).max(c.len());
                }
            }
            for line in std::iter::once(&header).chain(&cells) {
                let padded: Vec<String> = line
                    .iter()
                    .zip(widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect();
                out.push_str(padded.join("  ").trim_end());
                out.push('\n');
            }
        }
    }
    out
}
