//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mirrorlab::diagnostics::{audit_lyapunov, FitWindow};

use crate::compare::{compare, write_compare, DEFAULT_HORIZON, DEFAULT_STEPS};
use crate::config::{parse_vary, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::experiment::{output_dir, run_experiment, RunOptions, OUT_ENV};
use crate::output::read_lyapunov;
use crate::rates::{compute_rates, default_checks, load, render, Format, RateCheck};
use crate::sweep::{expand, run_sweep};

#[derive(Debug, Parser)]
#[command(
    name = "mirrorlab",
    version,
    about = "Run and audit mirror descent experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its trace, metadata and timing.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Run the cartesian product of `--vary` values, one directory per point.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        run: RunFlags,
        /// `key=v1,v2,...`; repeat for more axes.
        #[arg(long, required = true)]
        vary: Vec<String>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Fit power-law rates to a trace and compare them with targets.
    Rates {
        /// Run directory or trace CSV.
        path: PathBuf,
        /// `column=target` or `min(column)=target`; defaults follow the algorithm.
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Fit window `lo:hi` in units of the k or t column.
        #[arg(long)]
        window: Option<String>,
        /// Algorithm id, when the trace has no `meta.json` next to it.
        #[arg(long)]
        algo: Option<String>,
        /// Order of the higher-order scheme, when there is no `meta.json`.
        #[arg(long)]
        p: Option<u32>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Check a Lyapunov file against its certified bounds.
    Audit {
        /// Run directory or `lyapunov.csv`.
        path: PathBuf,
        /// Defaults to the tolerance recorded in `meta.json`, else 1e-9 (k) or 1e-6 (t).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Compare accelerated descent with the accelerated flow for shrinking steps.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; defaults to `$MIRRORLAB_OUT/compare-seed<seed>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_STEPS)]
        steps: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// Output directory (sweep: root directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Do not fail when the Lyapunov audit reports violations.
    #[arg(long)]
    pub no_audit: bool,
    /// Run even when a step-size or constant gate is violated.
    #[arg(long)]
    pub allow_gate_violation: bool,
}

impl RunFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            allow_gate_violation: self.allow_gate_violation,
            enforce_audit: !self.no_audit,
        }
    }
}

/// A TOML file plus per-key flag overrides; flags win.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with `[objective]`, `[map]`, `[algorithm]` and `[output]` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Any key as `key=value` or `section.key=value`; repeatable.
    #[arg(long = "set")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// quadratic | logsumexp | simplex-quadratic
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub eig_min: Option<f64>,
    #[arg(long)]
    pub eig_max: Option<f64>,
    /// euclidean | entropy | pth_power
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub p: Option<u32>,
    /// Feasible set of the euclidean map: whole-space | simplex | box | ball
    #[arg(long)]
    pub feasible_set: Option<String>,
    /// md | amd-unconstrained | amd-constrained | amd-higher-order | flow-mirror | flow-amd
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long = "s-over-L", alias = "s-over-l")]
    pub s_over_l: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long = "const-C", alias = "const-c")]
    pub const_c: Option<f64>,
    #[arg(long = "const-M", alias = "const-m")]
    pub const_m: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub sqrt_s: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub record_iterates: bool,
    #[arg(long)]
    pub audit_tolerance: Option<f64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{s}'")))?;
            cfg.set_key(k.trim(), v.trim())?;
        }
        fn put<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        put(&mut cfg.seed, &self.seed);
        put(&mut cfg.objective.id, &self.objective);
        put(&mut cfg.objective.dim, &self.dim);
        put(&mut cfg.objective.eig_min, &self.eig_min);
        put(&mut cfg.objective.eig_max, &self.eig_max);
        put(&mut cfg.map.id, &self.map);
        put(&mut cfg.map.p, &self.p);
        put(&mut cfg.map.set, &self.feasible_set);
        let a = &mut cfg.algorithm;
        put(&mut a.id, &self.algo);
        if self.step.is_some() {
            a.step = self.step;
        }
        if let Some(r) = self.s_over_l {
            a.s_over_l = r;
            a.step = None;
        }
        put(&mut a.iters, &self.iters);
        if self.const_c.is_some() {
            a.const_c = self.const_c;
        }
        put(&mut a.const_m, &self.const_m);
        put(&mut a.t_end, &self.t_end);
        put(&mut a.tol, &self.tol);
        put(&mut a.delta, &self.delta);
        if self.sqrt_s.is_some() {
            a.sqrt_s = self.sqrt_s;
        }
        put(&mut a.samples, &self.samples);
        if self.record_iterates {
            cfg.output.record_iterates = true;
        }
        if self.audit_tolerance.is_some() {
            cfg.output.audit_tolerance = self.audit_tolerance;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_window(spec: &str) -> CliResult<FitWindow> {
    let bad = || CliError::Config(format!("--window expects lo:hi, got '{spec}'"));
    let (lo, hi) = spec.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo <= hi) {
        return Err(bad());
    }
    Ok(FitWindow::Times(lo, hi))
}

fn lyapunov_path(path: &Path) -> (PathBuf, Option<serde_json::Value>) {
    let (file, dir) = if path.is_dir() {
        (path.join("lyapunov.csv"), path.to_path_buf())
    } else {
        (
            path.to_path_buf(),
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        )
    };
    let meta = std::fs::read_to_string(dir.join("meta.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok());
    (file, meta)
}

/// Executes a parsed command line.
pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, run } => {
            let mut cfg = config.resolve()?;
            if let Some(out) = &run.out {
                cfg.output.dir = Some(out.clone());
            }
            let dir = output_dir(&cfg);
            let exec = run_experiment(&cfg, run.options(), &dir)?;
            let a = &exec.audit;
            println!(
                "{}: {} rows, {} audit violations in {} steps -> {}",
                cfg.run_name(),
                exec.record.rows.len(),
                a.violations,
                a.total_steps,
                dir.display()
            );
            Ok(())
        }
        Command::Sweep {
            config,
            run,
            vary,
            jobs,
        } => {
            let base = config.resolve()?;
            let varies = vary
                .iter()
                .map(|v| parse_vary(v))
                .collect::<CliResult<Vec<_>>>()?;
            let root = run.out.clone().unwrap_or_else(|| {
                std::env::var_os(OUT_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("runs"))
                    .join(format!("sweep-{}", base.run_name()))
            });
            let points = expand(&base, &varies, &root)?;
            let outcomes = run_sweep(points, &root, run.options(), jobs)?;
            let failed: Vec<_> = outcomes.iter().filter(|o| o.exit_code() != 0).collect();
            println!(
                "{} runs, {} failed -> {}",
                outcomes.len(),
                failed.len(),
                root.join("sweep.csv").display()
            );
            match failed.first() {
                Some(o) => Err(CliError::Sweep {
                    failed: failed.len(),
                    total: outcomes.len(),
                    code: o.exit_code(),
                }),
                None => Ok(()),
            }
        }
        Command::Rates {
            path,
            checks,
            window,
            algo,
            p,
            format,
        } => {
            let (table, meta) = load(&path)?;
            let checks = if checks.is_empty() {
                let algo = algo
                    .or_else(|| {
                        meta.as_ref()
                            .and_then(|m| m["config"]["algorithm"]["id"].as_str().map(String::from))
                    })
                    .ok_or_else(|| {
                        CliError::Config("no meta.json found; pass --algo or --check".into())
                    })?;
                let order = p
                    .or_else(|| {
                        meta.as_ref()
                            .and_then(|m| m["order"].as_u64())
                            .map(|v| v as u32)
                    })
                    .unwrap_or(2);
                default_checks(&algo, order)?
            } else {
                checks
                    .iter()
                    .map(|c| RateCheck::parse(c))
                    .collect::<CliResult<Vec<_>>>()?
            };
            let window = window
                .as_deref()
                .map(parse_window)
                .transpose()?
                .unwrap_or(FitWindow::Default);
            let rows = compute_rates(&table, &checks, window)?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Text => Format::Text,
            };
            print!("{}", render(&rows, format));
            let failed: Vec<&str> = rows
                .iter()
                .filter(|r| !r.pass)
                .map(|r| r.quantity.as_str())
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verdict(format!(
                    "rate targets missed: {}",
                    failed.join(", ")
                )))
            }
        }
        Command::Audit { path, tolerance } => {
            let (file, meta) = lyapunov_path(&path);
            let trace = read_lyapunov(&file)?;
            let tol = tolerance
                .or_else(|| meta.as_ref().and_then(|m| m["audit"]["tolerance"].as_f64()))
                .unwrap_or(match trace.kind {
                    mirrorlab::TraceKind::Discrete => crate::experiment::DISCRETE_AUDIT_TOLERANCE,
                    mirrorlab::TraceKind::Continuous => crate::experiment::FLOW_AUDIT_TOLERANCE,
                });
            let report = audit_lyapunov(&trace, tol)?;
            println!(
                "steps {}  violations {}  worst_excess {:e}  tolerance {:e}",
                report.total_steps, report.violations, report.worst_excess, tol
            );
            if report.violations > 0 {
                return Err(CliError::Audit {
                    violations: report.violations,
                    total: report.total_steps,
                    worst: report.worst_excess,
                });
            }
            Ok(())
        }
        Command::Compare {
            config,
            out,
            steps,
            horizon,
        } => {
            let cfg = config.resolve()?;
            let dir = out.unwrap_or_else(|| {
                std::env::var_os(OUT_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("runs"))
                    .join(format!("compare-seed{}", cfg.seed))
            });
            let report = compare(&cfg, &steps, horizon)?;
            write_compare(&dir, &report)?;
            for (r, env) in report.runs.iter().zip(report.envelopes()) {
                println!(
                    "s = {:e}  max deviation {:e}  envelope {:e}",
                    r.step, r.max_deviation, env
                );
            }
            println!("monotone: {} -> {}", report.monotone, dir.display());
            if report.monotone {
                Ok(())
            } else {
                Err(CliError::Verdict(
                    "deviation does not shrink with the step".into(),
                ))
            }
        }
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_exit_code() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
