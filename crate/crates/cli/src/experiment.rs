//! Runs one configured experiment and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mirrorlab::amd::{
    default_oracle, higher_order_gate, run_amd, run_higher_order, AmdState, AmdVariant,
    HigherOrderState,
};
use mirrorlab::diagnostics::{audit_lyapunov, AuditReport};
use mirrorlab::flows::{
    flow_record, integrate_accelerated_flow, integrate_mirror_flow, uniform_samples, FlowKind,
};
use mirrorlab::md::{run_md, MdState};
use mirrorlab::{RunRecord, TraceKind};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{write_iterates, write_json, write_lyapunov, write_trace};
use crate::registry::build_problem;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "MIRRORLAB_OUT";

pub const DISCRETE_AUDIT_TOLERANCE: f64 = 1e-9;
pub const FLOW_AUDIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Run with the unchecked constructors when a step gate fails.
    pub allow_gate_violation: bool,
    /// Turn audit violations into an error.
    pub enforce_audit: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            allow_gate_violation: false,
            enforce_audit: true,
        }
    }
}

/// Results of one experiment before anything is written.
#[derive(Debug, Clone)]
pub struct Execution {
    pub record: RunRecord,
    pub lipschitz: f64,
    pub sigma: f64,
    pub order: u32,
    pub step: f64,
    pub const_c: Option<f64>,
    pub sqrt_s: Option<f64>,
    pub gate_overridden: bool,
    pub audit_tolerance: f64,
    pub audit: AuditReport,
    pub elapsed: Duration,
}

fn gated<T>(
    checked: mirrorlab::Result<T>,
    allow: bool,
    overridden: &mut bool,
    unchecked: impl FnOnce() -> mirrorlab::Result<T>,
) -> CliResult<T> {
    match checked {
        Err(mirrorlab::Error::GateViolation(msg)) if allow => {
            log::warn!("{msg}; running anyway because the gate override is set");
            *overridden = true;
            Ok(unchecked()?)
        }
        other => Ok(other?),
    }
}

/// Builds the problem, runs the configured algorithm and audits its trace.
pub fn execute(cfg: &ExperimentConfig, opts: RunOptions) -> CliResult<Execution> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    let obj = problem.objective.as_ref();
    let map = problem.map.as_ref();
    let x0 = &problem.x0;
    let a = &cfg.algorithm;
    let lipschitz = obj.lipschitz();
    let step = a.step.unwrap_or(a.s_over_l / lipschitz);
    let record_iterates = cfg.output.record_iterates;
    let allow = opts.allow_gate_violation;
    let mut overridden = false;
    let mut const_c = None;
    let mut sqrt_s = None;
    let start = Instant::now();
    let record = match a.id.as_str() {
        "md" => {
            let state = gated(
                MdState::new(x0, obj, map, step),
                allow,
                &mut overridden,
                || MdState::new_unchecked(x0, obj, map, step),
            )?;
            run_md(state, obj, map, a.iters, record_iterates)?.1
        }
        "amd-unconstrained" | "amd-constrained" => {
            let variant = if a.id == "amd-unconstrained" {
                AmdVariant::Unconstrained
            } else {
                AmdVariant::Constrained
            };
            let state = gated(
                AmdState::new(variant, x0, obj, map, step),
                allow,
                &mut overridden,
                || AmdState::new_unchecked(variant, x0, obj, map, step),
            )?;
            run_amd(state, obj, map, a.iters, record_iterates)?.1
        }
        "amd-higher-order" => {
            let p = map.order();
            let c = a
                .const_c
                .unwrap_or(a.c_over_gate * higher_order_gate(map.sigma(), a.const_m, p));
            const_c = Some(c);
            let oracle = default_oracle(p)?;
            let state = gated(
                HigherOrderState::new(x0, obj, map, p, c, a.const_m, step),
                allow,
                &mut overridden,
                || HigherOrderState::new_unchecked(x0, obj, map, p, c, a.const_m, step),
            )?;
            run_higher_order(state, obj, map, oracle.as_ref(), a.iters, record_iterates)?.1
        }
        "flow-mirror" => {
            let samples = uniform_samples(a.t_end, a.samples);
            let states = integrate_mirror_flow(x0, obj, map, a.t_end, a.tol, &samples)?;
            flow_record(&states, FlowKind::Mirror, obj, map, record_iterates)?
        }
        "flow-amd" => {
            let r = a.sqrt_s.unwrap_or(step.sqrt());
            sqrt_s = Some(r);
            let samples = uniform_samples(a.t_end, a.samples);
            let states =
                integrate_accelerated_flow(x0, obj, map, r, a.t_end, a.tol, a.delta, &samples)?;
            flow_record(&states, FlowKind::Accelerated, obj, map, record_iterates)?
        }
        other => return Err(CliError::Config(format!("unknown algorithm id '{other}'"))),
    };
    let elapsed = start.elapsed();
    let audit_tolerance = cfg
        .output
        .audit_tolerance
        .unwrap_or(match record.trace.kind {
            TraceKind::Discrete => DISCRETE_AUDIT_TOLERANCE,
            TraceKind::Continuous => FLOW_AUDIT_TOLERANCE,
        });
    let audit = audit_lyapunov(&record.trace, audit_tolerance)?;
    Ok(Execution {
        record,
        lipschitz,
        sigma: map.sigma(),
        order: map.order(),
        step,
        const_c,
        sqrt_s,
        gate_overridden: overridden,
        audit_tolerance,
        audit,
        elapsed,
    })
}

/// `cfg.output.dir`, else `$MIRRORLAB_OUT/<run name>`, else `runs/<run name>`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &cfg.output.dir {
        return dir.clone();
    }
    let root = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(cfg.run_name())
}

/// Run metadata. Leaves out timing and the output directory so that reruns
/// are byte-identical wherever they are written.
pub fn metadata(cfg: &ExperimentConfig, exec: &Execution) -> serde_json::Value {
    let audit = &exec.audit;
    let mut echo = cfg.clone();
    echo.output.dir = None;
    json!({
        "config": echo,
        "lipschitz": exec.lipschitz,
        "sigma": exec.sigma,
        "order": exec.order,
        "step": exec.step,
        "const_C": exec.const_c,
        "sqrt_s": exec.sqrt_s,
        "trace_kind": match exec.record.trace.kind {
            TraceKind::Discrete => "discrete",
            TraceKind::Continuous => "continuous",
        },
        "rows": exec.record.rows.len(),
        "lyapunov_initial": exec.record.trace.values.first(),
        "lyapunov_final": exec.record.trace.values.last(),
        "gate_overridden": exec.gate_overridden,
        "audit": {
            "tolerance": exec.audit_tolerance,
            "total_steps": audit.total_steps,
            "violations": audit.violations,
            "worst_excess": audit.worst_excess,
        },
    })
}

pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, exec: &Execution) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_trace(&dir.join("trace.csv"), &exec.record)?;
    write_lyapunov(&dir.join("lyapunov.csv"), &exec.record.trace)?;
    if cfg.output.record_iterates {
        write_iterates(&dir.join("iterates.csv"), &exec.record)?;
    }
    write_json(&dir.join("meta.json"), &metadata(cfg, exec))?;
    write_json(
        &dir.join("timing.json"),
        &json!({ "wall_seconds": exec.elapsed.as_secs_f64() }),
    )?;
    Ok(())
}

/// Executes, writes the artifacts to `dir`, then applies the audit verdict.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    opts: RunOptions,
    dir: &Path,
) -> CliResult<Execution> {
    let exec = execute(cfg, opts)?;
    write_outputs(dir, cfg, &exec)?;
    let a = &exec.audit;
    log::info!(
        "{}: {} rows, audit {} violations in {} steps, wrote {}",
        cfg.run_name(),
        exec.record.rows.len(),
        a.violations,
        a.total_steps,
        dir.display()
    );
    if opts.enforce_audit && a.violations > 0 {
        return Err(CliError::Audit {
            violations: a.violations,
            total: a.total_steps,
            worst: a.worst_excess,
        });
    }
    Ok(exec)
}
