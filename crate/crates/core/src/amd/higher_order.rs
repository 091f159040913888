use super::oracle::{oracle_condition_residual, YOracle};
use crate::md::{check_common, finite_or_fail, gap, optimal_dual};
use crate::problems::{MirrorMap, Objective};
use crate::trace::{LyapunovTrace, RunRecord};
use crate::{Error, Result, Vector};

/// `k (k+1) ... (k+p-1)` as an exact integer.
pub fn rising_factorial(k: u64, p: u32) -> Result<u128> {
    let mut acc: u128 = 1;
    for i in 0..p as u64 {
        acc = acc.checked_mul(k as u128 + i as u128).ok_or_else(|| {
            Error::InvalidParameter(format!("rising factorial ({k}, {p}) overflows"))
        })?;
    }
    Ok(acc)
}

fn rising(k: usize, p: u32) -> Result<f64> {
    rising_factorial(k as u64, p).map(|v| v as f64)
}

/// Largest step constant allowed by the convergence theorem.
pub fn higher_order_gate(sigma: f64, m: f64, p: u32) -> f64 {
    let pf = p as f64;
    sigma * m.powf(pf - 1.0) / ((pf - 1.0).powf(pf - 1.0) * pf)
}

/// Iterate of the higher-order scheme together with the acceleration
/// condition residuals observed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherOrderState {
    pub p: u32,
    pub const_c: f64,
    pub const_m: f64,
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
    pub step: f64,
    pub condition_residuals: Vec<f64>,
    /// Certified bound on `E(k) - E(k-1)`; `None` before the first step.
    pub last_bound: Option<f64>,
}

impl HigherOrderState {
    /// Starts at `x0`, rejecting constants above the gate.
    pub fn new(
        x0: &Vector,
        obj: &dyn Objective,
        map: &dyn MirrorMap,
        p: u32,
        const_c: f64,
        const_m: f64,
        step: f64,
    ) -> Result<Self> {
        let state = Self::new_unchecked(x0, obj, map, p, const_c, const_m, step)?;
        let gate = higher_order_gate(map.sigma(), const_m, p);
        if const_c > gate {
            return Err(Error::GateViolation(format!(
                "step constant {const_c} exceeds sigma M^(p-1) / ((p-1)^(p-1) p) = {gate}"
            )));
        }
        Ok(state)
    }

    pub fn new_unchecked(
        x0: &Vector,
        obj: &dyn Objective,
        map: &dyn MirrorMap,
        p: u32,
        const_c: f64,
        const_m: f64,
        step: f64,
    ) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidOrder(p));
        }
        if map.order() != p {
            return Err(Error::InvalidParameter(format!(
                "order {p} scheme needs a mirror map of order {p}, got {}",
                map.order()
            )));
        }
        check_common(x0, obj, map, step)?;
        if !(const_c > 0.0) || !(const_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "constants must be positive, got C = {const_c}, M = {const_m}"
            )));
        }
        let z = map.to_dual(x0)?;
        let x = map.dual_map(&z);
        Ok(HigherOrderState {
            p,
            const_c,
            const_m,
            k: 0,
            y: x.clone(),
            x,
            z,
            step,
            condition_residuals: Vec::new(),
            last_bound: None,
        })
    }

    fn bound_coefficient(&self, sigma: f64) -> f64 {
        let e = 1.0 / (self.p as f64 - 1.0);
        -self.const_m
            + (self.p as f64 - 1.0) * (self.p as f64 / sigma).powf(e) * self.const_c.powf(e)
    }
}

/// `x_{k+1} = (p/(k+p)) dual_map(z_k) + (k/(k+p)) y_k`, `y_{k+1}` from the
/// oracle, `z_{k+1} = z_k - C s p (k+1)^{(p-1)} grad f(y_{k+1})`.
///
/// The acceleration condition residual at `(y_{k+1}, x_{k+1})` is appended
/// to the state; a negative value is recorded, not rejected.
pub fn higher_order_step(
    mut state: HigherOrderState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    oracle: &dyn YOracle,
) -> Result<HigherOrderState> {
    let k = state.k as f64;
    let pf = state.p as f64;
    let s = state.step;
    let x = map.dual_map(&state.z) * (pf / (k + pf)) + &state.y * (k / (k + pf));
    finite_or_fail(state.k, "non-finite iterate", &x, &state.x)?;
    let y = oracle.solve(&x, obj, map, s)?;
    finite_or_fail(state.k, "non-finite oracle output", &y, &x)?;
    let g = obj.gradient(&y);
    finite_or_fail(state.k, "non-finite gradient", &g, &y)?;
    let w = state.const_c * s * pf * rising(state.k + 1, state.p - 1)?;
    let z = map.canonical_dual(&state.z - &g * w);
    let residual = oracle_condition_residual(&y, &x, obj, map, state.p, state.const_m, s);
    let q = pf / (pf - 1.0);
    let bound = state.bound_coefficient(map.sigma())
        * state.const_c
        * rising(state.k + 1, state.p)?
        * s.powf(q)
        * map.dual_norm(&g).powf(q);
    state.condition_residuals.push(residual);
    state.k += 1;
    state.x = x;
    state.y = y;
    state.z = z;
    state.last_bound = Some(bound);
    Ok(state)
}

/// `E(k) = C s k^{(p)} [f(y_k) - f*] + D*(z_k, z*)` and the bound stored for
/// the step that produced the state.
pub fn higher_order_lyapunov(
    state: &HigherOrderState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    zstar: &Vector,
) -> Result<(f64, Option<f64>)> {
    let weight = state.const_c * state.step * rising(state.k, state.p)?;
    let e = weight * gap(obj, &state.y)? + map.dual_bregman(&state.z, zstar);
    Ok((e, state.last_bound))
}

pub const HIGHER_ORDER_COLUMNS: [&str; 6] = [
    "k",
    "f_gap",
    "lyapunov",
    "certified_bound",
    "eq17_residual",
    "grad_dual_pow",
];

/// Runs `iterations` steps. Row `k` reports `f(y_k)`, `E(k)`, the bound and
/// residual of the step `k -> k+1`, and `|grad f(y_{k+1})|_*^{p/(p-1)}`.
pub fn run_higher_order(
    mut state: HigherOrderState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    oracle: &dyn YOracle,
    iterations: usize,
    record_iterates: bool,
) -> Result<(HigherOrderState, RunRecord)> {
    let zstar = optimal_dual(obj, map)?;
    let mut rec = RunRecord::new(HIGHER_ORDER_COLUMNS.to_vec(), LyapunovTrace::discrete());
    let (mut e, _) = higher_order_lyapunov(&state, obj, map, &zstar)?;
    rec.trace.times.push(state.k as f64);
    rec.trace.values.push(e);
    let q = state.p as f64 / (state.p as f64 - 1.0);
    for _ in 0..iterations {
        let k = state.k;
        let f_gap = gap(obj, &state.y)?;
        if record_iterates {
            rec.xs.push(state.x.clone());
            rec.ys.push(state.y.clone());
        }
        state = higher_order_step(state, obj, map, oracle)?;
        let bound = state.last_bound.expect("step records its bound");
        let residual = *state
            .condition_residuals
            .last()
            .expect("step records its residual");
        let grad_pow = map.dual_norm(&obj.gradient(&state.y)).powf(q);
        rec.rows
            .push(vec![k as f64, f_gap, e, bound, residual, grad_pow]);
        e = higher_order_lyapunov(&state, obj, map, &zstar)?.0;
        rec.trace.times.push(state.k as f64);
        rec.trace.values.push(e);
        rec.trace.certified_bounds.push(bound);
    }
    Ok((state, rec))
}
