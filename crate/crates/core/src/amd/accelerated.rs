use crate::md::{check_common, finite_or_fail, gap, optimal_dual, require_order_two};
use crate::problems::{MirrorMap, Objective};
use crate::trace::{LyapunovTrace, RunRecord};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmdVariant {
    /// Whole space, Euclidean norm.
    Unconstrained,
    /// Projected gradient step onto the feasible set of the mirror map.
    Constrained,
}

/// Iterate of accelerated mirror descent.
///
/// For the unconstrained variant `y` is not part of the recursion and is kept
/// equal to `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmdState {
    pub variant: AmdVariant,
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
    pub step: f64,
    /// Certified bound on `E(k) - E(k-1)` for the step that produced this
    /// state; `None` before the first step.
    pub last_bound: Option<f64>,
}

impl AmdState {
    /// Starts at `x0`. The unconstrained variant requires a whole-space map
    /// and `s <= 1/L`.
    pub fn new(
        variant: AmdVariant,
        x0: &Vector,
        obj: &dyn Objective,
        map: &dyn MirrorMap,
        step: f64,
    ) -> Result<Self> {
        if variant == AmdVariant::Unconstrained && step > 1.0 / obj.lipschitz() {
            return Err(Error::GateViolation(format!(
                "accelerated descent needs s <= 1/L = {}, got {step}",
                1.0 / obj.lipschitz()
            )));
        }
        Self::new_unchecked(variant, x0, obj, map, step)
    }

    pub fn new_unchecked(
        variant: AmdVariant,
        x0: &Vector,
        obj: &dyn Objective,
        map: &dyn MirrorMap,
        step: f64,
    ) -> Result<Self> {
        check_common(x0, obj, map, step)?;
        require_order_two(map)?;
        if variant == AmdVariant::Unconstrained && !map.feasible_set().is_whole_space() {
            return Err(Error::InvalidParameter(format!(
                "unconstrained variant needs a whole-space map, got {}",
                map.feasible_set().name()
            )));
        }
        let z = map.to_dual(x0)?;
        let x = map.dual_map(&z);
        Ok(AmdState {
            variant,
            k: 0,
            y: x.clone(),
            x,
            z,
            step,
            last_bound: None,
        })
    }
}

fn dual_update(state: &AmdState, g: &Vector, map: &dyn MirrorMap) -> Vector {
    let w = (state.k as f64 + 1.0) * map.sigma() * state.step / 2.0;
    map.canonical_dual(&state.z - g * w)
}

/// `z_{k+1} = z_k - ((k+1) sigma s / 2) grad f(x_k)` and
/// `(k+3) x_{k+1} = 2 dual_map(z_{k+1}) + (k+1) (x_k - s grad f(x_k))`.
pub fn amd_unconstrained_step(
    state: &AmdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
) -> Result<AmdState> {
    if state.variant != AmdVariant::Unconstrained {
        return Err(Error::InvalidParameter("state is not unconstrained".into()));
    }
    let k = state.k as f64;
    let s = state.step;
    let g = obj.gradient(&state.x);
    finite_or_fail(state.k, "non-finite gradient", &g, &state.x)?;
    let z = dual_update(state, &g, map);
    let anchor = map.dual_map(&z);
    let x = (anchor * 2.0 + (&state.x - &g * s) * (k + 1.0)) / (k + 3.0);
    finite_or_fail(state.k, "non-finite iterate", &x, &state.x)?;
    let bound = -(k + 1.0) * (k + 2.0) * map.sigma() * s * s / 2.0 * g.norm_squared();
    Ok(AmdState {
        variant: state.variant,
        k: state.k + 1,
        y: x.clone(),
        x,
        z,
        step: s,
        last_bound: Some(bound),
    })
}

/// `E(k) = (k+1)(k+2) sigma s [f(x_k) - f*] + 4 D*(z_{k+1}, z*)`, with
/// `z_{k+1}` computed from the state, and the bound stored for the step that
/// produced the state.
pub fn amd_unconstrained_lyapunov(
    state: &AmdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    zstar: &Vector,
) -> Result<(f64, Option<f64>)> {
    let k = state.k as f64;
    let g = obj.gradient(&state.x);
    let z_next = dual_update(state, &g, map);
    let e = (k + 1.0) * (k + 2.0) * map.sigma() * state.step * gap(obj, &state.x)?
        + 4.0 * map.dual_bregman(&z_next, zstar);
    Ok((e, state.last_bound))
}

/// `y_{k+1} = P_C(x_k - s grad f(x_k))`,
/// `x_{k+1} = ((k+1)/(k+3)) y_{k+1} + (2/(k+3)) dual_map(z_{k+1})`.
pub fn amd_constrained_step(
    state: &AmdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
) -> Result<AmdState> {
    if state.variant != AmdVariant::Constrained {
        return Err(Error::InvalidParameter("state is not constrained".into()));
    }
    let k = state.k as f64;
    let s = state.step;
    let g = obj.gradient(&state.x);
    finite_or_fail(state.k, "non-finite gradient", &g, &state.x)?;
    let z = dual_update(state, &g, map);
    let y = map.feasible_set().project(&(&state.x - &g * s));
    finite_or_fail(state.k, "projection failed", &y, &state.x)?;
    let x = &y * ((k + 1.0) / (k + 3.0)) + map.dual_map(&z) * (2.0 / (k + 3.0));
    finite_or_fail(state.k, "non-finite iterate", &x, &state.x)?;
    let bound = -(k + 1.0) * (k + 2.0) * (1.0 - obj.lipschitz() * s) * map.sigma() / 2.0
        * (&y - &state.x).norm_squared();
    Ok(AmdState {
        variant: state.variant,
        k: state.k + 1,
        x,
        y,
        z,
        step: s,
        last_bound: Some(bound),
    })
}

/// `E(k) = k(k+1) sigma s [f(y_k) - f*] + 4 D*(z_k, z*)` and the bound
/// stored for the step that produced the state.
pub fn amd_constrained_lyapunov(
    state: &AmdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    zstar: &Vector,
) -> Result<(f64, Option<f64>)> {
    let k = state.k as f64;
    let fg = gap(obj, &state.y)?;
    let e = k * (k + 1.0) * map.sigma() * state.step * fg + 4.0 * map.dual_bregman(&state.z, zstar);
    Ok((e, state.last_bound))
}

/// One step of whichever variant the state belongs to.
pub fn amd_step(state: &AmdState, obj: &dyn Objective, map: &dyn MirrorMap) -> Result<AmdState> {
    match state.variant {
        AmdVariant::Unconstrained => amd_unconstrained_step(state, obj, map),
        AmdVariant::Constrained => amd_constrained_step(state, obj, map),
    }
}

pub fn amd_lyapunov(
    state: &AmdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    zstar: &Vector,
) -> Result<(f64, Option<f64>)> {
    match state.variant {
        AmdVariant::Unconstrained => amd_unconstrained_lyapunov(state, obj, map, zstar),
        AmdVariant::Constrained => amd_constrained_lyapunov(state, obj, map, zstar),
    }
}

pub const AMD_UNCONSTRAINED_COLUMNS: [&str; 5] =
    ["k", "f_gap", "lyapunov", "certified_bound", "grad_norm_sq"];

pub const AMD_CONSTRAINED_COLUMNS: [&str; 5] = [
    "k",
    "f_gap",
    "lyapunov",
    "certified_bound",
    "gradient_map_norm_sq",
];

/// Runs either variant for `iterations` steps, one row per transition.
///
/// The unconstrained rows report `f(x_k)` and `|grad f(x_k)|^2`; the
/// constrained rows report `f(y_k)` and `|y_{k+1} - x_k|^2`.
pub fn run_amd(
    mut state: AmdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    iterations: usize,
    record_iterates: bool,
) -> Result<(AmdState, RunRecord)> {
    let zstar = optimal_dual(obj, map)?;
    let columns = match state.variant {
        AmdVariant::Unconstrained => AMD_UNCONSTRAINED_COLUMNS,
        AmdVariant::Constrained => AMD_CONSTRAINED_COLUMNS,
    };
    let mut rec = RunRecord::new(columns.to_vec(), LyapunovTrace::discrete());
    let (mut e, _) = amd_lyapunov(&state, obj, map, &zstar)?;
    rec.trace.times.push(state.k as f64);
    rec.trace.values.push(e);
    for _ in 0..iterations {
        let next = amd_step(&state, obj, map)?;
        let bound = next.last_bound.expect("step records its bound");
        let (f_gap, extra) = match state.variant {
            AmdVariant::Unconstrained => {
                (gap(obj, &state.x)?, obj.gradient(&state.x).norm_squared())
            }
            AmdVariant::Constrained => (gap(obj, &state.y)?, (&next.y - &state.x).norm_squared()),
        };
        rec.rows.push(vec![state.k as f64, f_gap, e, bound, extra]);
        if record_iterates {
            rec.xs.push(state.x.clone());
            rec.ys.push(state.y.clone());
        }
        e = amd_lyapunov(&next, obj, map, &zstar)?.0;
        rec.trace.times.push(next.k as f64);
        rec.trace.values.push(e);
        rec.trace.certified_bounds.push(bound);
        state = next;
    }
    Ok((state, rec))
}
