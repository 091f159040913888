//! Mirror descent in mirror-map form.

use crate::problems::{MirrorMap, Objective};
use crate::trace::{LyapunovTrace, RunRecord};
use crate::{Error, Result, Vector};

/// Iterate of mirror descent: `x_k = dual_map(z_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdState {
    pub k: usize,
    pub x: Vector,
    pub z: Vector,
    pub step: f64,
}

impl MdState {
    /// Starts at `x0`, rejecting steps outside `(0, 2/L)`.
    pub fn new(x0: &Vector, obj: &dyn Objective, map: &dyn MirrorMap, step: f64) -> Result<Self> {
        let l = obj.lipschitz();
        if step >= 2.0 / l {
            return Err(Error::GateViolation(format!(
                "mirror descent needs s < 2/L = {}, got {step}",
                2.0 / l
            )));
        }
        Self::new_unchecked(x0, obj, map, step)
    }

    /// Starts at `x0` without the step-size gate.
    pub fn new_unchecked(
        x0: &Vector,
        obj: &dyn Objective,
        map: &dyn MirrorMap,
        step: f64,
    ) -> Result<Self> {
        check_common(x0, obj, map, step)?;
        let z = map.to_dual(x0)?;
        Ok(MdState {
            k: 0,
            x: map.dual_map(&z),
            z,
            step,
        })
    }
}

pub(crate) fn check_common(
    x0: &Vector,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    step: f64,
) -> Result<()> {
    if obj.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: map.dim(),
        });
    }
    if x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {step}"
        )));
    }
    Ok(())
}

pub(crate) fn require_order_two(map: &dyn MirrorMap) -> Result<()> {
    if map.order() != 2 {
        return Err(Error::InvalidParameter(format!(
            "scheme needs a mirror map of order 2, got {}",
            map.order()
        )));
    }
    Ok(())
}

pub(crate) fn finite_or_fail(k: usize, what: &str, v: &Vector, at: &Vector) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure {
            iteration: k,
            what: what.to_string(),
            iterate: at.iter().copied().collect(),
        })
    }
}

/// `z_{k+1} = z_k - sigma s grad f(x_k)`, `x_{k+1} = dual_map(z_{k+1})`.
pub fn md_step(state: &MdState, obj: &dyn Objective, map: &dyn MirrorMap) -> Result<MdState> {
    require_order_two(map)?;
    let g = obj.gradient(&state.x);
    finite_or_fail(state.k, "non-finite gradient", &g, &state.x)?;
    let z = map.canonical_dual(&state.z - g * (map.sigma() * state.step));
    let x = map.dual_map(&z);
    finite_or_fail(state.k, "non-finite iterate", &x, &state.x)?;
    Ok(MdState {
        k: state.k + 1,
        x,
        z,
        step: state.step,
    })
}

/// The dual point of the known minimizer.
pub fn optimal_dual(obj: &dyn Objective, map: &dyn MirrorMap) -> Result<Vector> {
    let xs = obj.known_minimizer().ok_or(Error::UnsupportedDiagnostic(
        "objective has no known minimizer",
    ))?;
    map.to_dual(xs)
}

pub(crate) fn gap(obj: &dyn Objective, x: &Vector) -> Result<f64> {
    obj.optimality_gap(x).ok_or(Error::UnsupportedDiagnostic(
        "objective has no known minimum value",
    ))
}

/// `E(k) = k sigma s [f(x_k) - f*] + D*(z_k, z*)`.
pub fn md_lyapunov(
    state: &MdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    zstar: &Vector,
) -> Result<f64> {
    let fg = gap(obj, &state.x)?;
    Ok(state.k as f64 * map.sigma() * state.step * fg + map.dual_bregman(&state.z, zstar))
}

/// Observed change `E(k+1) - E(k)` and its certified upper bound
/// `(-k - 1/2 + (k+1) L s / 2) sigma |x_{k+1} - x_k|^2`.
pub fn md_certified_decrease(
    prev: &MdState,
    next: &MdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    zstar: &Vector,
) -> Result<(f64, f64)> {
    if next.k != prev.k + 1 {
        return Err(Error::InvalidParameter(format!(
            "states {} and {} are not consecutive",
            prev.k, next.k
        )));
    }
    let delta = md_lyapunov(next, obj, map, zstar)? - md_lyapunov(prev, obj, map, zstar)?;
    Ok((delta, md_bound(prev, next, obj, map)))
}

fn md_bound(prev: &MdState, next: &MdState, obj: &dyn Objective, map: &dyn MirrorMap) -> f64 {
    let k = prev.k as f64;
    let coef = -k - 0.5 + (k + 1.0) * obj.lipschitz() * prev.step / 2.0;
    coef * map.sigma() * (&next.x - &prev.x).norm_squared()
}

/// Columns of the mirror descent run record.
pub const MD_COLUMNS: [&str; 5] = ["k", "f_gap", "lyapunov", "certified_bound", "step_norm_sq"];

/// Runs `iterations` steps and records one row per transition.
pub fn run_md(
    mut state: MdState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    iterations: usize,
    record_iterates: bool,
) -> Result<(MdState, RunRecord)> {
    let zstar = optimal_dual(obj, map)?;
    let mut rec = RunRecord::new(MD_COLUMNS.to_vec(), LyapunovTrace::discrete());
    let mut e = md_lyapunov(&state, obj, map, &zstar)?;
    rec.trace.times.push(state.k as f64);
    rec.trace.values.push(e);
    for _ in 0..iterations {
        let next = md_step(&state, obj, map)?;
        let bound = md_bound(&state, &next, obj, map);
        let step_sq = (&next.x - &state.x).norm_squared();
        rec.rows
            .push(vec![state.k as f64, gap(obj, &state.x)?, e, bound, step_sq]);
        if record_iterates {
            rec.xs.push(state.x.clone());
        }
        e = md_lyapunov(&next, obj, map, &zstar)?;
        rec.trace.times.push(next.k as f64);
        rec.trace.values.push(e);
        rec.trace.certified_bounds.push(bound);
        state = next;
    }
    Ok((state, rec))
}
