//! Continuous-time mirror flow and accelerated flow with Lyapunov monitors.

mod integrator;

pub use integrator::{integrate, DormandPrince, Solution};

use crate::md::{gap, optimal_dual};
use crate::problems::{MirrorMap, Objective};
use crate::trace::{LyapunovTrace, RunRecord};
use crate::{Error, Result, Vector};

/// Default regularization time for the `2/t` coefficient.
pub const DEFAULT_DELTA: f64 = 1e-3;

/// Finite-difference step for the dual-map velocity.
pub const VELOCITY_FD_STEP: f64 = 1e-6;

/// One sample of a flow trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub x: Vector,
    pub z: Vector,
    /// Primal velocity at `t`.
    pub dx: Vector,
    pub sqrt_s: f64,
    pub delta: f64,
}

fn check_samples(samples: &[f64], t_end: f64) -> Result<()> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if samples.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(Error::InvalidParameter(format!(
            "sample times must lie in [0, {t_end}]"
        )));
    }
    if samples.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "sample times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_start(x0: &Vector, obj: &dyn Objective, map: &dyn MirrorMap) -> Result<()> {
    if obj.dim() != map.dim() || x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x0.len().min(map.dim()),
        });
    }
    Ok(())
}

/// Central difference of the dual map along `dz`.
fn dual_velocity(map: &dyn MirrorMap, z: &Vector, dz: &Vector) -> Vector {
    let h = VELOCITY_FD_STEP;
    (map.dual_map(&(z + dz * h)) - map.dual_map(&(z - dz * h))) / (2.0 * h)
}

/// `Z' = -sigma grad f(dual_map(Z))` in dual coordinates, sampled at `samples`.
pub fn integrate_mirror_flow(
    x0: &Vector,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    t_end: f64,
    tol: f64,
    samples: &[f64],
) -> Result<Vec<FlowState>> {
    check_start(x0, obj, map)?;
    check_samples(samples, t_end)?;
    let method = DormandPrince::new(tol)?;
    let sigma = map.sigma();
    let rhs = |_t: f64, z: &Vector| -obj.gradient(&map.dual_map(z)) * sigma;
    let z0 = map.to_dual(x0)?;
    let set = map.feasible_set();
    let sol = integrate(&method, rhs, 0.0, &z0, samples, |t, z| {
        let x = map.dual_map(z);
        if set.contains(&x) {
            Ok(())
        } else {
            Err(Error::NumericalFailure {
                iteration: 0,
                what: format!("flow left the {} at t = {t}", set.name()),
                iterate: x.iter().copied().collect(),
            })
        }
    })?;
    Ok(sol
        .times
        .into_iter()
        .zip(sol.states)
        .map(|(t, z)| {
            let dz = rhs(t, &z);
            FlowState {
                t,
                x: map.dual_map(&z),
                dx: dual_velocity(map, &z, &dz),
                z,
                sqrt_s: 0.0,
                delta: 0.0,
            }
        })
        .collect())
}

/// `Z' = -(t sigma / 2) grad f(X)`,
/// `X' = (2 / max(t, delta)) (dual_map(Z) - X) - sqrt_s grad f(X)`,
/// starting from `X(0) = x0`, `Z(0)` its dual point.
#[allow(clippy::too_many_arguments)]
pub fn integrate_accelerated_flow(
    x0: &Vector,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    sqrt_s: f64,
    t_end: f64,
    tol: f64,
    delta: f64,
    samples: &[f64],
) -> Result<Vec<FlowState>> {
    check_start(x0, obj, map)?;
    check_samples(samples, t_end)?;
    if !(sqrt_s >= 0.0) || !sqrt_s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sqrt_s must be nonnegative, got {sqrt_s}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let method = DormandPrince::new(tol)?;
    let n = x0.len();
    let sigma = map.sigma();
    let split = |w: &Vector| (w.rows(0, n).into_owned(), w.rows(n, n).into_owned());
    let velocity = |t: f64, x: &Vector, z: &Vector, g: &Vector| -> Vector {
        (map.dual_map(z) - x) * (2.0 / t.max(delta)) - g * sqrt_s
    };
    let rhs = |t: f64, w: &Vector| {
        let (x, z) = split(w);
        let g = obj.gradient(&x);
        let mut out = Vector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&velocity(t, &x, &z, &g));
        out.rows_mut(n, n).copy_from(&(&g * (-t * sigma / 2.0)));
        out
    };
    let z0 = map.to_dual(x0)?;
    let mut w0 = Vector::zeros(2 * n);
    w0.rows_mut(0, n).copy_from(&map.dual_map(&z0));
    w0.rows_mut(n, n).copy_from(&z0);
    let sol = integrate(&method, rhs, 0.0, &w0, samples, |_, _| Ok(()))?;
    Ok(sol
        .times
        .into_iter()
        .zip(sol.states)
        .map(|(t, w)| {
            let (x, z) = split(&w);
            let g = obj.gradient(&x);
            FlowState {
                t,
                dx: velocity(t, &x, &z, &g),
                x,
                z,
                sqrt_s,
                delta,
            }
        })
        .collect())
}

/// `E(t) = t sigma [f(X) - f*] + D*(Z, z*)` and the certified rate
/// `-t sigma |X'|^2`.
pub fn continuous_lyapunov_mirror(
    state: &FlowState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    zstar: &Vector,
) -> Result<(f64, f64)> {
    let sigma = map.sigma();
    let e = state.t * sigma * gap(obj, &state.x)? + map.dual_bregman(&state.z, zstar);
    Ok((e, -state.t * sigma * state.dx.norm_squared()))
}

/// `E(t) = t^2 sigma [f(X) - f*] + 4 D*(Z, z*)` and the certified rate
/// `-t^2 sigma sqrt_s |grad f(X)|^2`.
///
/// The gradient-correction term contributes the factor `sqrt_s`, so the
/// certified decrease vanishes for the low-resolution flow. The derivation
/// assumes `t >= delta`.
pub fn continuous_lyapunov_accelerated(
    state: &FlowState,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    zstar: &Vector,
) -> Result<(f64, f64)> {
    let sigma = map.sigma();
    let t2 = state.t * state.t;
    let e = t2 * sigma * gap(obj, &state.x)? + 4.0 * map.dual_bregman(&state.z, zstar);
    let g = obj.gradient(&state.x);
    Ok((e, -t2 * sigma * state.sqrt_s * g.norm_squared()))
}

pub const FLOW_COLUMNS: [&str; 6] = [
    "t",
    "f_gap",
    "lyapunov",
    "certified_bound",
    "grad_norm_sq",
    "velocity_norm_sq",
];

/// Which monitor to attach to a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Mirror,
    Accelerated,
}

/// Evaluates the monitor at every sample and builds a continuous trace.
pub fn flow_record(
    states: &[FlowState],
    kind: FlowKind,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    record_iterates: bool,
) -> Result<RunRecord> {
    let zstar = optimal_dual(obj, map)?;
    let mut rec = RunRecord::new(FLOW_COLUMNS.to_vec(), LyapunovTrace::continuous());
    for st in states {
        let (e, b) = match kind {
            FlowKind::Mirror => continuous_lyapunov_mirror(st, obj, map, &zstar)?,
            FlowKind::Accelerated => continuous_lyapunov_accelerated(st, obj, map, &zstar)?,
        };
        rec.rows.push(vec![
            st.t,
            gap(obj, &st.x)?,
            e,
            b,
            obj.gradient(&st.x).norm_squared(),
            st.dx.norm_squared(),
        ]);
        rec.trace.times.push(st.t);
        rec.trace.values.push(e);
        rec.trace.certified_bounds.push(b);
        if record_iterates {
            rec.xs.push(st.x.clone());
        }
    }
    Ok(rec)
}

/// Evenly spaced samples `t_end * i / count` for `i = 1..=count`.
pub fn uniform_samples(t_end: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| t_end * i as f64 / count as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::audit_lyapunov;
    use crate::problems::{make_entropy_map, make_euclidean_map, Quadratic};
    use crate::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_gradient_flow_is_exponential() {
        let f = Quadratic::new(Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
        let m = make_euclidean_map(1).unwrap();
        let traj = integrate_mirror_flow(
            &Vector::from_element(1, 1.0),
            &f,
            &m,
            4.0,
            1e-10,
            &[1.0, 2.0, 4.0],
        )
        .unwrap();
        for st in &traj {
            assert!((st.x[0] - (-st.t).exp()).abs() < 1e-6);
            assert!((st.dx[0] + (-st.t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn stationary_start_stays_put() {
        let f = Quadratic::new(Matrix::identity(2, 2), Vector::from_element(2, 0.5)).unwrap();
        let m = make_euclidean_map(2).unwrap();
        let x0 = Vector::from_element(2, 0.5);
        let samples = uniform_samples(5.0, 10);
        for st in integrate_mirror_flow(&x0, &f, &m, 5.0, 1e-8, &samples).unwrap() {
            assert_eq!(st.x, x0);
        }
        for st in integrate_accelerated_flow(&x0, &f, &m, 0.3, 5.0, 1e-8, DEFAULT_DELTA, &samples)
            .unwrap()
        {
            assert_eq!(st.x, x0);
            assert_eq!(st.z, x0);
        }
    }

    #[test]
    fn entropy_flow_stays_on_simplex() {
        // linear objective <c, x>
        let c = Vector::from_column_slice(&[1.0, -0.5, 0.25, 2.0]);
        let f = Quadratic::new(Matrix::zeros(4, 4), -c).unwrap();
        let m = make_entropy_map(4).unwrap();
        let x0 = Vector::from_element(4, 0.25);
        let traj =
            integrate_mirror_flow(&x0, &f, &m, 20.0, 1e-9, &uniform_samples(20.0, 200)).unwrap();
        for st in traj {
            assert!((st.x.sum() - 1.0).abs() < 1e-10);
            assert!(st.x.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn initial_monitor_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = Quadratic::random_spd(3, 0.1, 1.0, &mut rng).unwrap();
        let m = make_euclidean_map(3).unwrap();
        let x0 = Vector::from_column_slice(&[1.0, 0.0, 2.0]);
        let zs = optimal_dual(&f, &m).unwrap();
        let d = m.primal_bregman(f.known_minimizer().unwrap(), &x0);
        let traj = integrate_mirror_flow(&x0, &f, &m, 1.0, 1e-9, &[0.0, 1.0]).unwrap();
        let (e0, _) = continuous_lyapunov_mirror(&traj[0], &f, &m, &zs).unwrap();
        assert!((e0 - d).abs() < 1e-12);
        let traj =
            integrate_accelerated_flow(&x0, &f, &m, 0.5, 1.0, 1e-9, DEFAULT_DELTA, &[0.0, 1.0])
                .unwrap();
        let (e0, _) = continuous_lyapunov_accelerated(&traj[0], &f, &m, &zs).unwrap();
        assert!((e0 - 4.0 * d).abs() < 1e-12);
    }

    #[test]
    fn monitors_pass_finite_difference_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let f = Quadratic::random_spd(4, 0.05, 1.0, &mut rng).unwrap();
        let m = make_euclidean_map(4).unwrap();
        let x0 = Vector::from_element(4, 1.0);
        let samples = uniform_samples(20.0, 200);
        let traj = integrate_mirror_flow(&x0, &f, &m, 20.0, 1e-10, &samples).unwrap();
        let rec = flow_record(&traj, FlowKind::Mirror, &f, &m, false).unwrap();
        assert_eq!(audit_lyapunov(&rec.trace, 1e-6).unwrap().violations, 0);
        let traj =
            integrate_accelerated_flow(&x0, &f, &m, 1.0, 20.0, 1e-10, DEFAULT_DELTA, &samples)
                .unwrap();
        let rec = flow_record(&traj, FlowKind::Accelerated, &f, &m, false).unwrap();
        assert_eq!(audit_lyapunov(&rec.trace, 1e-6).unwrap().violations, 0);
    }

    #[test]
    fn rejects_bad_samples() {
        let f = Quadratic::new(Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
        let m = make_euclidean_map(1).unwrap();
        let x0 = Vector::from_element(1, 1.0);
        assert!(integrate_mirror_flow(&x0, &f, &m, 1.0, 1e-8, &[0.5, 2.0]).is_err());
        assert!(integrate_mirror_flow(&x0, &f, &m, 1.0, 1e-8, &[0.5, 0.5]).is_err());
        assert!(integrate_accelerated_flow(&x0, &f, &m, -1.0, 1.0, 1e-8, 1e-3, &[0.5]).is_err());
    }
}
