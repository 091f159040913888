//! Side-by-side comparison of discrete accelerated descent with the
//! accelerated flow at matched times `t_k = (k+1) sqrt(s)`.

use crate::amd::{amd_unconstrained_step, AmdState, AmdVariant};
use crate::flows::{integrate_accelerated_flow, DEFAULT_DELTA};
use crate::problems::{MirrorMap, Objective};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub step: f64,
    pub sqrt_s: f64,
    /// Matched times `(k+1) sqrt(s)` for `k = 0..=iterations`.
    pub times: Vec<f64>,
    /// `|x_k - X(t_k)|`.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// Number of discrete steps whose matched times cover `(0, horizon]`.
pub fn iterations_for_horizon(step: f64, horizon: f64) -> usize {
    ((horizon / step.sqrt()).round() as usize).saturating_sub(1)
}

/// Runs `iterations` unconstrained accelerated steps with step `step` and
/// the accelerated flow with `sqrt_s = sqrt(step)`, and reports the
/// deviation at every matched time.
pub fn compare_flow_discrete(
    x0: &Vector,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    step: f64,
    iterations: usize,
    tol: f64,
) -> Result<DeviationReport> {
    if !map.feasible_set().is_whole_space() || map.order() != 2 {
        return Err(Error::InvalidParameter(
            "flow comparison needs a whole-space mirror map of order 2".into(),
        ));
    }
    let sqrt_s = step.sqrt();
    let mut state = AmdState::new_unchecked(AmdVariant::Unconstrained, x0, obj, map, step)?;
    let mut xs = Vec::with_capacity(iterations + 1);
    xs.push(state.x.clone());
    for _ in 0..iterations {
        state = amd_unconstrained_step(&state, obj, map)?;
        xs.push(state.x.clone());
    }
    let times: Vec<f64> = (0..=iterations)
        .map(|k| (k as f64 + 1.0) * sqrt_s)
        .collect();
    let t_end = *times.last().expect("at least one matched time");
    let traj = integrate_accelerated_flow(x0, obj, map, sqrt_s, t_end, tol, DEFAULT_DELTA, &times)?;
    let deviations: Vec<f64> = xs
        .iter()
        .zip(&traj)
        .map(|(x, st)| (x - &st.x).norm())
        .collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    Ok(DeviationReport {
        step,
        sqrt_s,
        times,
        deviations,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_entropy_map, make_euclidean_map, Quadratic};
    use crate::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gradient_start_has_no_deviation() {
        let f = Quadratic::new(Matrix::identity(3, 3), Vector::from_element(3, 2.0)).unwrap();
        let m = make_euclidean_map(3).unwrap();
        let r =
            compare_flow_discrete(&Vector::from_element(3, 2.0), &f, &m, 0.01, 50, 1e-9).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert_eq!(r.deviations.len(), 51);
    }

    #[test]
    fn deviation_within_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let f = Quadratic::random_spd(4, 1e-2, 1.0, &mut rng).unwrap();
        let m = make_euclidean_map(4).unwrap();
        let x0 = Vector::from_element(4, 1.0);
        let s = 2.5e-3;
        let r = compare_flow_discrete(&x0, &f, &m, s, 200, 1e-10).unwrap();
        assert!(r.max_deviation < 10.0 * s.sqrt() * (1.0 + x0.norm()));
    }

    #[test]
    fn horizon_iterations() {
        assert_eq!(iterations_for_horizon(1e-2, 10.0), 99);
        assert_eq!(iterations_for_horizon(2.5e-3, 10.0), 199);
    }

    #[test]
    fn rejects_constrained_maps() {
        let f = Quadratic::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let m = make_entropy_map(2).unwrap();
        assert!(
            compare_flow_discrete(&Vector::from_element(2, 0.5), &f, &m, 0.01, 5, 1e-8).is_err()
        );
    }
}
