use nalgebra::SymmetricEigen;

use crate::problems::{MirrorMap, Objective};
use crate::{Error, Result, Vector};

/// Produces `y` from `x` for the higher-order scheme.
pub trait YOracle: Send + Sync {
    fn solve(
        &self,
        x: &Vector,
        obj: &dyn Objective,
        map: &dyn MirrorMap,
        step: f64,
    ) -> Result<Vector>;
}

/// First-order gradient map `y = P_C(x - (s/N) grad f(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientStepOracle {
    pub n: f64,
}

impl Default for GradientStepOracle {
    fn default() -> Self {
        GradientStepOracle { n: 1.0 }
    }
}

impl YOracle for GradientStepOracle {
    fn solve(
        &self,
        x: &Vector,
        obj: &dyn Objective,
        map: &dyn MirrorMap,
        step: f64,
    ) -> Result<Vector> {
        let g = obj.gradient(x);
        Ok(map.feasible_set().project(&(x - g * (step / self.n))))
    }
}

/// Second-order gradient map: minimizes
/// `<g, h> + 1/2 <H h, h> + (N / (3 s)) |h|^3` over `h = y - x`.
///
/// The stationarity condition `(H + c r I) h = -g` with `c = N/s` and
/// `r = |h|` is solved by bisection on `r` in the eigenbasis of `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRegularizedOracle {
    pub n: f64,
    pub budget: usize,
    pub tolerance: f64,
}

impl Default for CubicRegularizedOracle {
    fn default() -> Self {
        CubicRegularizedOracle {
            n: 1.0,
            budget: 100,
            tolerance: 1e-10,
        }
    }
}

impl CubicRegularizedOracle {
    /// Gradient of the regularized model at `h`.
    pub fn model_gradient(
        &self,
        g: &Vector,
        hess: &crate::Matrix,
        h: &Vector,
        step: f64,
    ) -> Vector {
        g + hess * h + h * (self.n / step * h.norm())
    }

    pub fn model_value(&self, g: &Vector, hess: &crate::Matrix, h: &Vector, step: f64) -> f64 {
        g.dot(h) + 0.5 * h.dot(&(hess * h)) + self.n / (3.0 * step) * h.norm().powi(3)
    }
}

impl YOracle for CubicRegularizedOracle {
    fn solve(
        &self,
        x: &Vector,
        obj: &dyn Objective,
        map: &dyn MirrorMap,
        step: f64,
    ) -> Result<Vector> {
        if !map.feasible_set().is_whole_space() {
            return Err(Error::InvalidParameter(
                "second-order oracle supports the whole space only".into(),
            ));
        }
        let g = obj.gradient(x);
        let gnorm = g.norm();
        if gnorm == 0.0 {
            return Ok(x.clone());
        }
        let hess = obj.hessian(x);
        let eig = SymmetricEigen::new(hess.clone());
        let lambdas = eig.eigenvalues.map(|l| l.max(0.0));
        let gt = eig.eigenvectors.transpose() * &g;
        let c = self.n / step;
        let radius = |r: f64| -> f64 {
            gt.iter()
                .zip(lambdas.iter())
                .map(|(gi, li)| (gi / (li + c * r)).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let mut lo = 0.0;
        let mut hi = (gnorm / c).sqrt();
        let lmin = lambdas.min();
        if lmin > 0.0 {
            hi = hi.min(gnorm / lmin);
        }
        for _ in 0..self.budget {
            let mid = 0.5 * (lo + hi);
            if radius(mid) > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let ht = Vector::from_iterator(
            gt.len(),
            gt.iter()
                .zip(lambdas.iter())
                .map(|(gi, li)| -gi / (li + c * r)),
        );
        let h = &eig.eigenvectors * ht;
        let residual = self.model_gradient(&g, &hess, &h, step).norm();
        if !(residual <= self.tolerance * gnorm.max(1.0)) {
            return Err(Error::OracleFailure {
                message: format!("cubic model not solved within {} bisections", self.budget),
                residual,
            });
        }
        Ok(x + h)
    }
}

/// `<grad f(y), x - y> - M s^{1/(p-1)} |grad f(y)|_*^{p/(p-1)}`; nonnegative
/// when the oracle meets the acceleration condition with constant `M`.
pub fn oracle_condition_residual(
    y: &Vector,
    x: &Vector,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    p: u32,
    m: f64,
    step: f64,
) -> f64 {
    let g = obj.gradient(y);
    let pf = p as f64;
    g.dot(&(x - y)) - m * step.powf(1.0 / (pf - 1.0)) * map.dual_norm(&g).powf(pf / (pf - 1.0))
}

/// Built-in oracle for order `p` with `N = 1`.
pub fn default_oracle(p: u32) -> Result<Box<dyn YOracle>> {
    match p {
        2 => Ok(Box::new(GradientStepOracle::default())),
        3 => Ok(Box::new(CubicRegularizedOracle::default())),
        _ => Err(Error::InvalidParameter(format!(
            "no built-in y-oracle for order {p}; supported orders are 2 and 3"
        ))),
    }
}

/// Runs the built-in oracle and returns `y` with its acceleration-condition residual.
pub fn higher_order_y_oracle(
    x: &Vector,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
    p: u32,
    step: f64,
    m: f64,
) -> Result<(Vector, f64)> {
    let y = default_oracle(p)?.solve(x, obj, map, step)?;
    let r = oracle_condition_residual(&y, x, obj, map, p, m, step);
    Ok((y, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_euclidean_map, make_pth_power_map, Quadratic};
    use crate::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stationary_point_is_fixed() {
        let f = Quadratic::new(Matrix::identity(2, 2), Vector::from_element(2, 1.0)).unwrap();
        let x = Vector::from_element(2, 1.0);
        for p in [2, 3] {
            let m = make_pth_power_map(2, p).unwrap();
            let (y, r) = higher_order_y_oracle(&x, &f, &m, p, 0.5, 0.5).unwrap();
            assert_eq!(y, x);
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn gradient_step_residual_closed_form() {
        let f = Quadratic::new(Matrix::identity(3, 3), Vector::zeros(3)).unwrap();
        let m = make_euclidean_map(3).unwrap();
        let s = 0.5;
        let x = Vector::from_column_slice(&[1.0, -2.0, 0.5]);
        let (y, r) = higher_order_y_oracle(&x, &f, &m, 2, s, 0.5).unwrap();
        assert!((&y - &x * (1.0 - s)).amax() < 1e-15);
        let n2 = x.norm_squared();
        let expected = s * (1.0 - s) * n2 - 0.5 * s * (1.0 - s) * (1.0 - s) * n2;
        assert!((r - expected).abs() < 1e-14);
        assert!(r >= 0.0);
    }

    #[test]
    fn cubic_oracle_matches_radial_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = Quadratic::random_spd(2, 0.05, 1.0, &mut rng).unwrap();
        let m = make_pth_power_map(2, 3).unwrap();
        let o = CubicRegularizedOracle::default();
        let s = 0.5;
        let x = Vector::from_column_slice(&[1.5, -0.7]);
        let y = o.solve(&x, &f, &m, s).unwrap();
        let g = f.gradient(&x);
        let hess = f.matrix().clone();
        let best_oracle = o.model_value(&g, &hess, &(&y - &x), s);
        // the model is convex along every ray, so a ternary search per angle is exact
        let mut best = f64::INFINITY;
        let mut arg = Vector::zeros(2);
        for i in 0..3600 {
            let th = i as f64 * std::f64::consts::TAU / 3600.0;
            let d = Vector::from_column_slice(&[th.cos(), th.sin()]);
            let (mut a, mut b) = (0.0, 10.0);
            for _ in 0..200 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                if o.model_value(&g, &hess, &(&d * m1), s) < o.model_value(&g, &hess, &(&d * m2), s)
                {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            let h = &d * (0.5 * (a + b));
            let val = o.model_value(&g, &hess, &h, s);
            if val < best {
                best = val;
                arg = h;
            }
        }
        assert!(best_oracle <= best + 1e-12);
        assert!((&y - &x - arg).norm() < 5e-3);
    }

    #[test]
    fn cubic_oracle_rejects_constrained_maps() {
        let f = Quadratic::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let m = crate::problems::make_entropy_map(2).unwrap();
        let o = CubicRegularizedOracle::default();
        assert!(o.solve(&Vector::from_element(2, 0.5), &f, &m, 0.5).is_err());
    }

    #[test]
    fn tiny_budget_reports_failure() {
        let f = Quadratic::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let m = make_pth_power_map(2, 3).unwrap();
        let o = CubicRegularizedOracle {
            budget: 2,
            ..Default::default()
        };
        match o.solve(&Vector::from_element(2, 3.0), &f, &m, 0.5) {
            Err(Error::OracleFailure { residual, .. }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn no_builtin_for_high_orders() {
        assert!(default_oracle(4).is_err());
    }
}
