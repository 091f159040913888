use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Matrix, Result, Vector};

/// A smooth convex objective with a gradient oracle.
///
/// `lipschitz` is the Lipschitz constant of the gradient in the Euclidean norm.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    /// Hessian at `x`. The default is a symmetrized central difference of the
    /// gradient.
    fn hessian(&self, x: &Vector) -> Matrix {
        let n = self.dim();
        let h = 1e-6;
        let mut hess = Matrix::zeros(n, n);
        let mut xp = x.clone();
        for j in 0..n {
            let xj = x[j];
            xp[j] = xj + h;
            let gp = self.gradient(&xp);
            xp[j] = xj - h;
            let gm = self.gradient(&xp);
            xp[j] = xj;
            hess.set_column(j, &((gp - gm) / (2.0 * h)));
        }
        (&hess + hess.transpose()) * 0.5
    }

    fn lipschitz(&self) -> f64;

    fn known_min_value(&self) -> Option<f64> {
        None
    }

    fn known_minimizer(&self) -> Option<&Vector> {
        None
    }

    /// `f(x) - f(x*)`, when the minimum is known. Implementations may override
    /// this with a cancellation-free formula.
    fn optimality_gap(&self, x: &Vector) -> Option<f64> {
        self.known_min_value().map(|fs| self.value(x) - fs)
    }
}

/// `f(x) = 1/2 <Ax, x> - <b, x>` with symmetric positive semidefinite `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: Matrix,
    b: Vector,
    lipschitz: f64,
    minimizer: Option<Vector>,
    min_value: Option<f64>,
    // gradient at the (possibly constrained) minimizer
    grad_at_min: Option<Vector>,
}

impl Quadratic {
    /// Builds the quadratic and, when `A` is positive definite, its
    /// unconstrained minimizer.
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        let n = b.len();
        if n == 0 {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "objective needs at least one coordinate",
            });
        }
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.nrows(),
            });
        }
        if (&a - a.transpose()).amax() > 1e-12 * (1.0 + a.amax()) {
            return Err(Error::InvalidParameter(
                "quadratic matrix must be symmetric".into(),
            ));
        }
        let eig = SymmetricEigen::new(a.clone());
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        if lmin < -1e-12 * lmax.abs().max(1.0) {
            return Err(Error::InvalidParameter(
                "quadratic matrix must be positive semidefinite".into(),
            ));
        }
        let minimizer = a.clone().cholesky().map(|c| c.solve(&b));
        let mut q = Quadratic {
            a,
            b,
            lipschitz: lmax.max(f64::MIN_POSITIVE),
            minimizer: None,
            min_value: None,
            grad_at_min: None,
        };
        if let Some(xs) = minimizer {
            q.set_minimizer(xs);
        }
        Ok(q)
    }

    /// Random quadratic with eigenvalues log-spaced in `[eig_min, eig_max]`,
    /// a random orthogonal eigenbasis and a standard-normal minimizer. The
    /// Lipschitz constant is exactly `eig_max`.
    pub fn random_spd<R: Rng>(dim: usize, eig_min: f64, eig_max: f64, rng: &mut R) -> Result<Self> {
        let (a, lambdas) = random_spd_matrix(dim, eig_min, eig_max, rng)?;
        let xs = standard_normal_vector(dim, rng);
        let b = &a * &xs;
        let mut q = Quadratic::new(a, b)?;
        q.lipschitz = lambdas.max();
        // keep the drawn minimizer exactly rather than the Cholesky solve
        q.set_minimizer(xs);
        Ok(q)
    }

    /// Random quadratic whose minimizer over the probability simplex is a known
    /// interior point. The linear term is chosen so that the gradient at the
    /// minimizer is a multiple of the all-ones vector, which makes the
    /// first-order condition on the simplex hold exactly.
    pub fn random_on_simplex<R: Rng>(
        dim: usize,
        eig_min: f64,
        eig_max: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension {
                dim,
                reason: "simplex problems need dim >= 2",
            });
        }
        let (a, lambdas) = random_spd_matrix(dim, eig_min, eig_max, rng)?;
        let w: Vec<f64> = (0..dim).map(|_| 0.5 + rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let xs = Vector::from_iterator(dim, w.iter().map(|v| v / total));
        let multiplier = 1.0;
        let b = &a * &xs - Vector::from_element(dim, multiplier);
        let mut q = Quadratic::new(a, b)?;
        q.lipschitz = lambdas.max();
        q.set_minimizer(xs);
        Ok(q)
    }

    fn set_minimizer(&mut self, xs: Vector) {
        let g = &self.a * &xs - &self.b;
        self.min_value = Some(self.value(&xs));
        self.grad_at_min = Some(g);
        self.minimizer = Some(xs);
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn linear_term(&self) -> &Vector {
        &self.b
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }

    fn hessian(&self, _x: &Vector) -> Matrix {
        self.a.clone()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn known_min_value(&self) -> Option<f64> {
        self.min_value
    }

    fn known_minimizer(&self) -> Option<&Vector> {
        self.minimizer.as_ref()
    }

    fn optimality_gap(&self, x: &Vector) -> Option<f64> {
        // f(x) - f(x*) = <g*, e> + 1/2 <Ae, e>, exact for quadratics
        let xs = self.minimizer.as_ref()?;
        let gs = self.grad_at_min.as_ref()?;
        let e = x - xs;
        Some(gs.dot(&e) + 0.5 * e.dot(&(&self.a * &e)))
    }
}

/// `f(x) = ln sum_i exp(<a_i, x> - c_i) + mu/2 |x|^2`.
///
/// The minimizer comes from a damped Newton reference solve at construction.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    rows: Matrix,
    offsets: Vector,
    mu: f64,
    lipschitz: f64,
    minimizer: Vector,
    min_value: f64,
}

impl LogSumExp {
    pub fn new(rows: Matrix, offsets: Vector, mu: f64) -> Result<Self> {
        if rows.ncols() == 0 || rows.nrows() == 0 {
            return Err(Error::InvalidDimension {
                dim: rows.ncols(),
                reason: "log-sum-exp needs at least one row and one column",
            });
        }
        if offsets.len() != rows.nrows() {
            return Err(Error::DimensionMismatch {
                expected: rows.nrows(),
                got: offsets.len(),
            });
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "log-sum-exp regularization must be positive, got {mu}"
            )));
        }
        // Hessian of the log-sum-exp part is A^T (diag(p) - p p^T) A and the
        // middle factor has spectral norm <= 1/2 (Gershgorin).
        let smax = rows.clone().svd(false, false).singular_values.max();
        let lipschitz = 0.5 * smax * smax + mu;
        let mut f = LogSumExp {
            rows,
            offsets,
            mu,
            lipschitz,
            minimizer: Vector::zeros(0),
            min_value: 0.0,
        };
        let xs = f.newton_reference()?;
        f.min_value = f.value(&xs);
        f.minimizer = xs;
        Ok(f)
    }

    pub fn random<R: Rng>(dim: usize, terms: usize, mu: f64, rng: &mut R) -> Result<Self> {
        let rows = Matrix::from_fn(terms, dim, |_, _| StandardNormal.sample(rng));
        let offsets = standard_normal_vector(terms, rng);
        LogSumExp::new(rows, offsets, mu)
    }

    fn softmax_weights(&self, x: &Vector) -> Vector {
        let u = &self.rows * x - &self.offsets;
        let m = u.max();
        let e = u.map(|v| (v - m).exp());
        let s = e.sum();
        e / s
    }

    fn newton_reference(&self) -> Result<Vector> {
        let n = self.rows.ncols();
        let mut x = Vector::zeros(n);
        for _ in 0..200 {
            let g = self.gradient(&x);
            if g.norm() <= 1e-14 * (1.0 + self.lipschitz) {
                return Ok(x);
            }
            let h = self.hessian(&x);
            let d = h
                .cholesky()
                .ok_or_else(|| Error::InvalidParameter("log-sum-exp Hessian not PD".into()))?
                .solve(&g);
            let f0 = self.value(&x);
            let slope = g.dot(&d);
            let mut t = 1.0;
            while t > 1e-12 {
                let cand = &x - &d * t;
                if self.value(&cand) <= f0 - 0.25 * t * slope {
                    break;
                }
                t *= 0.5;
            }
            x -= &d * t;
        }
        let g = self.gradient(&x);
        if g.norm() <= 1e-10 {
            Ok(x)
        } else {
            Err(Error::NumericalFailure {
                iteration: 200,
                what: "log-sum-exp reference solve did not converge".into(),
                iterate: x.iter().copied().collect(),
            })
        }
    }
}

impl Objective for LogSumExp {
    fn dim(&self) -> usize {
        self.rows.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        let u = &self.rows * x - &self.offsets;
        let m = u.max();
        m + u.map(|v| (v - m).exp()).sum().ln() + 0.5 * self.mu * x.norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.rows.transpose() * self.softmax_weights(x) + x * self.mu
    }

    fn hessian(&self, x: &Vector) -> Matrix {
        let p = self.softmax_weights(x);
        let mid = Matrix::from_diagonal(&p) - &p * p.transpose();
        self.rows.transpose() * mid * &self.rows
            + Matrix::identity(self.dim(), self.dim()) * self.mu
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn known_min_value(&self) -> Option<f64> {
        Some(self.min_value)
    }

    fn known_minimizer(&self) -> Option<&Vector> {
        Some(&self.minimizer)
    }
}

fn standard_normal_vector<R: Rng>(n: usize, rng: &mut R) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Random symmetric matrix `Q diag(lambda) Q^T` with `lambda` log-spaced in
/// `[eig_min, eig_max]` (largest first) and `Q` a random orthogonal matrix.
pub fn random_spd_matrix<R: Rng>(
    dim: usize,
    eig_min: f64,
    eig_max: f64,
    rng: &mut R,
) -> Result<(Matrix, Vector)> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "objective needs at least one coordinate",
        });
    }
    if !(eig_min > 0.0 && eig_max >= eig_min && eig_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue range must satisfy 0 < eig_min <= eig_max, got [{eig_min}, {eig_max}]"
        )));
    }
    let g = Matrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let q = g.qr().q();
    let lambdas = if dim == 1 {
        Vector::from_element(1, eig_max)
    } else {
        let (lo, hi) = (eig_min.ln(), eig_max.ln());
        Vector::from_iterator(
            dim,
            (0..dim).map(|i| (hi - (hi - lo) * i as f64 / (dim - 1) as f64).exp()),
        )
    };
    let a = &q * Matrix::from_diagonal(&lambdas) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    Ok((a, lambdas))
}
