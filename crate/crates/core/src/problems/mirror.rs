use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::FeasibleSet;
use crate::{Error, Result, Vector};

/// A distance-generating function together with its convex conjugate.
///
/// Primal points live in [`MirrorMap::feasible_set`]; dual points are
/// arbitrary vectors mapped back by [`MirrorMap::dual_map`].
pub trait MirrorMap: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &'static str;

    /// The generating function, `+inf` off its domain.
    fn phi(&self, x: &Vector) -> f64;

    /// A dual point whose image under [`MirrorMap::dual_map`] is `x`.
    fn to_dual(&self, x: &Vector) -> Result<Vector>;

    /// The convex conjugate evaluated at a dual point.
    fn conjugate(&self, z: &Vector) -> f64;

    /// Gradient of the conjugate.
    fn dual_map(&self, z: &Vector) -> Vector;

    /// Strong-convexity modulus of the given order.
    fn sigma(&self) -> f64;

    fn order(&self) -> u32 {
        2
    }

    fn feasible_set(&self) -> &FeasibleSet;

    /// Primal norm paired with `sigma`.
    fn norm(&self, v: &Vector) -> f64 {
        v.norm()
    }

    /// Norm on gradients, dual to [`MirrorMap::norm`].
    fn dual_norm(&self, g: &Vector) -> f64 {
        g.norm()
    }

    /// `D(y, x) = phi(y) - phi(x) - <grad phi(x), y - x>`.
    fn primal_bregman(&self, y: &Vector, x: &Vector) -> f64;

    /// `D*(z', z) = phi*(z') - phi*(z) - <dual_map(z), z' - z>`.
    fn dual_bregman(&self, z_new: &Vector, z: &Vector) -> f64 {
        let x = self.dual_map(z);
        self.conjugate(z_new) - self.conjugate(z) - x.dot(&(z_new - z))
    }

    /// A representative of `z` with the same image under the dual map.
    fn canonical_dual(&self, z: Vector) -> Vector {
        z
    }
}

fn check_len(expected: usize, v: &Vector) -> Result<()> {
    if v.len() != expected {
        Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        })
    } else {
        Ok(())
    }
}

/// `phi(x) = 1/2 |x|^2`, optionally restricted to a closed convex set, in
/// which case the dual map is the Euclidean projection.
#[derive(Debug, Clone)]
pub struct EuclideanMap {
    dim: usize,
    set: FeasibleSet,
}

pub fn make_euclidean_map(dim: usize) -> Result<EuclideanMap> {
    make_restricted_euclidean_map(dim, FeasibleSet::WholeSpace)
}

pub fn make_restricted_euclidean_map(dim: usize, set: FeasibleSet) -> Result<EuclideanMap> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "mirror map needs at least one coordinate",
        });
    }
    match &set {
        FeasibleSet::Box { lo, .. } => check_len(dim, lo)?,
        FeasibleSet::Ball { center, .. } => check_len(dim, center)?,
        FeasibleSet::Simplex if dim < 2 => {
            return Err(Error::InvalidDimension {
                dim,
                reason: "simplex needs dim >= 2",
            })
        }
        _ => {}
    }
    Ok(EuclideanMap { dim, set })
}

impl MirrorMap for EuclideanMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "euclidean"
    }

    fn phi(&self, x: &Vector) -> f64 {
        if self.set.contains(x) {
            0.5 * x.norm_squared()
        } else {
            f64::INFINITY
        }
    }

    fn to_dual(&self, x: &Vector) -> Result<Vector> {
        check_len(self.dim, x)?;
        if !self.set.contains(x) {
            return Err(Error::InvalidParameter(format!(
                "initial point is outside the {}",
                self.set.name()
            )));
        }
        Ok(x.clone())
    }

    fn conjugate(&self, z: &Vector) -> f64 {
        if self.set.is_whole_space() {
            return 0.5 * z.norm_squared();
        }
        let p = self.set.project(z);
        z.dot(&p) - 0.5 * p.norm_squared()
    }

    fn dual_map(&self, z: &Vector) -> Vector {
        self.set.project(z)
    }

    fn sigma(&self) -> f64 {
        1.0
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn primal_bregman(&self, y: &Vector, x: &Vector) -> f64 {
        if !self.set.contains(y) {
            return f64::INFINITY;
        }
        0.5 * (y - x).norm_squared()
    }

    fn dual_bregman(&self, z_new: &Vector, z: &Vector) -> f64 {
        if self.set.is_whole_space() {
            return 0.5 * (z_new - z).norm_squared();
        }
        let x = self.dual_map(z);
        self.conjugate(z_new) - self.conjugate(z) - x.dot(&(z_new - z))
    }
}

/// Negative entropy on the probability simplex. The dual map is the softmax
/// and the primal Bregman divergence is the Kullback-Leibler divergence.
#[derive(Debug, Clone)]
pub struct EntropyMap {
    dim: usize,
    set: FeasibleSet,
}

pub fn make_entropy_map(dim: usize) -> Result<EntropyMap> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "entropy map needs dim >= 2",
        });
    }
    Ok(EntropyMap {
        dim,
        set: FeasibleSet::Simplex,
    })
}

fn log_sum_exp(z: &Vector) -> f64 {
    let m = z.max();
    if !m.is_finite() {
        return m;
    }
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Numerically stable softmax.
pub fn softmax(z: &Vector) -> Vector {
    let m = z.max();
    let e = z.map(|v| (v - m).exp());
    let s = e.sum();
    e / s
}

fn xlogy_ratio(y: f64, x: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else if x == 0.0 {
        f64::INFINITY
    } else {
        y * (y / x).ln()
    }
}

impl MirrorMap for EntropyMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "entropy"
    }

    fn phi(&self, x: &Vector) -> f64 {
        if !self.set.contains(x) {
            return f64::INFINITY;
        }
        x.iter()
            .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
            .sum()
    }

    fn to_dual(&self, x: &Vector) -> Result<Vector> {
        check_len(self.dim, x)?;
        if !self.set.contains(x) || x.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter(
                "entropy map needs a point in the interior of the simplex".into(),
            ));
        }
        Ok(self.canonical_dual(x.map(f64::ln)))
    }

    fn conjugate(&self, z: &Vector) -> f64 {
        log_sum_exp(z)
    }

    fn dual_map(&self, z: &Vector) -> Vector {
        softmax(z)
    }

    fn sigma(&self) -> f64 {
        1.0
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn norm(&self, v: &Vector) -> f64 {
        v.lp_norm(1)
    }

    fn dual_norm(&self, g: &Vector) -> f64 {
        g.amax()
    }

    fn primal_bregman(&self, y: &Vector, x: &Vector) -> f64 {
        if !self.set.contains(y) {
            return f64::INFINITY;
        }
        y.iter()
            .zip(x.iter())
            .map(|(&a, &b)| xlogy_ratio(a, b))
            .sum::<f64>()
    }

    fn dual_bregman(&self, z_new: &Vector, z: &Vector) -> f64 {
        // lse(z') - lse(z) - <p, d> = ln sum p_i exp(d_i - <p, d>), d = z' - z
        let p = softmax(z);
        let d = z_new - z;
        let mean = p.dot(&d);
        let s: f64 = p
            .iter()
            .zip(d.iter())
            .map(|(&pi, &di)| pi * (di - mean).exp_m1())
            .sum();
        s.ln_1p().max(0.0)
    }

    fn canonical_dual(&self, z: Vector) -> Vector {
        let m = z.max();
        z.add_scalar(-m)
    }
}

/// `phi(x) = (1/p) |x|^p` on the whole space, uniformly convex of order `p`.
#[derive(Debug, Clone)]
pub struct PowerMap {
    dim: usize,
    p: u32,
    sigma: f64,
    sampled_sigma: f64,
    set: FeasibleSet,
}

/// Number of sampled pairs used to probe the uniform-convexity modulus.
pub const SIGMA_SAMPLES: usize = 4000;

pub fn make_pth_power_map(dim: usize, p: u32) -> Result<PowerMap> {
    if p < 2 {
        return Err(Error::InvalidOrder(p));
    }
    if dim == 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "mirror map needs at least one coordinate",
        });
    }
    let mut map = PowerMap {
        dim,
        p,
        sigma: 1.0,
        sampled_sigma: f64::INFINITY,
        set: FeasibleSet::WholeSpace,
    };
    map.sampled_sigma = map.sample_modulus(SIGMA_SAMPLES, 0x0000_05ee_d0f5_167a);
    // classical bound D(x, y) >= (1/p) 2^{2-p} |x - y|^p; a sampled minimum
    // below it by more than rounding overrides it
    let analytic = 2f64.powi(2 - p as i32);
    map.sigma = if map.sampled_sigma >= analytic * (1.0 - 1e-9) {
        analytic
    } else {
        map.sampled_sigma
    };
    Ok(map)
}

impl PowerMap {
    /// Minimum over sampled pairs of `p D(x, y) / |x - y|^p`.
    pub fn sample_modulus(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.p as i32;
        let mut best = f64::INFINITY;
        for i in 0..pairs {
            let x = Vector::from_iterator(
                self.dim,
                (0..self.dim).map(|_| StandardNormal.sample(&mut rng)),
            );
            let y = match i % 3 {
                // near-antipodal pairs are where the ratio is smallest
                0 => -&x * (0.5 + (i % 7) as f64 / 6.0),
                _ => Vector::from_iterator(
                    self.dim,
                    (0..self.dim).map(|_| StandardNormal.sample(&mut rng)),
                ),
            };
            let dist = (&x - &y).norm();
            if dist < 1e-8 {
                continue;
            }
            let ratio = self.p as f64 * self.primal_bregman(&x, &y) / dist.powi(p);
            best = best.min(ratio);
        }
        best
    }

    pub fn sampled_sigma(&self) -> f64 {
        self.sampled_sigma
    }

    fn dual_exponent(&self) -> f64 {
        (2.0 - self.p as f64) / (self.p as f64 - 1.0)
    }

    fn conjugate_exponent(&self) -> f64 {
        self.p as f64 / (self.p as f64 - 1.0)
    }

    fn grad_phi(&self, x: &Vector) -> Vector {
        let n = x.norm();
        if n == 0.0 {
            return x.clone();
        }
        x * n.powi(self.p as i32 - 2)
    }
}

impl MirrorMap for PowerMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "pth_power"
    }

    fn phi(&self, x: &Vector) -> f64 {
        x.norm().powi(self.p as i32) / self.p as f64
    }

    fn to_dual(&self, x: &Vector) -> Result<Vector> {
        check_len(self.dim, x)?;
        Ok(self.grad_phi(x))
    }

    fn conjugate(&self, z: &Vector) -> f64 {
        let q = self.conjugate_exponent();
        z.norm().powf(q) / q
    }

    fn dual_map(&self, z: &Vector) -> Vector {
        let n = z.norm();
        if n == 0.0 {
            return z.clone();
        }
        if self.p == 2 {
            return z.clone();
        }
        z * n.powf(self.dual_exponent())
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn order(&self) -> u32 {
        self.p
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn primal_bregman(&self, y: &Vector, x: &Vector) -> f64 {
        (self.phi(y) - self.phi(x) - self.grad_phi(x).dot(&(y - x))).max(0.0)
    }
}

/// Both sides of the conjugate duality identity
/// `D*(z0, z*) = D(x*, x0)` with `x0 = dual_map(z0)` and `x* = dual_map(z*)`.
/// The first component is evaluated through the conjugate and the second
/// through the primal function.
pub fn dual_bregman_equals_primal(
    map: &dyn MirrorMap,
    z0: &Vector,
    zstar: &Vector,
) -> Result<(f64, f64)> {
    check_len(map.dim(), z0)?;
    check_len(map.dim(), zstar)?;
    if z0.iter().chain(zstar.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("dual points must be finite".into()));
    }
    let x0 = map.dual_map(z0);
    let xs = map.dual_map(zstar);
    Ok((map.dual_bregman(z0, zstar), map.primal_bregman(&xs, &x0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn euclidean_examples() {
        let m = make_euclidean_map(2).unwrap();
        assert_eq!(m.dual_map(&v(&[3.0, -1.0])), v(&[3.0, -1.0]));
        let x = v(&[0.3, -2.0]);
        assert_eq!(m.primal_bregman(&x, &x), 0.0);
        assert_eq!(m.primal_bregman(&v(&[1.0, 0.0]), &v(&[0.0, 0.0])), 0.5);
        assert_eq!(m.sigma(), 1.0);
        assert_eq!(m.order(), 2);
        assert!(matches!(
            make_euclidean_map(0),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let m = make_entropy_map(2).unwrap();
        assert_eq!(m.dual_map(&v(&[0.0, 0.0])), v(&[0.5, 0.5]));
        let h = v(&[0.5, 0.5]);
        assert_eq!(m.primal_bregman(&h, &h), 0.0);
        let kl = m.primal_bregman(&v(&[0.5, 0.5]), &v(&[0.25, 0.75]));
        let independent = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert_abs_diff_eq!(kl, independent, epsilon = 1e-15);
        assert_abs_diff_eq!(kl, 0.1438, epsilon = 1e-4);
        assert!(matches!(
            make_entropy_map(1),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn entropy_boundary_conventions() {
        let m = make_entropy_map(2).unwrap();
        assert_eq!(
            m.primal_bregman(&v(&[1.0, 0.0]), &v(&[0.5, 0.5])),
            2f64.ln()
        );
        assert_eq!(
            m.primal_bregman(&v(&[0.5, 0.5]), &v(&[1.0, 0.0])),
            f64::INFINITY
        );
        assert_eq!(m.phi(&v(&[1.0, 0.0])), 0.0);
        assert!(m.to_dual(&v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn softmax_is_stable_for_large_inputs() {
        let m = make_entropy_map(3).unwrap();
        let x = m.dual_map(&v(&[1000.0, 1000.0, -1000.0]));
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-15);
        assert_eq!(x[2], 0.0);
    }

    #[test]
    fn power_map_examples() {
        let m3 = make_pth_power_map(2, 3).unwrap();
        assert_eq!(m3.dual_map(&v(&[0.0, 0.0])), v(&[0.0, 0.0]));
        let x = m3.dual_map(&v(&[4.0, 0.0]));
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 0.0);
        // grad phi(x) = |x| x recovers z
        let back = m3.to_dual(&x).unwrap();
        assert_abs_diff_eq!(back[0], 4.0, epsilon = 1e-13);
        let m2 = make_pth_power_map(2, 2).unwrap();
        assert_eq!(m2.dual_map(&v(&[1.5, -0.25])), v(&[1.5, -0.25]));
        assert_eq!(m2.sigma(), 1.0);
        assert!(matches!(
            make_pth_power_map(2, 1),
            Err(Error::InvalidOrder(1))
        ));
    }

    #[test]
    fn power_map_sigma_is_below_samples() {
        for p in 2..=5 {
            let m = make_pth_power_map(3, p).unwrap();
            assert!(m.sigma() > 0.0);
            assert!(m.sigma() <= m.sampled_sigma() * (1.0 + 1e-9));
            assert!(m.sample_modulus(500, 42) >= m.sigma() - 1e-12);
        }
    }

    #[test]
    fn lemma_examples() {
        let e = make_euclidean_map(2).unwrap();
        let z = v(&[0.7, -0.1]);
        assert_eq!(dual_bregman_equals_primal(&e, &z, &z).unwrap(), (0.0, 0.0));
        let (d, p) = dual_bregman_equals_primal(&e, &v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap();
        assert_eq!((d, p), (0.5, 0.5));
        let h = make_entropy_map(2).unwrap();
        let (d, p) =
            dual_bregman_equals_primal(&h, &v(&[0.0, 0.0]), &v(&[3f64.ln(), 0.0])).unwrap();
        assert!((d - p).abs() <= 1e-10, "{d} vs {p}");
        assert!(d > 0.0);
    }

    #[test]
    fn restricted_euclidean_conjugate_matches_sup() {
        let set = FeasibleSet::new_box(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let m = make_restricted_euclidean_map(2, set).unwrap();
        let z = v(&[2.0, -0.5]);
        // sup over the box of <z,x> - |x|^2/2 is attained at (1, 0)
        assert_abs_diff_eq!(m.conjugate(&z), 1.5, epsilon = 1e-15);
        assert_eq!(m.dual_map(&z), v(&[1.0, 0.0]));
    }
}
