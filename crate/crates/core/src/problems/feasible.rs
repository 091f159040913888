use crate::{Error, Result, Vector};

/// Membership tolerance used by [`FeasibleSet::contains`].
pub const CONTAINS_TOL: f64 = 1e-10;

/// Closed convex feasible sets with Euclidean projections.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    WholeSpace,
    /// The probability simplex `{x >= 0, sum x = 1}`.
    Simplex,
    Box {
        lo: Vector,
        hi: Vector,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
}

impl FeasibleSet {
    pub fn new_box(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidParameter("box requires lo <= hi".into()));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    pub fn new_ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeasibleSet::WholeSpace => "whole-space",
            FeasibleSet::Simplex => "probability-simplex",
            FeasibleSet::Box { .. } => "box",
            FeasibleSet::Ball { .. } => "euclidean-ball",
        }
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self, FeasibleSet::WholeSpace)
    }

    pub fn contains(&self, x: &Vector) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            FeasibleSet::WholeSpace => true,
            FeasibleSet::Simplex => {
                x.iter().all(|&v| v >= -CONTAINS_TOL) && (x.sum() - 1.0).abs() <= CONTAINS_TOL
            }
            FeasibleSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(&v, (&l, &h))| v >= l - CONTAINS_TOL && v <= h + CONTAINS_TOL),
            FeasibleSet::Ball { center, radius } => (x - center).norm() <= radius + CONTAINS_TOL,
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Vector {
        match self {
            FeasibleSet::WholeSpace => x.clone(),
            FeasibleSet::Simplex => project_simplex(x),
            FeasibleSet::Box { lo, hi } => Vector::from_iterator(
                x.len(),
                x.iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .map(|(&v, (&l, &h))| v.clamp(l, h)),
            ),
            FeasibleSet::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + d * (*radius / n)
                }
            }
        }
    }
}

/// Sort-and-threshold projection onto the probability simplex.
pub fn project_simplex(v: &Vector) -> Vector {
    let n = v.len();
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    Vector::from_iterator(n, v.iter().map(|&vi| (vi - theta).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn simplex_projection_of_vertex_direction() {
        let p = project_simplex(&v(&[1.0, 0.0]));
        assert_eq!(p, v(&[1.0, 0.0]));
        let p = project_simplex(&v(&[2.0, 0.0, -1.0]));
        assert_eq!(p, v(&[1.0, 0.0, 0.0]));
        let p = project_simplex(&v(&[0.5, 0.5, 0.5]));
        for c in p.iter() {
            assert!((c - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn box_and_ball_projection() {
        let b = FeasibleSet::new_box(v(&[0.0, 0.0]), v(&[1.0, 2.0])).unwrap();
        assert_eq!(b.project(&v(&[-1.0, 3.0])), v(&[0.0, 2.0]));
        let ball = FeasibleSet::new_ball(v(&[1.0, 0.0]), 2.0).unwrap();
        let p = ball.project(&v(&[5.0, 0.0]));
        assert!((p - v(&[3.0, 0.0])).norm() < 1e-15);
        assert!(ball.contains(&v(&[2.0, 1.0])));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FeasibleSet::new_box(v(&[1.0]), v(&[0.0])).is_err());
        assert!(FeasibleSet::new_ball(v(&[0.0]), 0.0).is_err());
        assert!(FeasibleSet::new_box(v(&[0.0]), v(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn simplex_contains_respects_tolerance() {
        let s = FeasibleSet::Simplex;
        assert!(s.contains(&v(&[0.5, 0.5 + 5e-11])));
        assert!(!s.contains(&v(&[0.5, 0.5 + 1e-8])));
        assert!(!s.contains(&v(&[1.1, -0.1])));
    }
}
