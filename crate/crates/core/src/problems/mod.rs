//! Objectives, mirror maps and feasible sets.

mod feasible;
mod mirror;
mod objective;

pub use feasible::{project_simplex, FeasibleSet, CONTAINS_TOL};
pub use mirror::{
    dual_bregman_equals_primal, make_entropy_map, make_euclidean_map, make_pth_power_map,
    make_restricted_euclidean_map, softmax, EntropyMap, EuclideanMap, MirrorMap, PowerMap,
    SIGMA_SAMPLES,
};
pub use objective::{random_spd_matrix, LogSumExp, Objective, Quadratic};
