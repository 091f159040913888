//! Builds objectives, mirror maps and starting points from configuration ids.

use mirrorlab::problems::{
    make_entropy_map, make_euclidean_map, make_pth_power_map, make_restricted_euclidean_map,
    FeasibleSet, LogSumExp, MirrorMap, Objective, Quadratic,
};
use mirrorlab::Vector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ExperimentConfig, MapConfig, ObjectiveConfig};
use crate::error::{CliError, CliResult};

/// Objective, mirror map and starting point of one experiment.
pub struct Problem {
    pub objective: Box<dyn Objective>,
    pub map: Box<dyn MirrorMap>,
    pub x0: Vector,
}

pub fn build_objective(
    cfg: &ObjectiveConfig,
    rng: &mut ChaCha8Rng,
) -> CliResult<Box<dyn Objective>> {
    Ok(match cfg.id.as_str() {
        "quadratic" => Box::new(Quadratic::random_spd(
            cfg.dim,
            cfg.eig_min,
            cfg.eig_max,
            rng,
        )?),
        "logsumexp" => Box::new(LogSumExp::random(cfg.dim, cfg.terms, cfg.mu, rng)?),
        "simplex-quadratic" => Box::new(Quadratic::random_on_simplex(
            cfg.dim,
            cfg.eig_min,
            cfg.eig_max,
            rng,
        )?),
        other => return Err(CliError::Config(format!("unknown objective id '{other}'"))),
    })
}

pub fn build_map(cfg: &MapConfig, dim: usize) -> CliResult<Box<dyn MirrorMap>> {
    Ok(match cfg.id.as_str() {
        "euclidean" => {
            let set = match cfg.set.as_str() {
                "whole-space" => return Ok(Box::new(make_euclidean_map(dim)?)),
                "simplex" => FeasibleSet::Simplex,
                "box" => FeasibleSet::new_box(
                    Vector::from_element(dim, cfg.lo),
                    Vector::from_element(dim, cfg.hi),
                )?,
                "ball" => FeasibleSet::new_ball(Vector::zeros(dim), cfg.radius)?,
                other => return Err(CliError::Config(format!("unknown feasible set '{other}'"))),
            };
            Box::new(make_restricted_euclidean_map(dim, set)?)
        }
        "entropy" => Box::new(make_entropy_map(dim)?),
        "pth_power" => Box::new(make_pth_power_map(dim, cfg.p)?),
        other => return Err(CliError::Config(format!("unknown mirror map id '{other}'"))),
    })
}

/// Starting point: the barycenter on the simplex, otherwise the minimizer
/// plus a standard normal perturbation, projected onto the feasible set.
pub fn starting_point(obj: &dyn Objective, map: &dyn MirrorMap, rng: &mut ChaCha8Rng) -> Vector {
    let n = obj.dim();
    let set = map.feasible_set();
    if matches!(set, FeasibleSet::Simplex) {
        return Vector::from_element(n, 1.0 / n as f64);
    }
    let noise = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
    let center = obj
        .known_minimizer()
        .cloned()
        .unwrap_or_else(|| Vector::zeros(n));
    set.project(&(center + noise))
}

/// The certificates need the minimizer over the map's feasible set. The
/// simplex quadratic is minimized over the simplex; the other objectives
/// are minimized over the whole space and fit a set only if it contains
/// their minimizer.
fn check_pairing(
    cfg: &ExperimentConfig,
    obj: &dyn Objective,
    map: &dyn MirrorMap,
) -> CliResult<()> {
    let set = map.feasible_set();
    let simplex_objective = cfg.objective.id == "simplex-quadratic";
    let simplex_set = matches!(set, FeasibleSet::Simplex);
    let fits = if simplex_objective || simplex_set {
        simplex_objective && simplex_set
    } else {
        obj.known_minimizer().is_none_or(|xs| set.contains(xs))
    };
    if fits {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "objective '{}' is not minimized over the {} of the '{}' map; \
             pair simplex-quadratic with simplex maps, and keep the minimizer of \
             other objectives inside the set",
            cfg.objective.id,
            set.name(),
            cfg.map.id
        )))
    }
}

/// Draws the objective, then the starting point, from one generator seeded
/// with `cfg.seed`.
pub fn build_problem(cfg: &ExperimentConfig) -> CliResult<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let objective = build_objective(&cfg.objective, &mut rng)?;
    let map = build_map(&cfg.map, cfg.objective.dim)?;
    check_pairing(cfg, objective.as_ref(), map.as_ref())?;
    let x0 = starting_point(objective.as_ref(), map.as_ref(), &mut rng);
    Ok(Problem { objective, map, x0 })
}
