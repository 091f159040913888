use mirrorlab::amd::{
    amd_constrained_step, amd_unconstrained_step, default_oracle, higher_order_gate, run_amd,
    run_higher_order, AmdState, AmdVariant, HigherOrderState,
};
use mirrorlab::diagnostics::{audit_lyapunov, audit_nonincreasing};
use mirrorlab::md::{md_step, run_md, MdState};
use mirrorlab::problems::{
    make_entropy_map, make_euclidean_map, make_pth_power_map, FeasibleSet, MirrorMap, Objective,
    Quadratic,
};
use mirrorlab::{RunRecord, Vector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const TOL: f64 = 1e-9;

fn problem(seed: u64, dim: usize, eig_min: f64) -> (Quadratic, Vector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = Quadratic::random_spd(dim, eig_min, 1.0, &mut rng).unwrap();
    let noise = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
    let x0 = f.known_minimizer().unwrap() + noise;
    (f, x0)
}

fn simplex_problem(seed: u64, dim: usize) -> (Quadratic, Vector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = Quadratic::random_on_simplex(dim, 1e-2, 1.0, &mut rng).unwrap();
    (f, Vector::from_element(dim, 1.0 / dim as f64))
}

fn gaps_with_last(rec: &RunRecord, obj: &dyn Objective, last: &Vector) -> Vec<f64> {
    let mut g = rec.column("f_gap").unwrap();
    g.push(obj.optimality_gap(last).unwrap());
    g
}

fn assert_below(gaps: &[f64], bound: impl Fn(f64) -> f64) {
    for (k, g) in gaps.iter().enumerate().skip(1) {
        let b = bound(k as f64);
        assert!(*g <= b + TOL * (1.0 + b), "k = {k}: gap {g} above {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mirror_descent_certificate(seed in 0u64..1000, dim in 2usize..7, eig_min in 1e-3f64..1.0, ratio in 0.05f64..=1.0) {
        let (f, x0) = problem(seed, dim, eig_min);
        let m = make_euclidean_map(dim).unwrap();
        let s = ratio / f.lipschitz();
        let (last, rec) = run_md(MdState::new(&x0, &f, &m, s).unwrap(), &f, &m, 300, false).unwrap();
        prop_assert_eq!(audit_lyapunov(&rec.trace, TOL).unwrap().violations, 0);
        prop_assert!(audit_nonincreasing(&rec.trace.values, TOL).monotone);
        let d0 = m.primal_bregman(f.known_minimizer().unwrap(), &x0);
        assert_below(&gaps_with_last(&rec, &f, &last.x), |k| d0 / (k * m.sigma() * s));
    }

    #[test]
    fn euclidean_mirror_descent_is_gradient_descent(seed in 0u64..1000, dim in 1usize..7, ratio in 0.05f64..1.9) {
        let (f, x0) = problem(seed, dim, 1e-2);
        let m = make_euclidean_map(dim).unwrap();
        let s = ratio / f.lipschitz();
        let mut st = MdState::new(&x0, &f, &m, s).unwrap();
        let mut x = x0.clone();
        for _ in 0..100 {
            st = md_step(&st, &f, &m).unwrap();
            x = &x - f.gradient(&x) * s;
            prop_assert!((&st.x - &x).amax() <= 1e-12);
        }
    }

    #[test]
    fn entropy_mirror_descent_stays_on_simplex(seed in 0u64..1000, dim in 2usize..12, ratio in 0.05f64..=1.0) {
        let (f, x0) = simplex_problem(seed, dim);
        let m = make_entropy_map(dim).unwrap();
        let s = ratio / f.lipschitz();
        let (last, rec) = run_md(MdState::new(&x0, &f, &m, s).unwrap(), &f, &m, 300, true).unwrap();
        prop_assert!(rec.xs.iter().all(|x| FeasibleSet::Simplex.contains(x)));
        prop_assert_eq!(audit_lyapunov(&rec.trace, TOL).unwrap().violations, 0);
        let d0 = m.primal_bregman(f.known_minimizer().unwrap(), &x0);
        assert_below(&gaps_with_last(&rec, &f, &last.x), |k| d0 / (k * m.sigma() * s));
    }

    #[test]
    fn accelerated_certificate_and_rate(seed in 0u64..1000, dim in 2usize..7, eig_min in 1e-3f64..1.0, ratio in 0.05f64..=1.0) {
        let (f, x0) = problem(seed, dim, eig_min);
        let m = make_euclidean_map(dim).unwrap();
        let s = ratio / f.lipschitz();
        let st = AmdState::new(AmdVariant::Unconstrained, &x0, &f, &m, s).unwrap();
        let (last, rec) = run_amd(st, &f, &m, 300, false).unwrap();
        prop_assert_eq!(audit_lyapunov(&rec.trace, TOL).unwrap().violations, 0);
        prop_assert!(audit_nonincreasing(&rec.trace.values, TOL).monotone);
        let e0 = rec.trace.values[0];
        let gaps = gaps_with_last(&rec, &f, &last.x);
        assert_below(&gaps, |k| e0 / ((k + 1.0) * (k + 2.0) * m.sigma() * s));
    }

    #[test]
    fn constrained_variant_on_whole_space_matches(seed in 0u64..1000, dim in 1usize..7, ratio in 0.05f64..=1.0) {
        let (f, x0) = problem(seed, dim, 1e-2);
        let m = make_euclidean_map(dim).unwrap();
        let s = ratio / f.lipschitz();
        let mut a = AmdState::new(AmdVariant::Unconstrained, &x0, &f, &m, s).unwrap();
        let mut b = AmdState::new(AmdVariant::Constrained, &x0, &f, &m, s).unwrap();
        for _ in 0..200 {
            a = amd_unconstrained_step(&a, &f, &m).unwrap();
            b = amd_constrained_step(&b, &f, &m).unwrap();
            prop_assert!((&a.x - &b.x).amax() <= 1e-10);
        }
    }

    #[test]
    fn constrained_entropy_certificate(seed in 0u64..1000, dim in 2usize..12, ratio in 0.05f64..=0.5) {
        let (f, x0) = simplex_problem(seed, dim);
        let m = make_entropy_map(dim).unwrap();
        let s = ratio / f.lipschitz();
        let st = AmdState::new(AmdVariant::Constrained, &x0, &f, &m, s).unwrap();
        let (last, rec) = run_amd(st, &f, &m, 300, true).unwrap();
        prop_assert!(rec.xs.iter().chain(&rec.ys).all(|v| FeasibleSet::Simplex.contains(v)));
        prop_assert_eq!(audit_lyapunov(&rec.trace, TOL).unwrap().violations, 0);
        let d0 = m.primal_bregman(f.known_minimizer().unwrap(), &x0);
        let gaps = gaps_with_last(&rec, &f, &last.y);
        assert_below(&gaps, |k| 4.0 * d0 / (k * (k + 1.0) * m.sigma() * s));
    }

    #[test]
    fn higher_order_certificate(seed in 0u64..1000, dim in 2usize..6, p in 2u32..=3, frac in 0.1f64..=1.0) {
        let (f, x0) = problem(seed, dim, 1e-2);
        let m = make_pth_power_map(dim, p).unwrap();
        let s = 0.5 / f.lipschitz();
        let const_m = 0.5;
        let c = frac * higher_order_gate(m.sigma(), const_m, p);
        let oracle = default_oracle(p).unwrap();
        let st = HigherOrderState::new(&x0, &f, &m, p, c, const_m, s).unwrap();
        let (last, rec) = run_higher_order(st, &f, &m, oracle.as_ref(), 200, false).unwrap();
        prop_assert_eq!(audit_lyapunov(&rec.trace, TOL).unwrap().violations, 0);
        prop_assert!(last.condition_residuals.iter().all(|r| *r >= -1e-9));
        let d0 = m.primal_bregman(f.known_minimizer().unwrap(), &x0);
        let gaps = gaps_with_last(&rec, &f, &last.y);
        assert_below(&gaps, |k| {
            let rising: f64 = (0..p).map(|i| k + i as f64).product();
            d0 / (c * s * rising)
        });
    }
}

#[test]
fn nesterov_recursion_matches_for_fifty_steps() {
    let (f, x0) = problem(11, 5, 1e-2);
    let m = make_euclidean_map(5).unwrap();
    let s = 1.0 / f.lipschitz();
    let mut st = AmdState::new(AmdVariant::Unconstrained, &x0, &f, &m, s).unwrap();
    let (mut x, mut z) = (x0.clone(), x0.clone());
    for k in 0..50 {
        let g = f.gradient(&x);
        let kf = k as f64;
        z = &z - &g * ((kf + 1.0) * s / 2.0);
        x = (&z * 2.0 + (&x - &g * s) * (kf + 1.0)) / (kf + 3.0);
        st = amd_unconstrained_step(&st, &f, &m).unwrap();
        assert!((&st.x - &x).amax() <= 1e-10, "k = {k}");
    }
}
