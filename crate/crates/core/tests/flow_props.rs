use mirrorlab::diagnostics::{audit_lyapunov, fit_rate, running_min, FitWindow};
use mirrorlab::flows::{
    flow_record, integrate, integrate_accelerated_flow, integrate_mirror_flow, uniform_samples,
    DormandPrince, FlowKind,
};
use mirrorlab::problems::{make_euclidean_map, MirrorMap, Objective, Quadratic};
use mirrorlab::{RunRecord, Vector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const AUDIT_TOL: f64 = 1e-6;

fn problem(seed: u64, dim: usize, eig_min: f64) -> (Quadratic, Vector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = Quadratic::random_spd(dim, eig_min, 1.0, &mut rng).unwrap();
    let noise = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
    let x0 = f.known_minimizer().unwrap() + noise;
    (f, x0)
}

fn check_gap(rec: &RunRecord, bound: impl Fn(f64) -> f64) {
    let ts = rec.column("t").unwrap();
    let gaps = rec.column("f_gap").unwrap();
    for (t, g) in ts.iter().zip(gaps).filter(|(t, _)| **t >= 1.0) {
        let b = bound(*t);
        assert!(g <= b * (1.0 + 1e-5) + 1e-9, "t = {t}: gap {g} above {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mirror_flow_certificate(seed in 0u64..1000, dim in 2usize..6, eig_min in 1e-3f64..1.0) {
        let (f, x0) = problem(seed, dim, eig_min);
        let m = make_euclidean_map(dim).unwrap();
        let samples = uniform_samples(20.0, 200);
        let states = integrate_mirror_flow(&x0, &f, &m, 20.0, 1e-10, &samples).unwrap();
        let rec = flow_record(&states, FlowKind::Mirror, &f, &m, false).unwrap();
        prop_assert_eq!(audit_lyapunov(&rec.trace, AUDIT_TOL).unwrap().violations, 0);
        let d0 = m.primal_bregman(f.known_minimizer().unwrap(), &x0);
        check_gap(&rec, |t| d0 / (t * m.sigma()));
    }

    #[test]
    fn accelerated_flow_certificate(seed in 0u64..1000, dim in 2usize..6, which in 0usize..3) {
        let sqrt_s = [0.0, 0.05, 1.0][which];
        let (f, x0) = problem(seed, dim, 1e-2);
        let m = make_euclidean_map(dim).unwrap();
        let samples = uniform_samples(20.0, 200);
        let states =
            integrate_accelerated_flow(&x0, &f, &m, sqrt_s, 20.0, 1e-10, 1e-3, &samples).unwrap();
        let rec = flow_record(&states, FlowKind::Accelerated, &f, &m, false).unwrap();
        prop_assert_eq!(audit_lyapunov(&rec.trace, AUDIT_TOL).unwrap().violations, 0);
        let d0 = m.primal_bregman(f.known_minimizer().unwrap(), &x0);
        check_gap(&rec, |t| 4.0 * d0 / (t * t * m.sigma()));
    }
}

#[test]
fn mirror_flow_velocity_decays_faster_than_inverse_square() {
    let (f, x0) = problem(5, 4, 0.1);
    let m = make_euclidean_map(4).unwrap();
    let samples = uniform_samples(50.0, 500);
    let states = integrate_mirror_flow(&x0, &f, &m, 50.0, 1e-11, &samples).unwrap();
    let rec = flow_record(&states, FlowKind::Mirror, &f, &m, false).unwrap();
    let ts = rec.column("t").unwrap();
    let vel = running_min(&rec.column("velocity_norm_sq").unwrap());
    let keep: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] > 0.0).collect();
    let t: Vec<f64> = keep.iter().map(|&i| ts[i]).collect();
    let v: Vec<f64> = keep.iter().map(|&i| vel[i]).collect();
    let fit = fit_rate(&v, &t, FitWindow::Times(1.0, 50.0)).unwrap();
    assert!(fit.slope <= -2.0, "slope {}", fit.slope);
}

#[test]
fn tighter_tolerance_shrinks_oscillator_error() {
    let rhs = |_t: f64, y: &Vector| Vector::from_vec(vec![y[1], -y[0]]);
    let y0 = Vector::from_vec(vec![1.0, 0.0]);
    let t_end = 20.0;
    let error = |tol: f64| {
        let method = DormandPrince::new(tol).unwrap();
        let sol = integrate(&method, rhs, 0.0, &y0, &[t_end], |_, _| Ok(())).unwrap();
        let y = &sol.states[0];
        ((y[0] - t_end.cos()).powi(2) + (y[1] + t_end.sin()).powi(2)).sqrt()
    };
    let coarse = error(1e-6);
    let fine = error(1e-8);
    assert!(fine * 10.0 <= coarse, "coarse {coarse}, fine {fine}");
}
