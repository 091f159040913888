use mirrorlab::diagnostics::{audit_lyapunov, fit_rate, running_min, FitWindow};
use mirrorlab::{LyapunovTrace, TraceKind};
use proptest::prelude::*;

proptest! {
    #[test]
    fn running_min_is_the_prefix_minimum(series in prop::collection::vec(-1e6f64..1e6, 0..200)) {
        let m = running_min(&series);
        prop_assert_eq!(m.len(), series.len());
        for i in 0..series.len() {
            let brute = series[..=i].iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(m[i], brute);
        }
        prop_assert!(m.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(running_min(&m), m);
    }

    #[test]
    fn fit_recovers_exact_power_laws(scale in 1e-3f64..1e3, slope in -5.0f64..1.0, start in 1usize..20) {
        let t: Vec<f64> = (start..start + 300).map(|k| k as f64).collect();
        let v: Vec<f64> = t.iter().map(|x| scale * x.powf(slope)).collect();
        let fit = fit_rate(&v, &t, FitWindow::Indices(0, t.len())).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-9);
        prop_assert!((fit.intercept - scale.ln()).abs() <= 1e-7);
    }

    #[test]
    fn audit_flags_a_single_injected_violation(n in 3usize..100, at in 0usize..100, excess in 1e-3f64..1.0) {
        let at = at % (n - 1);
        let values: Vec<f64> = (0..n).map(|k| 10.0 / (k as f64 + 1.0)).collect();
        let mut bounds: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        let clean = LyapunovTrace {
            kind: TraceKind::Discrete,
            times: (0..n).map(|k| k as f64).collect(),
            values: values.clone(),
            certified_bounds: bounds.clone(),
        };
        prop_assert_eq!(audit_lyapunov(&clean, 1e-9).unwrap().violations, 0);
        bounds[at] -= excess * (1.0 + values[at].abs());
        let dirty = LyapunovTrace { certified_bounds: bounds, ..clean };
        let report = audit_lyapunov(&dirty, 1e-9).unwrap();
        prop_assert_eq!(report.violations, 1);
        prop_assert!(!report.monotone);
        prop_assert!(report.worst_excess > 0.0);
    }
}
