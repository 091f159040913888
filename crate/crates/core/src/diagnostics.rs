//! Rate fitting, running minima and Lyapunov audits.

use crate::trace::{LyapunovTrace, TraceKind};
use crate::{Error, Result};

/// Minimum number of usable points for a rate fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Power-law fit `v ~ exp(intercept) * t^slope`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Half-open index range of the samples considered.
    pub window: (usize, usize),
    pub max_residual: f64,
    /// Nonpositive or non-finite samples dropped from the window.
    pub trimmed: usize,
}

/// Which samples [`fit_rate`] uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitWindow {
    /// Drop the first 10% and the last 5% of samples.
    Default,
    /// Half-open index range.
    Indices(usize, usize),
    /// Samples with `lo <= t <= hi`.
    Times(f64, f64),
}

impl FitWindow {
    fn resolve(self, times: &[f64]) -> (usize, usize) {
        let n = times.len();
        match self {
            FitWindow::Default => (n / 10, n - n / 20),
            FitWindow::Indices(a, b) => (a.min(n), b.min(n)),
            FitWindow::Times(lo, hi) => {
                let a = times.partition_point(|&t| t < lo);
                let b = times.partition_point(|&t| t <= hi);
                (a, b.max(a))
            }
        }
    }
}

/// Least-squares line through `(ln t, ln v)` over the window.
pub fn fit_rate(series: &[f64], times: &[f64], window: FitWindow) -> Result<RateEstimate> {
    if series.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: series.len(),
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::MalformedTrace(
            "fit times must be positive and strictly increasing".into(),
        ));
    }
    let (start, end) = window.resolve(times);
    let mut xs = Vec::with_capacity(end.saturating_sub(start));
    let mut ys = Vec::with_capacity(xs.capacity());
    let mut trimmed = 0;
    for i in start..end {
        let v = series[i];
        if v > 0.0 && v.is_finite() {
            xs.push(times[i].ln());
            ys.push(v.ln());
        } else {
            trimmed += 1;
        }
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            points: xs.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(RateEstimate {
        slope,
        intercept,
        window: (start, end),
        max_residual,
        trimmed,
    })
}

/// Prefix minima.
pub fn running_min(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut best = f64::INFINITY;
    for &v in series {
        best = best.min(v);
        out.push(best);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub total_steps: usize,
    pub violations: usize,
    /// Largest observed amount by which a step exceeded its bound, 0 if none did.
    pub worst_excess: f64,
    pub monotone: bool,
}

/// Checks every step of the trace against its certified bound.
///
/// Discrete traces compare `values[i+1] - values[i]` with
/// `certified_bounds[i] + tolerance * (1 + |values[i]|)`. Continuous traces
/// compare the difference quotient between adjacent samples with the larger
/// of the two endpoint bounds plus the absolute `tolerance`.
pub fn audit_lyapunov(trace: &LyapunovTrace, tolerance: f64) -> Result<AuditReport> {
    trace.validate()?;
    let v = &trace.values;
    let b = &trace.certified_bounds;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    let steps = v.len().saturating_sub(1);
    for i in 0..steps {
        let (observed, bound, slack) = match trace.kind {
            TraceKind::Discrete => (v[i + 1] - v[i], b[i], tolerance * (1.0 + v[i].abs())),
            TraceKind::Continuous => {
                let dt = trace.times[i + 1] - trace.times[i];
                ((v[i + 1] - v[i]) / dt, b[i].max(b[i + 1]), tolerance)
            }
        };
        let excess = observed - bound;
        if !(excess <= slack) {
            violations += 1;
        }
        if excess.is_nan() {
            worst = f64::NAN;
        } else {
            worst = worst.max(excess);
        }
    }
    Ok(AuditReport {
        total_steps: steps,
        violations,
        worst_excess: worst,
        monotone: violations == 0,
    })
}

/// Counts steps with `values[i+1] > values[i] + tolerance * (1 + |values[i]|)`.
pub fn audit_nonincreasing(values: &[f64], tolerance: f64) -> AuditReport {
    let trace = LyapunovTrace {
        kind: TraceKind::Discrete,
        times: (0..values.len()).map(|i| i as f64).collect(),
        values: values.to_vec(),
        certified_bounds: vec![0.0; values.len().saturating_sub(1)],
    };
    audit_lyapunov(&trace, tolerance).expect("trace built well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks(a: usize, b: usize) -> Vec<f64> {
        (a..=b).map(|k| k as f64).collect()
    }

    #[test]
    fn exact_power_law() {
        let t = ks(10, 1000);
        let v: Vec<f64> = t.iter().map(|k| 1.0 / (k * k)).collect();
        let r = fit_rate(&v, &t, FitWindow::Indices(0, t.len())).unwrap();
        assert!((r.slope + 2.0).abs() < 1e-9);
        assert!(r.max_residual < 1e-9);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let t = ks(1, 50);
        let v = vec![4.2; t.len()];
        let r = fit_rate(&v, &t, FitWindow::Default).unwrap();
        assert!(r.slope.abs() < 1e-12);
    }

    #[test]
    fn floored_cubic() {
        let t = ks(10, 1000);
        let v: Vec<f64> = t.iter().map(|k| 3.0 / (k * k * k) + 1e-12).collect();
        let r = fit_rate(&v, &t, FitWindow::Times(10.0, 1000.0)).unwrap();
        assert!(r.slope >= -3.01 && r.slope <= -2.9, "slope {}", r.slope);
    }

    #[test]
    fn zeros_are_trimmed_and_reported() {
        let t = ks(1, 20);
        let mut v: Vec<f64> = t.iter().map(|k| 1.0 / k).collect();
        v[5] = 0.0;
        v[6] = -1.0;
        let r = fit_rate(&v, &t, FitWindow::Indices(0, 20)).unwrap();
        assert_eq!(r.trimmed, 2);
        assert!((r.slope + 1.0).abs() < 1e-12);
        let few = vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0];
        assert!(matches!(
            fit_rate(&few, &ks(1, 7), FitWindow::Indices(0, 7)),
            Err(Error::InsufficientData {
                points: 4,
                needed: 5
            })
        ));
    }

    #[test]
    fn default_window_drops_transient_and_tail() {
        let t = ks(1, 200);
        let v = vec![1.0; 200];
        let r = fit_rate(&v, &t, FitWindow::Default).unwrap();
        assert_eq!(r.window, (20, 190));
    }

    #[test]
    fn running_min_examples() {
        assert_eq!(running_min(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 1.0]);
        let dec = [5.0, 4.0, 1.0, -2.0];
        assert_eq!(running_min(&dec), dec.to_vec());
    }

    #[test]
    fn audit_zero_trace() {
        let tr = LyapunovTrace {
            kind: TraceKind::Discrete,
            times: ks(0, 9),
            values: vec![0.0; 10],
            certified_bounds: vec![0.0; 9],
        };
        let r = audit_lyapunov(&tr, 1e-9).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.monotone);
        assert_eq!(r.total_steps, 9);
    }

    #[test]
    fn audit_catches_injected_violation() {
        let mut values = vec![0.0; 10];
        for v in values.iter_mut().skip(6) {
            *v = 0.25;
        }
        let tr = LyapunovTrace {
            kind: TraceKind::Discrete,
            times: ks(0, 9),
            values,
            certified_bounds: vec![0.0; 9],
        };
        let r = audit_lyapunov(&tr, 1e-9).unwrap();
        assert_eq!(r.violations, 1);
        assert_eq!(r.worst_excess, 0.25);
        assert!(!r.monotone);
    }

    #[test]
    fn audit_rejects_length_mismatch() {
        let tr = LyapunovTrace {
            kind: TraceKind::Discrete,
            times: ks(0, 3),
            values: vec![0.0; 4],
            certified_bounds: vec![0.0; 4],
        };
        assert!(matches!(
            audit_lyapunov(&tr, 0.0),
            Err(Error::MalformedTrace(_))
        ));
    }

    #[test]
    fn continuous_audit_uses_rate() {
        // E(t) = 1/t has rate -1/t^2, which satisfies a bound of -1/t^2 at the right endpoint
        let times: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| 1.0 / t).collect();
        let bounds: Vec<f64> = times.iter().map(|t| -1.0 / (t * t)).collect();
        let tr = LyapunovTrace {
            kind: TraceKind::Continuous,
            times,
            values,
            certified_bounds: bounds,
        };
        assert_eq!(audit_lyapunov(&tr, 1e-12).unwrap().violations, 0);
    }
}
