//! Dormand-Prince 5(4) with step-size control and continuous output.

use crate::{Error, Result, Vector};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings. Both the absolute and relative error weights
/// equal `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DormandPrince {
    pub tol: f64,
    pub max_steps: usize,
    pub safety: f64,
}

impl DormandPrince {
    pub fn new(tol: f64) -> Result<Self> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "integration tolerance must be positive, got {tol}"
            )));
        }
        Ok(DormandPrince {
            tol,
            max_steps: 5_000_000,
            safety: 0.9,
        })
    }
}

/// States at the requested sample times plus step statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub accepted: usize,
    pub rejected: usize,
}

fn error_norm(tol: f64, y0: &Vector, y1: &Vector, err: &Vector) -> f64 {
    let n = y0.len().max(1) as f64;
    let sum: f64 = (0..y0.len())
        .map(|i| {
            let sc = tol + tol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(rhs: &F, t0: f64, y0: &Vector, f0: &Vector, tol: f64, span: f64) -> f64
where
    F: Fn(f64, &Vector) -> Vector,
{
    let scale = y0.map(|v| tol + tol * v.abs());
    let d0 = (y0.component_div(&scale).norm_squared() / y0.len() as f64).sqrt();
    let d1 = (f0.component_div(&scale).norm_squared() / y0.len() as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = y0 + f0 * h0;
    let f1 = rhs(t0 + h0, &y1);
    let d2 = ((&f1 - f0).component_div(&scale).norm_squared() / y0.len() as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `y' = rhs(t, y)` from `t0` and returns the dense-output
/// solution at `samples`, which must be nondecreasing and not before `t0`.
/// `observer` sees every accepted step end point.
pub fn integrate<F, O>(
    method: &DormandPrince,
    rhs: F,
    t0: f64,
    y0: &Vector,
    samples: &[f64],
    mut observer: O,
) -> Result<Solution>
where
    F: Fn(f64, &Vector) -> Vector,
    O: FnMut(f64, &Vector) -> Result<()>,
{
    if samples.windows(2).any(|w| w[1] < w[0]) || samples.first().is_some_and(|&s| s < t0) {
        return Err(Error::InvalidParameter(
            "sample times must be nondecreasing and not before the start time".into(),
        ));
    }
    let mut sol = Solution {
        times: Vec::with_capacity(samples.len()),
        states: Vec::with_capacity(samples.len()),
        accepted: 0,
        rejected: 0,
    };
    let mut next = 0;
    while next < samples.len() && samples[next] == t0 {
        sol.times.push(t0);
        sol.states.push(y0.clone());
        next += 1;
    }
    let t_end = match samples.last() {
        Some(&t) if next < samples.len() => t,
        _ => return Ok(sol),
    };
    let tol = method.tol;
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&rhs, t, &y, &k1, tol, t_end - t0);
    let mut steps = 0;
    while next < samples.len() {
        if steps >= method.max_steps {
            return Err(Error::Stiffness {
                t,
                state: y.iter().copied().collect(),
            });
        }
        steps += 1;
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::Stiffness {
                t,
                state: y.iter().copied().collect(),
            });
        }
        let h_step = h.min(t_end - t);
        let k2 = rhs(t + C2 * h_step, &(&y + &k1 * (h_step * A21)));
        let k3 = rhs(t + C3 * h_step, &(&y + (&k1 * A31 + &k2 * A32) * h_step));
        let k4 = rhs(
            t + C4 * h_step,
            &(&y + (&k1 * A41 + &k2 * A42 + &k3 * A43) * h_step),
        );
        let k5 = rhs(
            t + C5 * h_step,
            &(&y + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h_step),
        );
        let k6 = rhs(
            t + h_step,
            &(&y + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h_step),
        );
        let y_new = &y + (&k1 * A71 + &k3 * A73 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h_step;
        let k7 = rhs(t + h_step, &y_new);
        let err = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h_step;
        let en = error_norm(tol, &y, &y_new, &err);
        if !en.is_finite() || en > 1.0 {
            sol.rejected += 1;
            let factor = if en.is_finite() {
                (method.safety * en.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h = h_step * factor;
            continue;
        }
        sol.accepted += 1;
        let t_new = if h_step == t_end - t {
            t_end
        } else {
            t + h_step
        };
        if next < samples.len() && samples[next] <= t_new {
            let c1 = &y_new - &y;
            let c2 = &k1 * h_step - &c1;
            let c3 = &c1 - &k7 * h_step - &c2;
            let c4 = (&k1 * D1 + &k3 * D3 + &k4 * D4 + &k5 * D5 + &k6 * D6 + &k7 * D7) * h_step;
            while next < samples.len() && samples[next] <= t_new {
                let ts = samples[next];
                let th = ((ts - t) / h_step).clamp(0.0, 1.0);
                let th1 = 1.0 - th;
                let ys = &y + (&c1 + (&c2 + (&c3 + &c4 * th1) * th) * th1) * th;
                sol.times.push(ts);
                sol.states
                    .push(if ts == t_new { y_new.clone() } else { ys });
                next += 1;
            }
        }
        observer(t_new, &y_new)?;
        let factor = if en == 0.0 {
            5.0
        } else {
            (method.safety * en.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = h_step * factor;
        t = t_new;
        y = y_new;
        k1 = k7;
    }
    Ok(sol)
}
