//! Safeguarded Newton–bisection for strictly increasing scalar functions.

use crate::error::{Error, Result};

/// Default absolute tolerance for inverse-branch root finding.
pub const ROOT_TOL: f64 = 1e-13;

const MAX_ITER: usize = 400;

/// Newton steps are only trusted where the derivative exceeds this value.
const NEWTON_MIN_SLOPE: f64 = 0.5;

/// Solves `f(u) = target` on `[lo, hi]` for a continuous strictly
/// increasing `f` with derivative `df`.
///
/// The bracket is kept at every step, so convergence does not depend on the
/// Newton steps. With `atol == 0` the iteration runs to machine precision.
pub fn solve_increasing<F, D>(f: F, df: D, lo: f64, hi: f64, target: f64, atol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !(lo <= hi) || !target.is_finite() {
        return Err(Error::RootFinding(format!(
            "bad bracket [{lo}, {hi}] for target {target}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let fa = f(a) - target;
    let fb = f(b) - target;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa > 0.0 || fb < 0.0 {
        return Err(Error::RootFinding(format!(
            "target {target} not bracketed by f({lo}) = {}, f({hi}) = {}",
            fa + target,
            fb + target
        )));
    }

    let mut x = 0.5 * (a + b);
    for _ in 0..MAX_ITER {
        let fx = f(x) - target;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if b - a <= atol {
            return Ok(0.5 * (a + b));
        }

        let slope = df(x);
        let mut next = f64::NAN;
        if slope > NEWTON_MIN_SLOPE {
            let step = fx / slope;
            let cand = x - step;
            if cand > a && cand < b {
                if step.abs() <= atol || cand == x {
                    return Ok(cand);
                }
                next = cand;
            }
        }
        if next.is_nan() {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                // bracket exhausted at machine precision
                return Ok(if (f(a) - target).abs() <= (f(b) - target).abs() {
                    a
                } else {
                    b
                });
            }
            next = mid;
        }
        x = next;
    }
    Err(Error::RootFinding(format!(
        "no convergence on [{lo}, {hi}] for target {target} after {MAX_ITER} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = solve_increasing(|x| x * x, |x| 2.0 * x, 0.0, 2.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn flat_slope_falls_back_to_bisection() {
        // derivative vanishes at the root; Newton alone would stall
        let r = solve_increasing(|x| x * x * x, |x| 3.0 * x * x, -1.0, 2.0, 0.0, 0.0).unwrap();
        assert!(r.abs() < 1e-100 || r.powi(3).abs() < 1e-300);
    }

    #[test]
    fn full_precision_with_zero_tolerance() {
        let r = solve_increasing(|x| x + x * x, |x| 1.0 + 2.0 * x, 0.0, 1.0, 1.0, 0.0).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((r - golden).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn unbracketed_target_is_an_error() {
        assert!(solve_increasing(|x| x, |_| 1.0, 0.0, 1.0, 2.0, 1e-13).is_err());
    }
}
