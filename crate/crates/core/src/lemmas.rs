//! Numerical checks of two auxiliary estimates: products `Π(1 + b_k)`
//! against `1 + Σ b_k` and `e^{Σ b_k}`, and the decay of inverse iterates
//! of the model branch `τ(v) = v + R v^{1+α}` of a neutral fixed point.

use std::io::Write;

use crate::error::{Error, Result};
use crate::maps::{NeutralMap, PiecewiseBijectiveMap};
use crate::rate::least_squares;
use crate::roots::solve_increasing;
use crate::space::State;

/// Relative slack for the product inequalities.
const PRODUCT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBounds {
    pub product: f64,
    /// `e^{Σ b_k}`.
    pub upper: f64,
    /// `1 + Σ b_k`, only when every `b_k ≥ 0`.
    pub lower: Option<f64>,
    pub upper_ok: bool,
    pub lower_ok: bool,
}

/// `Π(1 + b_k)` with its exponential upper and linear lower bounds.
pub fn product_bounds(b: &[f64]) -> Result<ProductBounds> {
    if let Some((k, v)) = b.iter().enumerate().find(|(_, v)| !(1.0 + **v > 0.0)) {
        return Err(Error::invalid(format!(
            "factor 1 + b[{k}] = {} is not positive",
            1.0 + v
        )));
    }
    let product: f64 = b.iter().map(|v| 1.0 + v).product();
    let sum: f64 = b.iter().sum();
    let upper = sum.exp();
    let lower = b.iter().all(|&v| v >= 0.0).then_some(1.0 + sum);
    Ok(ProductBounds {
        product,
        upper,
        lower,
        upper_ok: product <= upper * (1.0 + PRODUCT_SLACK),
        lower_ok: lower.is_none_or(|l| l <= product * (1.0 + PRODUCT_SLACK)),
    })
}

/// `τ(v) = v + R v^{1+α}` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeutralBranch {
    r: f64,
    alpha: f64,
}

impl NeutralBranch {
    pub fn new(r: f64, alpha: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("amplitude R={r} must be positive")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha={alpha} must be ≥ 0")));
        }
        Ok(NeutralBranch { r, alpha })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self, v: f64) -> f64 {
        v + self.r * v.powf(1.0 + self.alpha)
    }

    fn slope(&self, v: f64) -> f64 {
        1.0 + self.r * (1.0 + self.alpha) * v.powf(self.alpha)
    }

    /// `τ^{-1}(v)` to machine precision.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        solve_increasing(|u| self.tau(u), |u| self.slope(u), 0.0, v.max(0.0), v, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStep {
    /// `v / (1 + R v^α)`.
    pub u: f64,
    /// `τ^{-1}(v)`.
    pub inv: f64,
    /// `v (1 - R v^α / (1 + (1+α) R v^α))`.
    pub w: f64,
    /// `u ≤ inv ≤ w ≤ v`.
    pub ordered: bool,
}

/// Lower and upper estimates of one inverse step.
///
/// The upper estimate comes from the tangent of `τ` at `v`: by convexity
/// `τ^{-1}(v) ≤ v - (τ(v) - v) / τ'(v)`.
pub fn neutral_one_step_bounds(nb: &NeutralBranch, v: f64) -> Result<OneStep> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::usage(format!("v={v} must lie in (0, 1]")));
    }
    let rva = nb.r * v.powf(nb.alpha);
    let u = v / (1.0 + rva);
    let w = v * (1.0 - rva / (1.0 + (1.0 + nb.alpha) * rva));
    let inv = nb.inverse(v)?;
    // absorbs the last-ulp disagreement between the closed forms and the solver
    let slack = 4.0 * f64::EPSILON * v;
    let ordered = u <= inv + slack && inv <= w + slack && w <= v;
    Ok(OneStep { u, inv, w, ordered })
}

/// `τ^{-k}(v)` for `k = 0..=n_max`.
pub fn neutral_inverse_iterates(nb: &NeutralBranch, v: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::usage(format!("v={v} must lie in (0, 1]")));
    }
    if n_max < 1 {
        return Err(Error::usage("n_max must be at least 1"));
    }
    let mut out = Vec::with_capacity(n_max + 1);
    let mut cur = v;
    out.push(cur);
    for _ in 0..n_max {
        cur = nb.inverse(cur)?;
        out.push(cur);
    }
    Ok(out)
}

/// Power-law fit `seq[n] ≈ K n^{-γ}` on `n ∈ [lo, hi]`; returns `(K, γ)`.
pub fn fit_power_decay(seq: &[f64], lo: usize, hi: usize) -> Result<(f64, f64)> {
    let hi = hi.min(seq.len().saturating_sub(1));
    let lo = lo.max(1);
    if hi <= lo {
        return Err(Error::usage("fit range is empty"));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter(|&n| seq[n] > 0.0)
        .map(|n| ((n as f64).ln(), seq[n].ln()))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::usage("fit range has fewer than two positive values"));
    }
    let (a, b, _) = least_squares(&xs, &ys);
    Ok((a.exp(), -b))
}

/// Distance to `{0, 1}` after pulling `u` back along `path`, one branch
/// index per step.
pub fn neutral_map_backward_bound(map: &NeutralMap, u: f64, path: &[usize]) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::usage(format!("u={u} must lie in [0, 1]")));
    }
    let mut cur = State::interval(u);
    for &b in path {
        if b >= map.branch_count() {
            return Err(Error::usage(format!("branch {b} is not a branch of the neutral map")));
        }
        cur = map.inverse_in_branch(b, &cur)?;
    }
    Ok(cur.x().min(1.0 - cur.x()))
}

/// One row of a lemma sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub r: f64,
    pub n: usize,
    pub tau_inv_n: f64,
    pub fit_gamma: f64,
}

/// Inverse iterates of `1` for each `α`, with the exponent fitted on
/// `n ∈ [n_max/10, n_max]`. Rows are emitted at powers of two and at `n_max`.
pub fn lemma_sweep(alphas: &[f64], r: f64, n_max: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        let nb = NeutralBranch::new(r, alpha)?;
        let seq = neutral_inverse_iterates(&nb, 1.0, n_max)?;
        let (_, gamma) = fit_power_decay(&seq, n_max / 10, n_max)?;
        let mut n = 1;
        while n <= n_max {
            rows.push(SweepRow {
                alpha,
                r,
                n,
                tau_inv_n: seq[n],
                fit_gamma: gamma,
            });
            if n == n_max {
                break;
            }
            n = (n * 2).min(n_max);
        }
    }
    Ok(rows)
}

/// Writes `alpha,R,n,tau_inv_n,fit_gamma`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "alpha,R,n,tau_inv_n,fit_gamma")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.alpha, r.r, r.n, r.tau_inv_n, r.fit_gamma)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_examples() {
        let p = product_bounds(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((p.product, p.upper, p.lower), (1.0, 1.0, Some(1.0)));
        let p = product_bounds(&[1.0]).unwrap();
        assert_eq!(p.product, 2.0);
        assert_eq!(p.lower, Some(2.0));
        assert!((p.upper - std::f64::consts::E).abs() < 1e-15);
        assert!(p.upper_ok && p.lower_ok);
        let p = product_bounds(&[0.5, -0.5]).unwrap();
        assert_eq!(p.lower, None);
        assert!(p.upper_ok);
        assert!(product_bounds(&[-1.0]).is_err());
    }

    #[test]
    fn one_step_examples() {
        let nb = NeutralBranch::new(1.0, 1.0).unwrap();
        let s = neutral_one_step_bounds(&nb, 1.0).unwrap();
        assert_eq!(s.u, 0.5);
        // oracle: positive root of v + v² = 1
        assert!((s.inv - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert!((s.w - 2.0 / 3.0).abs() < 1e-15);
        assert!(s.ordered);

        let nb = NeutralBranch::new(1.0, 0.5).unwrap();
        let s = neutral_one_step_bounds(&nb, 0.25).unwrap();
        assert!((s.u - 1.0 / 6.0).abs() < 1e-15);
        assert!((nb.tau(s.inv) - 0.25).abs() <= 1e-13);
        assert!(s.ordered);

        let s = neutral_one_step_bounds(&nb, 1e-12).unwrap();
        assert!((s.u / 1e-12 - 1.0).abs() < 1e-5 && (s.w / 1e-12 - 1.0).abs() < 1e-5);
        assert!(neutral_one_step_bounds(&nb, 0.0).is_err());
    }

    #[test]
    fn sandwich_with_small_v_and_large_r() {
        // a denominator with v^{1+α} instead of v^α breaks the upper bound here
        let nb = NeutralBranch::new(2.0, 0.1).unwrap();
        let s = neutral_one_step_bounds(&nb, 0.01).unwrap();
        assert!(s.w > 0.0 && s.ordered, "{s:?}");
    }

    #[test]
    fn linear_case_is_geometric() {
        let nb = NeutralBranch::new(0.5, 0.0).unwrap();
        let seq = neutral_inverse_iterates(&nb, 0.8, 60).unwrap();
        for (n, v) in seq.iter().enumerate() {
            assert!((v - 0.8 * 1.5f64.powi(-(n as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn iterates_decrease() {
        let nb = NeutralBranch::new(1.0, 0.5).unwrap();
        let seq = neutral_inverse_iterates(&nb, 1.0, 500).unwrap();
        assert!(seq.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn backward_bound_trivia() {
        let map = NeutralMap::new(0.5, 0.5).unwrap();
        assert_eq!(neutral_map_backward_bound(&map, 0.9, &[]).unwrap(), 0.09999999999999998);
        assert_eq!(neutral_map_backward_bound(&map, 0.0, &[0; 50]).unwrap(), 0.0);
        assert!(matches!(
            neutral_map_backward_bound(&map, 0.5, &[2]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn sweep_csv() {
        let rows = lemma_sweep(&[0.5], 1.0, 100).unwrap();
        assert_eq!(rows.last().unwrap().n, 100);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("alpha,R,n,tau_inv_n,fit_gamma\n0.5,1,1,"));
    }
}
