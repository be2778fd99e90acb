//! Rate functions `φ: Z → R≥0`, their monotone envelopes and sums, and
//! least-squares fits of exponential and power-law decay.

use std::fmt;

use crate::error::{Error, Result};

/// Which half-line a one-sided rate lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `k ≤ 0`.
    Backward,
    /// `k ≥ 0`.
    Forward,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Backward => "backward",
            Side::Forward => "forward",
        })
    }
}

/// A constant stretch `[start, end]` of a tabulated rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub start: i64,
    pub end: i64,
    pub value: f64,
}

impl Run {
    fn len(&self) -> u64 {
        (self.end - self.start + 1) as u64
    }
}

/// A rate tabulated on `[lo, hi]`, stored as sorted non-zero runs.
/// Indices inside the window not covered by a run are zero; indices outside
/// the window are unobserved and read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    lo: i64,
    hi: i64,
    runs: Vec<Run>,
}

impl Table {
    /// Dense table with `values[j]` at index `first + j`.
    pub fn from_values(first: i64, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty rate table"));
        }
        let mut runs: Vec<Run> = Vec::new();
        for (j, &v) in values.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "rate value {v} at index {} is not ≥ 0",
                    first + j as i64
                )));
            }
            let k = first + j as i64;
            if v == 0.0 {
                continue;
            }
            match runs.last_mut() {
                Some(r) if r.end == k - 1 && r.value == v => r.end = k,
                _ => runs.push(Run {
                    start: k,
                    end: k,
                    value: v,
                }),
            }
        }
        Ok(Table {
            lo: first,
            hi: first + values.len() as i64 - 1,
            runs,
        })
    }

    /// Table from sorted, disjoint runs inside `[lo, hi]`.
    pub fn from_runs(lo: i64, hi: i64, mut runs: Vec<Run>) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid("empty rate window"));
        }
        runs.retain(|r| r.value != 0.0);
        runs.sort_by_key(|r| r.start);
        let mut prev_end = lo - 1;
        for r in &runs {
            if r.start > r.end || r.start <= prev_end || r.end > hi || r.start < lo {
                return Err(Error::invalid(format!(
                    "run [{}, {}] overlaps or leaves the window",
                    r.start, r.end
                )));
            }
            if !(r.value >= 0.0 && r.value.is_finite()) {
                return Err(Error::invalid("rate values must be finite and ≥ 0"));
            }
            prev_end = r.end;
        }
        Ok(Table { lo, hi, runs })
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn value(&self, k: i64) -> f64 {
        let idx = self.runs.partition_point(|r| r.end < k);
        match self.runs.get(idx) {
            Some(r) if r.start <= k => r.value,
            _ => 0.0,
        }
    }

    /// Constant pieces covering `[a, b]`, including the zero stretches.
    fn pieces(&self, a: i64, b: i64) -> Vec<Run> {
        let mut out = Vec::new();
        let mut pos = a;
        for r in &self.runs {
            if r.end < a || r.start > b {
                continue;
            }
            let s = r.start.max(a);
            if s > pos {
                out.push(Run {
                    start: pos,
                    end: s - 1,
                    value: 0.0,
                });
            }
            let e = r.end.min(b);
            out.push(Run {
                start: s,
                end: e,
                value: r.value,
            });
            pos = e + 1;
        }
        if pos <= b {
            out.push(Run {
                start: pos,
                end: b,
                value: 0.0,
            });
        }
        out
    }

    /// The envelope reaches from each side of the window to 0, since values
    /// outside the window are zero and the suprema run towards the origin.
    fn envelope(&self) -> Table {
        let mut runs = Vec::new();
        if self.lo <= -1 {
            let mut cur = 0.0f64;
            for p in self.pieces(self.lo, -1) {
                cur = cur.max(p.value);
                runs.push(Run { value: cur, ..p });
            }
        }
        if self.hi >= 0 {
            let mut cur = 0.0f64;
            let mut right = Vec::new();
            for p in self.pieces(0, self.hi).into_iter().rev() {
                cur = cur.max(p.value);
                right.push(Run { value: cur, ..p });
            }
            right.reverse();
            runs.extend(right);
        }
        let mut merged: Vec<Run> = Vec::with_capacity(runs.len());
        for r in runs {
            if r.value == 0.0 {
                continue;
            }
            match merged.last_mut() {
                Some(m) if m.end + 1 == r.start && m.value == r.value => m.end = r.end,
                _ => merged.push(r),
            }
        }
        Table {
            lo: self.lo.min(0),
            hi: self.hi.max(0),
            runs: merged,
        }
    }

    fn sum(&self) -> f64 {
        let mut acc = Neumaier::default();
        for r in &self.runs {
            acc.add(r.value * r.len() as f64);
        }
        acc.total()
    }

    /// Partial sums over the symmetric windows `|k| ≤ n` for each `n` in `ns`
    /// (which must be increasing).
    pub fn symmetric_partial_sums(&self, ns: &[u64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(ns.len());
        let mut acc = Neumaier::default();
        let mut done = 0i64; // |k| < done already added
        let mut neg: Vec<&Run> = self.runs.iter().filter(|r| r.start < 0).collect();
        neg.reverse();
        let pos: Vec<&Run> = self.runs.iter().filter(|r| r.end >= 0).collect();
        for &n in ns {
            let n = n as i64;
            if n >= done {
                for r in &pos {
                    let s = r.start.max(0).max(done);
                    let e = r.end.min(n);
                    if s <= e {
                        acc.add(r.value * (e - s + 1) as f64);
                    }
                }
                for r in &neg {
                    // indices -e..=-s on the negative side with done ≤ s ≤ e ≤ n
                    let s = (-r.end.min(-1)).max(done.max(1));
                    let e = (-r.start).min(n);
                    if s <= e {
                        acc.add(r.value * (e - s + 1) as f64);
                    }
                }
                done = n + 1;
            }
            out.push(acc.total());
        }
        out
    }
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateForm {
    Zero,
    Tabulated(Table),
    /// `C λ₊^{-k}` for `k ≥ 0` and `C λ₋^{|k|}` for `k < 0`. `λ₊ = ∞`
    /// switches the forward side off (except `φ(0) = C`), `λ₋ = 0` the
    /// backward side.
    ExpTwoSided {
        c: f64,
        lambda_plus: f64,
        lambda_minus: f64,
    },
    /// `C max(|k|, 1)^{-γ}` on one side, zero on the other.
    PowerOneSided {
        c: f64,
        gamma: f64,
        side: Side,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    form: RateForm,
}

/// Result of summing a rate over all of `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summation {
    pub phi: f64,
    /// Upper bound on the part of the sum not computed term by term.
    pub tail_bound: f64,
    /// False for tables: nothing is known beyond the window.
    pub tail_observed: bool,
}

/// Number of explicit terms before the integral tail of a power law.
const POWER_TERMS: u64 = 10_000;

impl RateFunction {
    pub fn zero() -> Self {
        RateFunction { form: RateForm::Zero }
    }

    pub fn exp_two_sided(c: f64, lambda_plus: f64, lambda_minus: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("rate constant C={c} must be ≥ 0")));
        }
        if !(lambda_plus > 1.0) {
            return Err(Error::invalid(format!("λ₊={lambda_plus} must exceed 1")));
        }
        if !(0.0..1.0).contains(&lambda_minus) {
            return Err(Error::invalid(format!("λ₋={lambda_minus} must lie in [0, 1)")));
        }
        Ok(RateFunction {
            form: RateForm::ExpTwoSided {
                c,
                lambda_plus,
                lambda_minus,
            },
        })
    }

    /// One-sided geometric rate `C λ^{-|k|}` on `side` (λ > 1).
    pub fn exp_one_sided(c: f64, lambda: f64, side: Side) -> Result<Self> {
        if !(lambda > 1.0) {
            return Err(Error::invalid(format!("decay factor λ={lambda} must exceed 1")));
        }
        match side {
            Side::Backward => Self::exp_two_sided(c, f64::INFINITY, 1.0 / lambda),
            Side::Forward => Self::exp_two_sided(c, lambda, 0.0),
        }
    }

    pub fn power_one_sided(c: f64, gamma: f64, side: Side) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("rate constant C={c} must be ≥ 0")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("power γ={gamma} must be positive")));
        }
        Ok(RateFunction {
            form: RateForm::PowerOneSided { c, gamma, side },
        })
    }

    pub fn tabulated(table: Table) -> Self {
        RateFunction {
            form: RateForm::Tabulated(table),
        }
    }

    pub fn from_values(first: i64, values: &[f64]) -> Result<Self> {
        Ok(Self::tabulated(Table::from_values(first, values)?))
    }

    pub fn form(&self) -> &RateForm {
        &self.form
    }

    pub fn as_table(&self) -> Option<&Table> {
        match &self.form {
            RateForm::Tabulated(t) => Some(t),
            _ => None,
        }
    }

    pub fn value(&self, k: i64) -> f64 {
        match &self.form {
            RateForm::Zero => 0.0,
            RateForm::Tabulated(t) => t.value(k),
            RateForm::ExpTwoSided {
                c,
                lambda_plus,
                lambda_minus,
            } => {
                if k >= 0 {
                    if k == 0 {
                        *c
                    } else {
                        c * lambda_plus.powf(-(k as f64))
                    }
                } else {
                    c * lambda_minus.powf((-k) as f64)
                }
            }
            RateForm::PowerOneSided { c, gamma, side } => {
                let on_side = match side {
                    Side::Backward => k <= 0,
                    Side::Forward => k >= 0,
                };
                if on_side {
                    c * (k.unsigned_abs().max(1) as f64).powf(-gamma)
                } else {
                    0.0
                }
            }
        }
    }

    /// `Φ = Σ_k φ(k)` over all of `Z`.
    pub fn summate(&self) -> Result<Summation> {
        match &self.form {
            RateForm::Zero => Ok(Summation {
                phi: 0.0,
                tail_bound: 0.0,
                tail_observed: true,
            }),
            RateForm::Tabulated(t) => Ok(Summation {
                phi: t.sum(),
                tail_bound: 0.0,
                tail_observed: false,
            }),
            RateForm::ExpTwoSided {
                c,
                lambda_plus,
                lambda_minus,
            } => {
                let fwd = c / (1.0 - 1.0 / lambda_plus);
                let back = c * lambda_minus / (1.0 - lambda_minus);
                Ok(Summation {
                    phi: fwd + back,
                    tail_bound: 0.0,
                    tail_observed: true,
                })
            }
            RateForm::PowerOneSided { c, gamma, .. } => {
                if *gamma <= 1.0 {
                    return Err(Error::Diverges(format!(
                        "power rate with γ={gamma} ≤ 1 is not summable"
                    )));
                }
                let g = *gamma;
                let mut acc = Neumaier::default();
                for k in (1..=POWER_TERMS).rev() {
                    acc.add((k as f64).powf(-g));
                }
                let m = POWER_TERMS as f64;
                // Euler–Maclaurin remainder for Σ_{k>M} k^{-γ}
                let tail = m.powf(1.0 - g) / (g - 1.0) - 0.5 * m.powf(-g) + g / 12.0 * m.powf(-g - 1.0);
                Ok(Summation {
                    // φ(0) = C plus C ζ(γ)
                    phi: c * (1.0 + acc.total() + tail),
                    tail_bound: c * m.powf(1.0 - g) / (g - 1.0),
                    tail_observed: true,
                })
            }
        }
    }

    pub fn phi(&self) -> Result<f64> {
        Ok(self.summate()?.phi)
    }

    /// Smallest monotone majorant. Symbolic families are already monotone in
    /// `|k|` on each side and are returned unchanged.
    pub fn monotone(&self) -> RateFunction {
        match &self.form {
            RateForm::Tabulated(t) => RateFunction::tabulated(t.envelope()),
            _ => self.clone(),
        }
    }

    /// Reach on each side: the smallest `K ≥ 0` with `φ(±k) ≤ threshold` for
    /// all `k ≥ K`. `None` when the rate never drops below the threshold.
    pub fn reach(&self, threshold: f64) -> (Option<u64>, Option<u64>) {
        match &self.form {
            RateForm::Zero => (Some(0), Some(0)),
            RateForm::Tabulated(t) => {
                let last_neg = t
                    .runs
                    .iter()
                    .filter(|r| r.start < 0 && r.value > threshold)
                    .map(|r| r.start.unsigned_abs() + 1)
                    .max()
                    .unwrap_or(0);
                let last_pos = t
                    .runs
                    .iter()
                    .filter(|r| r.end >= 0 && r.value > threshold)
                    .map(|r| r.end as u64 + 1)
                    .max()
                    .unwrap_or(0);
                (Some(last_neg), Some(last_pos))
            }
            RateForm::ExpTwoSided {
                c,
                lambda_plus,
                lambda_minus,
            } => {
                let side = |decay: f64| -> Option<u64> {
                    if *c <= threshold {
                        Some(0)
                    } else if decay <= 0.0 || decay.is_infinite() {
                        Some(1)
                    } else {
                        Some(((c / threshold).ln() / decay.ln()).ceil().max(0.0) as u64 + 1)
                    }
                };
                (side(1.0 / lambda_minus), side(*lambda_plus))
            }
            RateForm::PowerOneSided { c, gamma, side } => {
                let k = if *c <= threshold {
                    0
                } else {
                    (c / threshold).powf(1.0 / gamma).ceil() as u64 + 1
                };
                match side {
                    Side::Backward => (Some(k), Some(1)),
                    Side::Forward => (Some(1), Some(k)),
                }
            }
        }
    }
}

impl fmt::Display for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            RateForm::Zero => write!(f, "zero"),
            RateForm::Tabulated(t) => write!(f, "tabulated[{}, {}]", t.lo, t.hi),
            RateForm::ExpTwoSided {
                c,
                lambda_plus,
                lambda_minus,
            } => write!(f, "exp_two_sided(C={c}, λ+={lambda_plus}, λ-={lambda_minus})"),
            RateForm::PowerOneSided { c, gamma, side } => write!(f, "power_one_sided(C={c}, γ={gamma}, {side})"),
        }
    }
}

/// Monotone envelope of a tabulated rate.
pub fn monotone_envelope(phi: &RateFunction) -> Result<RateFunction> {
    match phi.as_table() {
        Some(t) => Ok(RateFunction::tabulated(t.envelope())),
        None => Err(Error::usage("monotone_envelope expects a tabulated rate")),
    }
}

/// Position of the `k`-th block of the sparse example, `p_k = k(k+1)/2 - 1`
/// (so `p_1 = 0`, `p_2 = 2`, `p_3 = 5`).
pub fn sparse_position(k: u64) -> i64 {
    (k * (k + 1) / 2) as i64 - 1
}

/// The even, summable rate whose monotone envelope is not summable:
/// `φ(0) = 1` and `φ(±p_k) = k^{-2}` for `2 ≤ k ≤ max_block`, with `k - 1`
/// zeros before each block.
pub fn sparse_rate_example(max_block: u64) -> Result<RateFunction> {
    if max_block < 1 {
        return Err(Error::usage("sparse example needs at least one block"));
    }
    let reach = sparse_position(max_block);
    let mut runs = Vec::with_capacity(2 * max_block as usize);
    for k in (2..=max_block).rev() {
        let p = sparse_position(k);
        runs.push(Run {
            start: -p,
            end: -p,
            value: 1.0 / (k as f64 * k as f64),
        });
    }
    runs.push(Run {
        start: 0,
        end: 0,
        value: 1.0,
    });
    for k in 2..=max_block {
        let p = sparse_position(k);
        runs.push(Run {
            start: p,
            end: p,
            value: 1.0 / (k as f64 * k as f64),
        });
    }
    Ok(RateFunction::tabulated(Table::from_runs(-reach, reach, runs)?))
}

/// Family selected by [`fit_decay`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitFamily {
    /// `e(m) ≈ C λ^{-m}`.
    Exponential {
        c: f64,
        lambda: f64,
    },
    /// `e(m) ≈ C m^{-γ}`.
    Power {
        c: f64,
        gamma: f64,
    },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub side: Side,
    pub family: FitFamily,
    /// Residual sum of squares in `ln e` of the exponential model.
    pub residual_exp: f64,
    /// Residual sum of squares in `ln e` of the power model.
    pub residual_pow: f64,
    pub samples: usize,
}

impl RateFit {
    /// The fitted rate as a one-sided rate function. Fails when the fit does
    /// not decay.
    pub fn rate(&self) -> Result<RateFunction> {
        match self.family {
            FitFamily::Zero => Ok(RateFunction::zero()),
            FitFamily::Exponential { c, lambda } => RateFunction::exp_one_sided(c, lambda, self.side),
            FitFamily::Power { c, gamma } => RateFunction::power_one_sided(c, gamma, self.side),
        }
    }

    /// True when the fitted family is summable.
    pub fn is_summable(&self) -> bool {
        match self.family {
            FitFamily::Zero => true,
            FitFamily::Exponential { lambda, .. } => lambda > 1.0,
            FitFamily::Power { gamma, .. } => gamma > 1.0,
        }
    }
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, rss)`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (a, b, rss)
}

/// Minimum number of non-zero samples a fit needs.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Fits `C λ^{-m}` and `C m^{-γ}` to `(m, e)` samples (`m ≥ 1`) and keeps
/// the model with the smaller residual.
///
/// Samples below `1e-12` of the largest error are dropped as round-off.
/// When enough remain, only the tail `m ≥ max m / 4` is fitted so that
/// transients near the anchor do not bias power-law exponents.
pub fn fit_decay(side: Side, samples: &[(u64, f64)]) -> Result<RateFit> {
    let max_e = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    if max_e == 0.0 {
        return Ok(RateFit {
            side,
            family: FitFamily::Zero,
            residual_exp: 0.0,
            residual_pow: 0.0,
            samples: 0,
        });
    }
    let valid: Vec<(u64, f64)> = samples
        .iter()
        .copied()
        .filter(|(m, e)| *m >= 1 && *e > 1e-12 * max_e)
        .collect();
    if valid.len() < MIN_FIT_SAMPLES {
        return Err(Error::usage(format!(
            "rate fit needs at least {MIN_FIT_SAMPLES} non-zero errors, got {}",
            valid.len()
        )));
    }
    let m_max = valid.iter().map(|s| s.0).max().unwrap_or(1);
    let tail: Vec<(u64, f64)> = valid.iter().copied().filter(|s| s.0 * 4 >= m_max).collect();
    let used = if tail.len() >= MIN_FIT_SAMPLES { tail } else { valid };

    let ln_e: Vec<f64> = used.iter().map(|s| s.1.ln()).collect();
    let ms: Vec<f64> = used.iter().map(|s| s.0 as f64).collect();
    let ln_m: Vec<f64> = ms.iter().map(|m| m.ln()).collect();
    let (a_exp, b_exp, rss_exp) = least_squares(&ms, &ln_e);
    let (a_pow, b_pow, rss_pow) = least_squares(&ln_m, &ln_e);
    let family = if rss_exp <= rss_pow {
        FitFamily::Exponential {
            c: a_exp.exp(),
            lambda: (-b_exp).exp(),
        }
    } else {
        FitFamily::Power {
            c: a_pow.exp(),
            gamma: -b_pow,
        }
    };
    Ok(RateFit {
        side,
        family,
        residual_exp: rss_exp,
        residual_pow: rss_pow,
        samples: used.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_two_sided_sum() {
        let r = RateFunction::exp_two_sided(1.0, 2.0, 0.5).unwrap();
        let s = r.summate().unwrap();
        assert!((s.phi - 3.0).abs() < 1e-15);
        // brute-force oracle
        let brute: f64 = (-200..=200).map(|k| r.value(k)).sum();
        assert!((brute - 3.0).abs() < 1e-12);
        assert_eq!(RateFunction::zero().phi().unwrap(), 0.0);
    }

    #[test]
    fn one_sided_exponential_of_the_doubling_map() {
        let r = RateFunction::exp_one_sided(1.0, 2.0, Side::Backward).unwrap();
        assert_eq!(r.value(0), 1.0);
        assert_eq!(r.value(3), 0.0);
        assert_eq!(r.value(-3), 0.125);
        assert!((r.phi().unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn power_law_sum_and_divergence() {
        let r = RateFunction::power_one_sided(1.0, 2.0, Side::Backward).unwrap();
        let s = r.summate().unwrap();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((s.phi - (1.0 + zeta2)).abs() < 1e-12, "{}", s.phi);
        assert!(s.tail_bound > 0.0 && s.tail_bound < 1e-3);
        let r = RateFunction::power_one_sided(1.0, 1.0, Side::Backward).unwrap();
        assert!(matches!(r.summate(), Err(Error::Diverges(_))));
    }

    #[test]
    fn invalid_rates() {
        assert!(RateFunction::exp_two_sided(1.0, 0.5, 0.5).is_err());
        assert!(RateFunction::exp_two_sided(1.0, 2.0, 1.5).is_err());
        assert!(RateFunction::power_one_sided(-1.0, 2.0, Side::Forward).is_err());
        assert!(RateFunction::from_values(0, &[1.0, -0.5]).is_err());
    }

    #[test]
    fn envelope_of_monotone_table_is_unchanged() {
        let vals = [0.125, 0.25, 0.5, 1.0, 0.5, 0.25, 0.125];
        let r = RateFunction::from_values(-3, &vals).unwrap();
        let e = monotone_envelope(&r).unwrap();
        for k in -3..=3 {
            assert_eq!(e.value(k), r.value(k));
        }
    }

    #[test]
    fn envelope_extends_to_the_origin() {
        let e = monotone_envelope(&RateFunction::from_values(-3, &[0.5]).unwrap()).unwrap();
        assert_eq!(
            [e.value(-3), e.value(-2), e.value(-1), e.value(0)],
            [0.5, 0.5, 0.5, 0.0]
        );
        assert_eq!(e.as_table().unwrap().window(), (-3, 0));
        let e = monotone_envelope(&RateFunction::from_values(2, &[0.25, 0.5]).unwrap()).unwrap();
        assert_eq!(
            [e.value(-1), e.value(0), e.value(1), e.value(2), e.value(3), e.value(4)],
            [0.0, 0.5, 0.5, 0.5, 0.5, 0.0]
        );
        assert_eq!(e.phi().unwrap(), 2.0);
    }

    #[test]
    fn envelope_formula_on_small_table() {
        let r = RateFunction::from_values(-3, &[0.3, 0.0, 0.1, 0.0, 0.2, 0.0, 0.4]).unwrap();
        let e = monotone_envelope(&r).unwrap();
        // k<0: sup over i ≤ k; k ≥ 0: sup over i ≥ k
        let expect = [0.3, 0.3, 0.3, 0.4, 0.4, 0.4, 0.4];
        for (j, want) in expect.iter().enumerate() {
            assert_eq!(e.value(j as i64 - 3), *want, "k={}", j as i64 - 3);
        }
        assert!(monotone_envelope(&RateFunction::zero()).is_err());
    }

    #[test]
    fn sparse_example_layout() {
        let r = sparse_rate_example(4).unwrap();
        assert_eq!(r.value(0), 1.0);
        assert_eq!(r.value(1), 0.0);
        assert_eq!(r.value(2), 0.25);
        assert_eq!(r.value(-2), 0.25);
        assert_eq!(r.value(3), 0.0);
        assert_eq!(r.value(4), 0.0);
        assert_eq!(r.value(5), 1.0 / 9.0);
        assert_eq!(r.value(-5), 1.0 / 9.0);
        assert_eq!(r.value(9), 1.0 / 16.0);
        assert_eq!(r.as_table().unwrap().window(), (-9, 9));
    }

    #[test]
    fn sparse_envelope_partial_sums_follow_harmonic_numbers() {
        let m = 60;
        let r = sparse_rate_example(m).unwrap();
        let e = monotone_envelope(&r).unwrap();
        let t = e.as_table().unwrap();
        let ns: Vec<u64> = (2..=m).map(|j| sparse_position(j) as u64).collect();
        let sums = t.symmetric_partial_sums(&ns);
        for (j, s) in (2..=m).zip(&sums) {
            // brute-force oracle over the envelope values
            let p = sparse_position(j);
            let brute: f64 = (-p..=p).map(|k| e.value(k)).sum();
            let harmonic: f64 = (2..=j).map(|i| 1.0 / i as f64).sum();
            assert!((s - brute).abs() < 1e-12);
            assert!((s - (1.0 + 2.0 * harmonic)).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_selects_exponential_for_geometric_data() {
        let samples: Vec<(u64, f64)> = (1..=40).map(|m| (m, 0.1 * 2f64.powi(-(m as i32)))).collect();
        let fit = fit_decay(Side::Backward, &samples).unwrap();
        match fit.family {
            FitFamily::Exponential { c, lambda } => {
                assert!((lambda - 2.0).abs() < 0.02);
                assert!((c - 0.1).abs() < 1e-6);
            }
            other => panic!("expected exponential, got {other:?}"),
        }
    }

    #[test]
    fn fit_selects_power_for_power_data() {
        let samples: Vec<(u64, f64)> = (1..=4096).map(|m| (m, (m as f64).powi(-2))).collect();
        let fit = fit_decay(Side::Backward, &samples).unwrap();
        match fit.family {
            FitFamily::Power { gamma, .. } => assert!((gamma - 2.0).abs() < 0.04),
            other => panic!("expected power, got {other:?}"),
        }
    }

    #[test]
    fn fit_of_zero_errors_is_zero() {
        let fit = fit_decay(Side::Forward, &[(1, 0.0), (2, 0.0)]).unwrap();
        assert_eq!(fit.family, FitFamily::Zero);
        assert_eq!(fit.rate().unwrap(), RateFunction::zero());
    }

    #[test]
    fn reach_of_exponential() {
        let r = RateFunction::exp_one_sided(1.0, 2.0, Side::Backward).unwrap();
        let (neg, pos) = r.reach(1e-15);
        assert!(neg.unwrap() >= 50 && neg.unwrap() <= 52);
        assert_eq!(pos, Some(1));
    }
}
