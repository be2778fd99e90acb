//! Gluing a backward semi-trajectory to a forward one.
//!
//! Given `(x_k)_{k ≤ 0}` and `(y_k)_{k ≥ 0}` the gluing trajectory `z`
//! follows `x` in the past and `y` in the future. For expanding interval maps
//! `z` coincides with `y` from time 0 on and is pulled back along the
//! itinerary of `x`. For hyperbolic linear maps `z_0` is the intersection of
//! the unstable line through `x_0` with the stable line through `y_0`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg;
use crate::maps::{Map, NeutralMap, PiecewiseBijectiveMap};
use crate::rate::{fit_decay, RateFit, RateFunction, Side, MIN_FIT_SAMPLES};
use crate::space::{dist_unchecked, verify_trajectory, State, TrajectoryWindow};
use crate::DEFECT_TOL;

/// What to do when the branch of `x` cannot invert the current point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GluePolicy {
    /// Fail with [`Error::GluingFailure`].
    #[default]
    Strict,
    /// Fall back to the preimage, over all branches, closest to `x`.
    NearestPreimage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GluingMode {
    /// `ρ(x_k, z_k) ≤ φ(k) ρ(x_0, y_0)` for `k < 0`, same for `y` and `k ≥ 0`.
    Strong,
    /// `ρ(x_k, z_k) ≤ φ(k)` without the anchor factor.
    Weak,
}

/// Radius within which the toral construction is attempted.
pub const TORUS_LOCAL_RADIUS: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct GlueOptions {
    pub policy: GluePolicy,
    /// Rate used for the verdicts. Defaults to [`theoretical_rate`].
    pub rate: Option<RateFunction>,
    /// Only anchors within this distance are glued on the torus.
    pub torus_radius: f64,
}

impl Default for GlueOptions {
    fn default() -> Self {
        GlueOptions {
            policy: GluePolicy::Strict,
            rate: None,
            torus_radius: TORUS_LOCAL_RADIUS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GluingReport {
    z: TrajectoryWindow,
    errors: Vec<f64>,
    anchor: f64,
    rate: Option<RateFunction>,
    strong_ok: bool,
    weak_ok: bool,
    defect: f64,
}

impl GluingReport {
    pub fn z(&self) -> &TrajectoryWindow {
        &self.z
    }

    pub fn into_z(self) -> TrajectoryWindow {
        self.z
    }

    /// `ρ(x_0, y_0)`.
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Errors in window order: `ρ(x_k, z_k)` for `k < 0`, `ρ(y_k, z_k)` for
    /// `k ≥ 0`.
    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn error(&self, k: i64) -> Option<f64> {
        if self.z.contains_index(k) {
            Some(self.errors[(k - self.z.first_index()) as usize])
        } else {
            None
        }
    }

    pub fn back_errors(&self) -> &[f64] {
        &self.errors[..self.z.neg_len()]
    }

    pub fn fwd_errors(&self) -> &[f64] {
        &self.errors[self.z.neg_len()..]
    }

    /// Rate the verdicts were computed against, if any.
    pub fn rate(&self) -> Option<&RateFunction> {
        self.rate.as_ref()
    }

    pub fn strong_ok(&self) -> bool {
        self.strong_ok
    }

    pub fn weak_ok(&self) -> bool {
        self.weak_ok
    }

    /// Largest one-step defect of `z`.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn indexed_errors(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let base = self.z.first_index();
        self.errors.iter().enumerate().map(move |(j, e)| (base + j as i64, *e))
    }

    /// Writes `k,error,bound_strong,bound_weak`. Bound columns are empty
    /// when no rate is attached.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,error,bound_strong,bound_weak")?;
        for (k, e) in self.indexed_errors() {
            match &self.rate {
                Some(r) => {
                    let phi = r.value(k);
                    writeln!(w, "{k},{e},{},{phi}", phi * self.anchor)?
                }
                None => writeln!(w, "{k},{e},,")?,
            }
        }
        Ok(())
    }
}

/// Gluing with default options.
pub fn glue(map: &Map, x_back: &TrajectoryWindow, y_fwd: &TrajectoryWindow) -> Result<GluingReport> {
    glue_with(map, x_back, y_fwd, &GlueOptions::default())
}

/// Builds the gluing trajectory and measures it.
///
/// `x_back` must end at index 0 (`pos_len == 1`) and `y_fwd` must start
/// there (`neg_len == 0`).
pub fn glue_with(
    map: &Map,
    x_back: &TrajectoryWindow,
    y_fwd: &TrajectoryWindow,
    opts: &GlueOptions,
) -> Result<GluingReport> {
    let z = glue_points(map, x_back, y_fwd, opts.policy, opts.torus_radius)?;
    let anchor = dist_unchecked(x_back.at(0), y_fwd.at(0));
    let mut errors = Vec::with_capacity(z.len());
    for (k, zk) in z.indexed() {
        let reference = if k < 0 { x_back.at(k) } else { y_fwd.at(k) };
        errors.push(dist_unchecked(reference, zk));
    }
    let defect = if z.len() >= 2 {
        verify_trajectory(map, &z, DEFECT_TOL)?
    } else {
        0.0
    };
    let rate = match &opts.rate {
        Some(r) => Some(r.clone()),
        None => theoretical_rate(map),
    };
    let mut report = GluingReport {
        z,
        errors,
        anchor,
        rate,
        strong_ok: false,
        weak_ok: false,
        defect,
    };
    if let Some(r) = report.rate.clone() {
        report.strong_ok = verify_gluing(&report, &r, GluingMode::Strong);
        report.weak_ok = verify_gluing(&report, &r, GluingMode::Weak);
    }
    Ok(report)
}

/// Glues the past of `x` to the future of `y` at index `t`: the result
/// follows `x` on indices `≤ t` and `y` from `t` on, re-indexed so that `t`
/// becomes 0.
pub fn glue_at(
    map: &Map,
    x: &TrajectoryWindow,
    y: &TrajectoryWindow,
    t: i64,
    opts: &GlueOptions,
) -> Result<GluingReport> {
    let xs = x.shift(t)?;
    let ys = y.shift(t)?;
    let x_back = TrajectoryWindow::new(xs.points()[..=xs.neg_len()].to_vec(), xs.neg_len())?;
    let y_fwd = TrajectoryWindow::new(ys.points()[ys.neg_len()..].to_vec(), 0)?;
    glue_with(map, &x_back, &y_fwd, opts)
}

fn check_inputs(map: &Map, x_back: &TrajectoryWindow, y_fwd: &TrajectoryWindow) -> Result<()> {
    if x_back.is_empty() || x_back.pos_len() != 1 {
        return Err(Error::usage("backward window must end at index 0"));
    }
    if y_fwd.is_empty() || y_fwd.neg_len() != 0 {
        return Err(Error::usage("forward window must start at index 0"));
    }
    let space = map.space();
    if x_back.space() != Some(space) || y_fwd.space() != Some(space) {
        return Err(Error::usage(format!("gluing windows must live on {space}")));
    }
    Ok(())
}

/// The gluing trajectory alone, without errors or verdicts.
pub(crate) fn glue_points(
    map: &Map,
    x_back: &TrajectoryWindow,
    y_fwd: &TrajectoryWindow,
    policy: GluePolicy,
    torus_radius: f64,
) -> Result<TrajectoryWindow> {
    check_inputs(map, x_back, y_fwd)?;
    let neg = x_back.neg_len();
    let pos = y_fwd.pos_len();
    match map {
        Map::PiecewiseLinear(_) | Map::Neutral(_) => {
            let mut back = Vec::with_capacity(neg);
            let mut cur = *y_fwd.at(0);
            for k in (x_back.first_index()..0).rev() {
                let v = x_back.at(k);
                cur = match map.inverse_branch(v, &cur) {
                    Ok(s) => s,
                    Err(e) => match policy {
                        GluePolicy::Strict => {
                            return Err(Error::GluingFailure {
                                index: k,
                                reason: e.to_string(),
                            })
                        }
                        GluePolicy::NearestPreimage => {
                            nearest_preimage(map, v, &cur).ok_or_else(|| Error::GluingFailure {
                                index: k,
                                reason: format!("no branch covers {:?}", cur.coords()),
                            })?
                        }
                    },
                };
                back.push(cur);
            }
            back.reverse();
            back.extend_from_slice(y_fwd.points());
            TrajectoryWindow::new(back, neg)
        }
        Map::Affine(a) => {
            let x0 = x_back.at(0).coords();
            let (ax, _) = a.eigen_coordinates([x0[0], x0[1]]);
            let y0 = y_fwd.at(0).coords();
            let (ay, _) = a.eigen_coordinates([y0[0], y0[1]]);
            let v = linalg::add([x0[0], x0[1]], linalg::scale(ay - ax, a.e1()));
            let z0 = State::plane(v[0], v[1]);
            Ok(orbit_through(map, z0, neg, pos))
        }
        Map::Torus(t) => {
            let x0 = *x_back.at(0);
            let y0 = *y_fwd.at(0);
            let anchor = dist_unchecked(&x0, &y0);
            if anchor > torus_radius {
                return Err(Error::GluingFailure {
                    index: 0,
                    reason: format!("anchor distance {anchor} exceeds the local radius {torus_radius}"),
                });
            }
            let (xr, yr) = (x0.coords(), y0.coords());
            let mut d = [f64::INFINITY, f64::INFINITY];
            for sx in [-1.0, 0.0, 1.0] {
                for sy in [-1.0, 0.0, 1.0] {
                    let c = [yr[0] + sx - xr[0], yr[1] + sy - xr[1]];
                    if linalg::norm(c) < linalg::norm(d) {
                        d = c;
                    }
                }
            }
            let (a, _) = t.eigen_coordinates(d);
            let v = linalg::add([xr[0], xr[1]], linalg::scale(a, t.e1()));
            Ok(orbit_through(map, State::torus(v[0], v[1]), neg, pos))
        }
    }
}

/// Orbit of an invertible map through `z0` on `[-neg, pos - 1]`.
fn orbit_through(map: &Map, z0: State, neg: usize, pos: usize) -> TrajectoryWindow {
    let inverse = |s: &State| match map {
        Map::Affine(a) => a.inverse(s),
        Map::Torus(t) => t.inverse(s),
        _ => unreachable!("orbit_through needs an invertible map"),
    };
    let mut pts = Vec::with_capacity(neg + pos);
    let mut cur = z0;
    for _ in 0..neg {
        cur = inverse(&cur);
        pts.push(cur);
    }
    pts.reverse();
    cur = z0;
    pts.push(cur);
    for _ in 1..pos {
        cur = map.forward(&cur);
        pts.push(cur);
    }
    TrajectoryWindow::new(pts, neg).expect("orbit points share one space")
}

fn nearest_preimage(map: &Map, v: &State, y: &State) -> Option<State> {
    (0..map.branch_count())
        .filter_map(|b| map.inverse_in_branch(b, y).ok())
        .min_by(|p, q| dist_unchecked(p, v).total_cmp(&dist_unchecked(q, v)))
}

/// Checks the gluing inequalities against `rate` with an absolute slack of
/// `1e-12`.
pub fn verify_gluing(report: &GluingReport, rate: &RateFunction, mode: GluingMode) -> bool {
    let scale = match mode {
        GluingMode::Strong => report.anchor,
        GluingMode::Weak => 1.0,
    };
    report.indexed_errors().all(|(k, e)| e <= rate.value(k) * scale + 1e-12)
}

/// Fits exponential and power decay to the errors of one side. The
/// backward side is used when it has enough non-zero errors.
pub fn fit_rate(report: &GluingReport) -> Result<RateFit> {
    let back: Vec<(u64, f64)> = report
        .indexed_errors()
        .filter(|(k, _)| *k < 0)
        .map(|(k, e)| (k.unsigned_abs(), e))
        .collect();
    let usable = |s: &[(u64, f64)]| s.iter().filter(|p| p.1 > 0.0).count();
    if usable(&back) >= MIN_FIT_SAMPLES {
        return fit_decay(Side::Backward, &back);
    }
    let fwd: Vec<(u64, f64)> = report
        .indexed_errors()
        .filter(|(k, _)| *k > 0)
        .map(|(k, e)| (k as u64, e))
        .collect();
    if usable(&fwd) >= MIN_FIT_SAMPLES || usable(&back) == 0 {
        return fit_decay(Side::Forward, &fwd);
    }
    fit_decay(Side::Backward, &back)
}

/// Safety factor applied to the measured cylinder sizes of the neutral map.
pub const NEUTRAL_RATE_MARGIN: f64 = 2.0;

/// Number of backward steps used to measure neutral cylinder sizes.
const NEUTRAL_RATE_STEPS: usize = 2048;

/// A gluing rate known to hold for `map`, if any.
///
/// * full-branch linear maps with both slopes above 1: `φ(0) = 1`,
///   `φ(-k) = min(a, b)^{-k}`, zero in the future;
/// * hyperbolic linear maps: `C (1/λ₂)^{-k}` forward and `C (1/λ₁)^{|k|}`
///   backward with `C` the eigenbasis condition number (local on the torus);
/// * neutral maps with `α < 1`: weak power rate `C |k|^{-1/α}` in the past,
///   `C` measured from the cylinders at the neutral fixed points.
pub fn theoretical_rate(map: &Map) -> Option<RateFunction> {
    match map {
        Map::PiecewiseLinear(m) => {
            let slope = m.a().min(m.b());
            if m.is_full_branch() && slope > 1.0 {
                RateFunction::exp_one_sided(1.0, slope, Side::Backward).ok()
            } else {
                None
            }
        }
        Map::Affine(a) => RateFunction::exp_two_sided(a.c_cond(), 1.0 / a.lambda2(), 1.0 / a.lambda1()).ok(),
        Map::Torus(t) => RateFunction::exp_two_sided(t.c_cond(), 1.0 / t.lambda2(), 1.0 / t.lambda1()).ok(),
        Map::Neutral(n) => neutral_weak_rate(n),
    }
}

fn neutral_weak_rate(n: &NeutralMap) -> Option<RateFunction> {
    let gamma = 1.0 / n.alpha();
    if gamma <= 1.0 {
        return None;
    }
    let mut c: f64 = 1.0;
    for (branch, start, end) in [(0usize, 1.0, 0.0), (1usize, 0.0, 1.0)] {
        let mut cur = State::interval(start);
        for step in 1..=NEUTRAL_RATE_STEPS {
            cur = n.inverse_in_branch(branch, &cur).ok()?;
            let size = (cur.x() - end).abs();
            c = c.max((step as f64).powf(gamma) * size);
        }
    }
    RateFunction::power_one_sided(NEUTRAL_RATE_MARGIN * c, gamma, Side::Backward).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{HyperbolicAffine2D, PiecewiseLinearMap, TorusLinearMap};
    use crate::rate::FitFamily;

    fn doubling() -> Map {
        PiecewiseLinearMap::doubling().into()
    }

    fn interval_window(xs: &[f64], neg: usize) -> TrajectoryWindow {
        TrajectoryWindow::new(xs.iter().map(|&x| State::interval(x)).collect(), neg).unwrap()
    }

    /// Backward orbit of `x0` under the doubling map along the left branch.
    fn left_backward(x0: f64, len: usize) -> TrajectoryWindow {
        let mut pts: Vec<f64> = (0..=len).map(|k| x0 / 2f64.powi(k as i32)).collect();
        pts.reverse();
        interval_window(&pts, len)
    }

    #[test]
    fn doubling_errors_halve_backward() {
        let map = doubling();
        let x = left_backward(0.3, 40);
        let y = TrajectoryWindow::forward_orbit(&map, State::interval(0.4), 30);
        let r = glue(&map, &x, &y).unwrap();
        assert!((r.anchor() - 0.1).abs() < 1e-15);
        for k in -40..0 {
            let want = 0.1 * 2f64.powi(k as i32);
            assert!((r.error(k).unwrap() - want).abs() < 1e-15, "k={k}");
        }
        assert!(r.fwd_errors().iter().all(|&e| e == 0.0));
        assert!(r.strong_ok() && r.weak_ok());
        assert!(r.defect() < 1e-12);
        let fit = fit_rate(&r).unwrap();
        match fit.family {
            FitFamily::Exponential { lambda, .. } => assert!((lambda - 2.0).abs() < 0.05),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gluing_a_trajectory_to_itself_is_identity() {
        let map = doubling();
        let x = left_backward(0.3, 10);
        let y = TrajectoryWindow::forward_orbit(&map, State::interval(0.3), 10);
        let r = glue(&map, &x, &y).unwrap();
        assert!(r.errors().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn rejects_malformed_windows() {
        let map = doubling();
        let y = TrajectoryWindow::forward_orbit(&map, State::interval(0.4), 5);
        assert!(matches!(glue(&map, &y, &y), Err(Error::Usage(_))));
        let plane = TrajectoryWindow::new(vec![State::plane(0.0, 0.0)], 0).unwrap();
        assert!(matches!(glue(&map, &plane, &y), Err(Error::Usage(_))));
    }

    #[test]
    fn non_full_map_strict_and_nearest() {
        let map: Map = PiecewiseLinearMap::new(1.5, 1.5, 0.5).unwrap().into();
        let x = interval_window(&[0.0; 6], 5);
        let y = interval_window(&[1.0; 6], 0);
        let strict = glue(&map, &x, &y);
        assert!(matches!(strict, Err(Error::GluingFailure { .. })), "{strict:?}");
        let opts = GlueOptions {
            policy: GluePolicy::NearestPreimage,
            ..GlueOptions::default()
        };
        let r = glue_with(&map, &x, &y, &opts).unwrap();
        assert!(r.back_errors().iter().all(|&e| (e - 1.0).abs() < 1e-12));
        assert!(r.rate().is_none());
    }

    #[test]
    fn affine_gluing_example() {
        let a = HyperbolicAffine2D::new(2.0, 0.5, [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]).unwrap();
        let map: Map = a.into();
        // x on the unstable axis, y on the stable axis
        let mut xs = Vec::new();
        for k in (0..=16).rev() {
            xs.push(State::plane(1.0 / 2f64.powi(k), 0.0));
        }
        let x = TrajectoryWindow::new(xs, 16).unwrap();
        let y = TrajectoryWindow::forward_orbit(&map, State::plane(0.0, 1.0), 17);
        let r = glue(&map, &x, &y).unwrap();
        let z0 = r.z().at(0).coords();
        assert!(z0[0].abs() < 1e-15 && z0[1].abs() < 1e-15);
        assert!(r.strong_ok(), "{:?}", r.errors());
        assert!(r.defect() < 1e-12);
    }

    #[test]
    fn torus_gluing_is_local() {
        let map: Map = TorusLinearMap::cat().into();
        let x = TrajectoryWindow::new(vec![State::torus(0.1, 0.1)], 0).unwrap();
        let x = TrajectoryWindow::new(vec![map.inverse_branch(x.at(0), x.at(0)).unwrap(), *x.at(0)], 1).unwrap();
        let near = TrajectoryWindow::forward_orbit(&map, State::torus(0.12, 0.11), 8);
        let r = glue(&map, &x, &near).unwrap();
        assert!(r.strong_ok(), "{:?}", r.errors());
        let far = TrajectoryWindow::forward_orbit(&map, State::torus(0.6, 0.6), 8);
        assert!(matches!(glue(&map, &x, &far), Err(Error::GluingFailure { .. })));
    }

    #[test]
    fn glue_at_matches_manual_truncation() {
        let map = doubling();
        let x = TrajectoryWindow::new(left_backward(0.3, 12).into_points(), 6).unwrap();
        let y = TrajectoryWindow::new(
            TrajectoryWindow::forward_orbit(&map, State::interval(0.2), 13).into_points(),
            6,
        )
        .unwrap();
        let r = glue_at(&map, &x, &y, 2, &GlueOptions::default()).unwrap();
        let x_back = TrajectoryWindow::new(x.points()[..=8].to_vec(), 8).unwrap();
        let y_fwd = TrajectoryWindow::new(y.points()[8..].to_vec(), 0).unwrap();
        let manual = glue(&map, &x_back, &y_fwd).unwrap();
        assert_eq!(r.z(), manual.z());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let map = doubling();
        let x = left_backward(0.3, 3);
        let y = TrajectoryWindow::forward_orbit(&map, State::interval(0.4), 2);
        let r = glue(&map, &x, &y).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,error,bound_strong,bound_weak");
        assert_eq!(lines.len(), 1 + 5);
        assert!(lines[1].starts_with("-3,"));
    }

    #[test]
    fn neutral_rate_exists_only_below_alpha_one() {
        let n: Map = NeutralMap::new(0.5, 0.5).unwrap().into();
        let r = theoretical_rate(&n).unwrap();
        assert!(r.phi().unwrap().is_finite());
        let n: Map = NeutralMap::new(1.0, 0.5).unwrap().into();
        assert!(theoretical_rate(&n).is_none());
    }
}
