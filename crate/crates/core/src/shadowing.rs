//! Shadowing of pseudo-trajectories by merging their true segments.
//!
//! A pseudo-trajectory splits at its perturbation moments into true
//! segments. Parallel gluing merges neighbouring segments level by level: at
//! each level the moments at even positions of the sorted surviving list are
//! glued away, the others wait. Consecutive gluing instead grows one block
//! outward from the segment containing index 0.

use std::io::Write;

use rayon::prelude::*;

use crate::averages::{final_half_max, running_means};
use crate::error::{Error, Result};
use crate::gluing::{glue_points, theoretical_rate, GluePolicy, TORUS_LOCAL_RADIUS};
use crate::maps::{Map, PiecewiseBijectiveMap};
use crate::perturbation::{upper_density, PerturbationKind, PseudoTrajectory};
use crate::rate::RateFunction;
use crate::space::{dist_unchecked, verify_trajectory, State, TrajectoryWindow};
use crate::DEFECT_TOL;

/// Rate values below this are treated as zero when measuring reach.
const REACH_THRESHOLD: f64 = 1e-15;

/// Inclusive index range of a true segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: i64,
    pub end: i64,
}

impl Segment {
    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// Splits the window at the perturbation moments. Moment `t` ends a segment
/// because its gap sits between `t` and `t + 1`.
pub fn extract_segments(p: &PseudoTrajectory) -> Vec<Segment> {
    let w = p.window();
    let mut out = Vec::with_capacity(p.moments().len() + 1);
    let mut start = w.first_index();
    for &t in p.moments() {
        out.push(Segment { start, end: t });
        start = t + 1;
    }
    out.push(Segment {
        start,
        end: w.last_index(),
    });
    out
}

/// One level of the merge.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeLevel {
    pub level: usize,
    /// Moments still open when the level starts.
    pub moments: Vec<i64>,
    /// Their gaps, recomputed from the current points.
    pub gaps: Vec<f64>,
    /// Smallest distance between consecutive open moments.
    pub tau_min: Option<u64>,
    /// Moments glued away during this level.
    pub resolved: Vec<i64>,
}

/// An internal gluing whose anchor exceeded the admissible distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorViolation {
    pub level: usize,
    pub moment: i64,
    pub anchor: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeMethod {
    Parallel,
    Consecutive,
}

/// Per-level gap bounds `γ̄^{(n)}` and their closing value.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRecursion {
    /// `γ̄^{(0)}, ..., γ̄^{(L)}` for `L` levels.
    pub bounds: Vec<f64>,
    pub final_bound: f64,
    /// `D e^Φ`.
    pub closing_bound: f64,
    /// Every observed gap is below the bound of its level.
    pub observed_ok: bool,
    pub final_ok: bool,
}

/// A single inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

impl BoundCheck {
    fn new(value: f64, bound: f64) -> Self {
        BoundCheck {
            value,
            bound,
            ok: value <= bound * (1.0 + 1e-12) + 1e-15,
        }
    }
}

/// Bound verdicts attached to a report when a summable rate is known.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundChecks {
    pub phi: f64,
    /// `D`: amplitude cap used for the checks.
    pub amplitude_cap: f64,
    pub max_gap: f64,
    /// Upper-density estimate of the moments.
    pub density: f64,
    /// `Q_limsup ≤ Φ D ε` (bounded space) or `Φ D e^Φ ε`.
    pub average: BoundCheck,
    /// `uniform_err ≤ Φ · max gap`.
    pub uniform: BoundCheck,
    /// Measured `uniform_err / max gap`.
    pub k_emp: f64,
    pub gap: Option<GapRecursion>,
}

#[derive(Debug, Clone)]
pub struct ShadowOptions {
    /// Gluing rate. Defaults to the map's known rate.
    pub rate: Option<RateFunction>,
    pub policy: GluePolicy,
    pub torus_radius: f64,
    /// Amplitude cap `D`. Defaults to the diameter of the space, or the
    /// largest gap on unbounded spaces.
    pub amplitude_cap: Option<f64>,
    /// Run the gluings of one level on the rayon pool.
    pub parallel: bool,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        ShadowOptions {
            rate: None,
            policy: GluePolicy::Strict,
            torus_radius: TORUS_LOCAL_RADIUS,
            amplitude_cap: None,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShadowingReport {
    pub method: MergeMethod,
    /// The shadowing trajectory.
    pub z: TrajectoryWindow,
    /// `ρ(z_t, y_t)` in window order.
    pub errors: Vec<f64>,
    pub uniform_err: f64,
    pub qn: Vec<f64>,
    pub q_limsup: f64,
    pub limit_err: f64,
    pub levels: Vec<MergeLevel>,
    /// `(moment, level)` for every glued moment.
    pub consumed: Vec<(i64, usize)>,
    /// Some gluing reached past the window edge.
    pub truncated: bool,
    pub anchor_violations: Vec<AnchorViolation>,
    /// `φ(1) ≥ 1` or `φ(-1) ≥ 1`: consecutive gluing is not justified.
    pub consecutive_flag: bool,
    pub rate: Option<RateFunction>,
    pub checks: Option<BoundChecks>,
    pub defect: f64,
}

impl ShadowingReport {
    /// Writes `t,y,z,err` (or `t,y0,y1,z0,z1,err` in two dimensions).
    pub fn write_csv<W: Write>(&self, y: &TrajectoryWindow, mut w: W) -> Result<()> {
        let two_d = self.z.space().map(|s| s.dim() == 2).unwrap_or(false);
        if two_d {
            writeln!(w, "t,y0,y1,z0,z1,err")?;
        } else {
            writeln!(w, "t,y,z,err")?;
        }
        for ((t, zt), e) in self.z.indexed().zip(&self.errors) {
            let yt = y.at(t);
            if two_d {
                writeln!(w, "{t},{},{},{},{},{e}", yt.x(), yt.y(), zt.x(), zt.y())?;
            } else {
                writeln!(w, "{t},{},{},{e}", yt.x(), zt.x())?;
            }
        }
        Ok(())
    }

    /// Writes `level,moment_index,gap,tau_min,gap_bound`, one row per open
    /// moment and level.
    pub fn write_levels_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "level,moment_index,gap,tau_min,gap_bound")?;
        let bounds = self.checks.as_ref().and_then(|c| c.gap.as_ref()).map(|g| &g.bounds);
        for lv in &self.levels {
            let tau = lv.tau_min.map(|t| t.to_string()).unwrap_or_default();
            let bound = bounds
                .and_then(|b| b.get(lv.level))
                .map(|b| b.to_string())
                .unwrap_or_default();
            for (m, g) in lv.moments.iter().zip(&lv.gaps) {
                writeln!(w, "{},{m},{g},{tau},{bound}", lv.level)?;
            }
        }
        Ok(())
    }
}

fn check_windows(z: &TrajectoryWindow, y: &TrajectoryWindow) -> Result<()> {
    if z.first_index() != y.first_index() || z.last_index() != y.last_index() || z.space() != y.space() {
        return Err(Error::usage(
            "shadowing windows must cover the same indices of one space",
        ));
    }
    Ok(())
}

fn pointwise(z: &TrajectoryWindow, y: &TrajectoryWindow) -> Vec<f64> {
    z.points()
        .iter()
        .zip(y.points())
        .map(|(a, b)| dist_unchecked(a, b))
        .collect()
}

/// `sup_t ρ(z_t, y_t)`.
pub fn uniform_error(z: &TrajectoryWindow, y: &TrajectoryWindow) -> Result<f64> {
    check_windows(z, y)?;
    Ok(pointwise(z, y).into_iter().fold(0.0, f64::max))
}

/// Running means `Q_n` and their limsup estimate.
pub fn average_error(z: &TrajectoryWindow, y: &TrajectoryWindow) -> Result<(Vec<f64>, f64)> {
    check_windows(z, y)?;
    let q = running_means(&pointwise(z, y), z.neg_len());
    let lim = final_half_max(&q);
    Ok((q, lim))
}

/// Largest pointwise error over the outer half of each side of the window.
pub fn limit_error(z: &TrajectoryWindow, y: &TrajectoryWindow) -> Result<f64> {
    check_windows(z, y)?;
    Ok(limit_of(&pointwise(z, y), z.neg_len()))
}

fn limit_of(errors: &[f64], neg: usize) -> f64 {
    let pos = errors.len() - neg;
    let fwd = errors[neg + pos / 2..].iter().copied().fold(0.0, f64::max);
    let back = errors[..neg / 2].iter().copied().fold(0.0, f64::max);
    fwd.max(back)
}

/// Per-level gap bounds `γ̄^{(n+1)} = γ̄^{(n)} (1 + φ̃(-τ^{(n)}) + φ̃(τ^{(n)}))`
/// from `γ̄^{(0)} = d`, using the monotone envelope `φ̃` of `rate`.
pub fn gap_recursion_bound(rate: &RateFunction, levels: &[MergeLevel], d: f64) -> Result<GapRecursion> {
    let env = rate.monotone();
    let phi = env.phi()?;
    let mut bounds = Vec::with_capacity(levels.len() + 1);
    let mut cur = d;
    bounds.push(cur);
    for lv in levels {
        if let Some(tau) = lv.tau_min {
            let tau = tau as i64;
            cur *= 1.0 + env.value(-tau) + env.value(tau);
        }
        bounds.push(cur);
    }
    let observed_ok = levels.iter().all(|lv| {
        let b = bounds[lv.level.min(bounds.len() - 1)];
        lv.gaps.iter().all(|&g| g <= b * (1.0 + 1e-12) + 1e-15)
    });
    let closing_bound = d * phi.exp();
    Ok(GapRecursion {
        final_ok: cur <= closing_bound * (1.0 + 1e-12),
        final_bound: cur,
        closing_bound,
        observed_ok,
        bounds,
    })
}

/// Shared state of a merge run.
struct Merger<'a> {
    map: &'a Map,
    opts: &'a ShadowOptions,
    rate: Option<RateFunction>,
    anchor_limit: f64,
    reach: (Option<u64>, Option<u64>),
    first: i64,
    last: i64,
    cur: Vec<State>,
    truncated: bool,
    violations: Vec<AnchorViolation>,
}

struct Job {
    moment: i64,
    left: Segment,
    right: Segment,
}

impl<'a> Merger<'a> {
    fn new(map: &'a Map, p: &PseudoTrajectory, opts: &'a ShadowOptions) -> Result<Self> {
        let w = p.window();
        if w.space() != Some(map.space()) {
            return Err(Error::usage(format!(
                "pseudo-trajectory does not live on {}",
                map.space()
            )));
        }
        let rate = opts.rate.clone().or_else(|| theoretical_rate(map));
        let d = amplitude_cap(map, p, opts);
        let mut anchor_limit = match rate.as_ref().and_then(|r| r.phi().ok()) {
            Some(phi) => d * phi.exp(),
            None => f64::INFINITY,
        };
        if matches!(map, Map::Torus(_)) {
            anchor_limit = anchor_limit.min(opts.torus_radius);
        }
        let reach = match &rate {
            Some(r) => r.reach(REACH_THRESHOLD),
            None => (None, None),
        };
        Ok(Merger {
            map,
            opts,
            rate,
            anchor_limit,
            reach,
            first: w.first_index(),
            last: w.last_index(),
            cur: w.points().to_vec(),
            truncated: false,
            violations: Vec::new(),
        })
    }

    fn idx(&self, t: i64) -> usize {
        (t - self.first) as usize
    }

    fn gap(&self, t: i64) -> f64 {
        let i = self.idx(t);
        dist_unchecked(&self.map.forward(&self.cur[i]), &self.cur[i + 1])
    }

    fn note_job(&mut self, level: usize, job: &Job) {
        let anchor = self.gap(job.moment);
        if anchor > self.anchor_limit {
            self.violations.push(AnchorViolation {
                level,
                moment: job.moment,
                anchor,
                limit: self.anchor_limit,
            });
        }
        let back_len = job.left.len() as u64;
        let fwd_len = job.right.len() as u64;
        let exceeds = |reach: Option<u64>, len: u64| reach.is_none_or(|r| r > len);
        if (job.left.start == self.first && exceeds(self.reach.0, back_len))
            || (job.right.end == self.last && exceeds(self.reach.1, fwd_len))
        {
            self.truncated = true;
        }
    }

    fn run_job(&self, job: &Job) -> Result<Vec<State>> {
        let (li, ti, ei) = (self.idx(job.left.start), self.idx(job.moment), self.idx(job.right.end));
        let mut xs = self.cur[li..=ti].to_vec();
        xs.push(self.map.forward(&self.cur[ti]));
        let x_back = TrajectoryWindow::new(xs, ti - li + 1)?;
        let y_fwd = TrajectoryWindow::new(self.cur[ti + 1..=ei].to_vec(), 0)?;
        let z = glue_points(self.map, &x_back, &y_fwd, self.opts.policy, self.opts.torus_radius)?;
        Ok(z.into_points())
    }

    fn apply(&mut self, job: &Job, z: Vec<State>) {
        let li = self.idx(job.left.start);
        self.cur[li..li + z.len()].copy_from_slice(&z);
    }

    fn finish(
        self,
        method: MergeMethod,
        p: &PseudoTrajectory,
        levels: Vec<MergeLevel>,
        consumed: Vec<(i64, usize)>,
    ) -> Result<ShadowingReport> {
        let y = p.window();
        let z = TrajectoryWindow::new(self.cur, y.neg_len())?;
        let errors = pointwise(&z, y);
        let uniform_err = errors.iter().copied().fold(0.0, f64::max);
        let qn = running_means(&errors, z.neg_len());
        let q_limsup = final_half_max(&qn);
        let limit_err = limit_of(&errors, z.neg_len());
        let defect = if z.len() >= 2 {
            verify_trajectory(self.map, &z, DEFECT_TOL)?
        } else {
            0.0
        };
        let consecutive_flag = self
            .rate
            .as_ref()
            .map(|r| r.value(1) >= 1.0 || r.value(-1) >= 1.0)
            .unwrap_or(false);
        let mut report = ShadowingReport {
            method,
            z,
            errors,
            uniform_err,
            qn,
            q_limsup,
            limit_err,
            levels,
            consumed,
            truncated: self.truncated,
            anchor_violations: self.violations,
            consecutive_flag,
            rate: self.rate,
            checks: None,
            defect,
        };
        report.checks = bound_checks(self.map, p, &report, self.opts)?;
        Ok(report)
    }
}

fn amplitude_cap(map: &Map, p: &PseudoTrajectory, opts: &ShadowOptions) -> f64 {
    opts.amplitude_cap
        .or_else(|| map.space().diameter())
        .unwrap_or_else(|| p.max_gap())
}

fn bound_checks(
    map: &Map,
    p: &PseudoTrajectory,
    report: &ShadowingReport,
    opts: &ShadowOptions,
) -> Result<Option<BoundChecks>> {
    let rate = match &report.rate {
        Some(r) => r,
        None => return Ok(None),
    };
    let phi = match rate.phi() {
        Ok(v) => v,
        Err(Error::Diverges(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let d = amplitude_cap(map, p, opts);
    let max_gap = p.max_gap();
    let density = upper_density(p).limsup;
    let avg_bound = if map.space().diameter().is_some() {
        phi * d * density
    } else {
        phi * d * phi.exp() * density
    };
    let gap = if report.method == MergeMethod::Parallel {
        Some(gap_recursion_bound(rate, &report.levels, d.max(max_gap))?)
    } else {
        None
    };
    Ok(Some(BoundChecks {
        phi,
        amplitude_cap: d,
        max_gap,
        density,
        average: BoundCheck::new(report.q_limsup, avg_bound),
        uniform: BoundCheck::new(report.uniform_err, phi * max_gap),
        k_emp: if max_gap > 0.0 {
            report.uniform_err / max_gap
        } else {
            0.0
        },
        gap,
    }))
}

fn merge_err(level: usize, moment: i64, e: Error) -> Error {
    Error::MergeFailure {
        level,
        moment,
        source: Box::new(e),
    }
}

/// Parallel gluing with default options.
pub fn parallel_glue(map: &Map, p: &PseudoTrajectory) -> Result<ShadowingReport> {
    parallel_glue_with(map, p, &ShadowOptions::default())
}

/// Merges all segments of `p` into one true trajectory, level by level.
pub fn parallel_glue_with(map: &Map, p: &PseudoTrajectory, opts: &ShadowOptions) -> Result<ShadowingReport> {
    let mut m = Merger::new(map, p, opts)?;
    let mut moments = p.moments().to_vec();
    let mut levels = Vec::new();
    let mut consumed = Vec::with_capacity(moments.len());
    let mut level = 0;
    while !moments.is_empty() {
        let gaps: Vec<f64> = moments.iter().map(|&t| m.gap(t)).collect();
        let tau_min = moments.windows(2).map(|w| (w[1] - w[0]) as u64).min();
        let jobs: Vec<Job> = (0..moments.len())
            .step_by(2)
            .map(|j| Job {
                moment: moments[j],
                left: Segment {
                    start: if j > 0 { moments[j - 1] + 1 } else { m.first },
                    end: moments[j],
                },
                right: Segment {
                    start: moments[j] + 1,
                    end: moments.get(j + 1).copied().unwrap_or(m.last),
                },
            })
            .collect();
        for job in &jobs {
            m.note_job(level, job);
        }
        let results: Vec<Result<Vec<State>>> = if opts.parallel {
            jobs.par_iter().map(|job| m.run_job(job)).collect()
        } else {
            jobs.iter().map(|job| m.run_job(job)).collect()
        };
        for (job, res) in jobs.iter().zip(results) {
            let z = res.map_err(|e| merge_err(level, job.moment, e))?;
            m.apply(job, z);
            consumed.push((job.moment, level));
        }
        levels.push(MergeLevel {
            level,
            resolved: jobs.iter().map(|j| j.moment).collect(),
            moments: std::mem::take(&mut moments),
            gaps,
            tau_min,
        });
        moments = levels[level].moments.iter().skip(1).step_by(2).copied().collect();
        level += 1;
    }
    m.finish(MergeMethod::Parallel, p, levels, consumed)
}

/// Consecutive gluing with default options.
pub fn consecutive_glue(map: &Map, p: &PseudoTrajectory) -> Result<ShadowingReport> {
    consecutive_glue_with(map, p, &ShadowOptions::default())
}

/// Grows one block from the segment containing index 0 (or the first
/// segment), gluing the next segment on the right, then on the left, in
/// turn. Each step re-glues the whole block, so the cost is quadratic in the
/// number of moments.
pub fn consecutive_glue_with(map: &Map, p: &PseudoTrajectory, opts: &ShadowOptions) -> Result<ShadowingReport> {
    let mut m = Merger::new(map, p, opts)?;
    let moments = p.moments().to_vec();
    let origin = 0i64.clamp(m.first, m.last);
    // moments[..split] lie left of the origin block, moments[split..] bound it on the right
    let split = moments.partition_point(|&t| t < origin);
    let mut lo = if split > 0 { moments[split - 1] + 1 } else { m.first };
    let mut hi = moments.get(split).copied().unwrap_or(m.last);
    let (mut right, mut left) = (split, split as i64 - 1);
    let mut levels = Vec::new();
    let mut consumed = Vec::new();
    let mut step = 0usize;
    let mut go_right = true;
    while right < moments.len() || left >= 0 {
        let job = if (go_right && right < moments.len()) || left < 0 {
            let end = moments.get(right + 1).copied().unwrap_or(m.last);
            right += 1;
            Job {
                moment: hi,
                left: Segment { start: lo, end: hi },
                right: Segment { start: hi + 1, end },
            }
        } else {
            let l = left as usize;
            let start = if l > 0 { moments[l - 1] + 1 } else { m.first };
            left -= 1;
            Job {
                moment: lo - 1,
                left: Segment { start, end: lo - 1 },
                right: Segment { start: lo, end: hi },
            }
        };
        go_right = !go_right;
        let gap = m.gap(job.moment);
        m.note_job(step, &job);
        let z = m.run_job(&job).map_err(|e| merge_err(step, job.moment, e))?;
        m.apply(&job, z);
        lo = job.left.start;
        hi = job.right.end;
        consumed.push((job.moment, step));
        levels.push(MergeLevel {
            level: step,
            moments: vec![job.moment],
            gaps: vec![gap],
            tau_min: None,
            resolved: vec![job.moment],
        });
        step += 1;
    }
    m.finish(MergeMethod::Consecutive, p, levels, consumed)
}

/// Shadowing functional being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShadowKind {
    Uniform,
    Average,
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowVerdict {
    pub delta: f64,
    /// `delta / ε`, zero when `ε = 0`.
    pub k_emp: f64,
    /// `None` for pairs without a proven bound.
    pub bound: Option<f64>,
    pub pass: bool,
}

/// Compares the observed shadowing error with the bound for the pair.
///
/// `(U, ·)` pairs use `Φ ε`; `(R, A)` uses `Φ D ε` on bounded spaces and
/// `Φ D e^Φ ε` otherwise, with `D` the report's amplitude cap.
pub fn check_shadowing(pair: (PerturbationKind, ShadowKind), epsilon: f64, report: &ShadowingReport) -> ShadowVerdict {
    let delta = match pair.1 {
        ShadowKind::Uniform => report.uniform_err,
        ShadowKind::Average => report.q_limsup,
        ShadowKind::Limit => report.limit_err,
    };
    let k_emp = if epsilon > 0.0 { delta / epsilon } else { 0.0 };
    let bound = report.checks.as_ref().and_then(|c| match pair {
        (PerturbationKind::Uniform, _) => Some(c.phi * epsilon),
        (PerturbationKind::Rare, ShadowKind::Average) => {
            if report.z.space().and_then(|s| s.diameter()).is_some() {
                Some(c.phi * c.amplitude_cap * epsilon)
            } else {
                Some(c.phi * c.amplitude_cap * c.phi.exp() * epsilon)
            }
        }
        _ => None,
    });
    let pass = bound.is_some_and(|b| delta <= b * (1.0 + 1e-12) + 1e-15);
    ShadowVerdict {
        delta,
        k_emp,
        bound,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::PiecewiseLinearMap;
    use crate::perturbation::compute_gaps;
    use crate::GAP_THRESHOLD;

    fn doubling() -> Map {
        PiecewiseLinearMap::doubling().into()
    }

    fn pseudo(map: &Map, pts: Vec<f64>, neg: usize) -> PseudoTrajectory {
        let w = TrajectoryWindow::new(pts.into_iter().map(State::interval).collect(), neg).unwrap();
        compute_gaps(map, &w, GAP_THRESHOLD).unwrap()
    }

    /// Forward orbit that restarts at the given points at the given indices.
    fn orbit_with_jumps(map: &Map, x0: f64, len: usize, jumps: &[(usize, f64)]) -> Vec<f64> {
        let mut pts = Vec::with_capacity(len);
        let mut cur = State::interval(x0);
        for i in 0..len {
            if let Some(&(_, v)) = jumps.iter().find(|j| j.0 == i) {
                cur = State::interval(v);
            }
            pts.push(cur.x());
            cur = map.forward(&cur);
        }
        pts
    }

    #[test]
    fn segments_example() {
        let map = doubling();
        let pts = orbit_with_jumps(&map, 0.1, 20, &[(6, 0.7), (10, 0.3)]);
        let p = pseudo(&map, pts, 0);
        assert_eq!(p.moments(), &[5, 9]);
        let segs = extract_segments(&p);
        assert_eq!(
            segs,
            vec![
                Segment { start: 0, end: 5 },
                Segment { start: 6, end: 9 },
                Segment { start: 10, end: 19 }
            ]
        );
    }

    #[test]
    fn no_moments_is_identity() {
        let map = doubling();
        let pts = orbit_with_jumps(&map, 0.1234, 30, &[]);
        let p = pseudo(&map, pts, 0);
        assert_eq!(extract_segments(&p).len(), 1);
        for r in [parallel_glue(&map, &p).unwrap(), consecutive_glue(&map, &p).unwrap()] {
            assert_eq!(&r.z, p.window());
            assert_eq!(r.uniform_err, 0.0);
            assert!(r.levels.is_empty());
        }
    }

    #[test]
    fn single_moment_matches_single_glue() {
        let map = doubling();
        // y_0 = 0.3 on the left; the orbit restarts at T(0.3)+0.1 = 0.7
        let mut left: Vec<f64> = (0..=100).map(|k| 0.3 / 2f64.powi(k)).collect();
        left.reverse();
        let mut pts = left;
        pts.extend(orbit_with_jumps(&map, 0.7, 100, &[]));
        let p = pseudo(&map, pts, 100);
        assert_eq!(p.moments(), &[0]);
        let r = parallel_glue(&map, &p).unwrap();
        for (t, e) in r.z.indexed().map(|(t, _)| t).zip(&r.errors) {
            if t >= 1 {
                assert_eq!(*e, 0.0);
            } else {
                assert!(*e <= 0.1 * 2f64.powi(t as i32 - 1) + 1e-15, "t={t} e={e}");
            }
        }
        assert!(r.uniform_err <= 0.1);
        assert_eq!(r.consumed, vec![(0, 0)]);
    }

    #[test]
    fn levels_halve_and_consume_each_moment_once() {
        let map = doubling();
        let jumps: Vec<(usize, f64)> = (1..40).map(|i| (i * 7, 0.1 + 0.02 * i as f64)).collect();
        let pts = orbit_with_jumps(&map, 0.2, 300, &jumps);
        let p = pseudo(&map, pts, 0);
        let r = parallel_glue(&map, &p).unwrap();
        let mut seen: Vec<i64> = r.consumed.iter().map(|c| c.0).collect();
        seen.sort_unstable();
        assert_eq!(seen, p.moments());
        for pair in r.levels.windows(2) {
            assert!(pair[1].moments.len() <= pair[0].moments.len().div_ceil(2));
            if let (Some(a), Some(b)) = (pair[0].tau_min, pair[1].tau_min) {
                assert!(b > a);
            }
        }
        assert!(r.defect <= 1e-10);
        let gap = r.checks.as_ref().unwrap().gap.as_ref().unwrap();
        assert!(gap.observed_ok && gap.final_ok);
    }

    #[test]
    fn consecutive_agrees_with_parallel_on_two_moments() {
        let map = doubling();
        let pts = orbit_with_jumps(&map, 0.2, 60, &[(20, 0.61), (41, 0.37)]);
        let p = pseudo(&map, pts, 30);
        let par = parallel_glue(&map, &p).unwrap();
        let con = consecutive_glue(&map, &p).unwrap();
        assert!(con.defect <= 1e-11);
        assert!(con.uniform_err <= 2.0 * par.uniform_err + 1e-15);
        assert_eq!(con.consumed.len(), 2);
        assert!(!con.consecutive_flag);
    }

    #[test]
    fn error_functionals() {
        let ys: Vec<State> = (0..10_000).map(|_| State::interval(0.0)).collect();
        let y = TrajectoryWindow::new(ys.clone(), 0).unwrap();
        assert_eq!(uniform_error(&y, &y).unwrap(), 0.0);
        let off = TrajectoryWindow::new(ys.iter().map(|_| State::interval(0.1)).collect(), 0).unwrap();
        assert!((uniform_error(&off, &y).unwrap() - 0.1).abs() < 1e-15);
        assert!((average_error(&off, &y).unwrap().1 - 0.1).abs() < 1e-12);
        assert!((limit_error(&off, &y).unwrap() - 0.1).abs() < 1e-15);
        let mut spike = ys.clone();
        spike[0] = State::interval(1.0);
        let spike = TrajectoryWindow::new(spike, 0).unwrap();
        assert_eq!(uniform_error(&spike, &y).unwrap(), 1.0);
        assert!(average_error(&spike, &y).unwrap().1 <= 2e-4);
        assert_eq!(limit_error(&spike, &y).unwrap(), 0.0);
        let short = TrajectoryWindow::new(ys[..5].to_vec(), 0).unwrap();
        assert!(matches!(uniform_error(&short, &y), Err(Error::Usage(_))));
    }

    #[test]
    fn gap_recursion_examples() {
        let lv = |n: usize, tau: u64| MergeLevel {
            level: n,
            moments: vec![],
            gaps: vec![],
            tau_min: Some(tau),
            resolved: vec![],
        };
        let levels: Vec<MergeLevel> = (0..6).map(|n| lv(n, 1 << n)).collect();
        let g = gap_recursion_bound(&RateFunction::zero(), &levels, 1.0).unwrap();
        assert!(g.bounds.iter().all(|&b| b == 1.0));
        let two = RateFunction::exp_two_sided(1.0, 2.0, 0.5).unwrap();
        let g = gap_recursion_bound(&two, &levels, 1.0).unwrap();
        // oracle: direct product
        let mut prod = 1.0;
        for n in 0..6 {
            prod *= 1.0 + 2.0 * 2f64.powi(-(1 << n));
        }
        assert!((g.final_bound - prod).abs() < 1e-12);
        assert!(g.final_bound < 1.29f64.exp());
        assert!(g.final_ok);
    }

    #[test]
    fn check_shadowing_zero_epsilon() {
        let map = doubling();
        let p = pseudo(&map, orbit_with_jumps(&map, 0.3, 50, &[]), 0);
        let r = parallel_glue(&map, &p).unwrap();
        let v = check_shadowing((PerturbationKind::Rare, ShadowKind::Average), 0.0, &r);
        assert_eq!(v.delta, 0.0);
        assert!(v.pass);
    }

    #[test]
    fn csv_outputs() {
        let map = doubling();
        let pts = orbit_with_jumps(&map, 0.2, 20, &[(5, 0.9), (12, 0.4)]);
        let p = pseudo(&map, pts, 0);
        let r = parallel_glue(&map, &p).unwrap();
        let mut buf = Vec::new();
        r.write_csv(p.window(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,y,z,err\n0,"));
        assert_eq!(text.lines().count(), 21);
        let mut buf = Vec::new();
        r.write_levels_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("level,moment_index,gap,tau_min,gap_bound\n0,4,"));
    }
}
