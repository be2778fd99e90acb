//! Pseudo-trajectories: gaps, perturbation moments, the three perturbation
//! types and seeded generators for them.
//!
//! The gap at index `i` is `γ_i = ρ(T y_i, y_{i+1})`; it sits between
//! indices `i` and `i + 1`. Moments are the indices whose gap exceeds the
//! threshold.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::averages::{final_half_max, running_means};
use crate::error::{Error, Result};
use crate::maps::PiecewiseBijectiveMap;
use crate::space::{dist_unchecked, SpaceTag, State, TrajectoryWindow};

/// Generator used for every stochastic experiment.
pub type ExperimentRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ExperimentRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoTrajectory {
    window: TrajectoryWindow,
    gaps: Vec<f64>,
    moments: Vec<i64>,
    gap_threshold: f64,
}

impl PseudoTrajectory {
    pub fn window(&self) -> &TrajectoryWindow {
        &self.window
    }

    /// Gaps in index order, starting at `window.first_index()`.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Gap at trajectory index `i`.
    pub fn gap(&self, i: i64) -> Option<f64> {
        let j = i - self.window.first_index();
        if j >= 0 && (j as usize) < self.gaps.len() {
            Some(self.gaps[j as usize])
        } else {
            None
        }
    }

    /// Sorted perturbation moments.
    pub fn moments(&self) -> &[i64] {
        &self.moments
    }

    pub fn gap_threshold(&self) -> f64 {
        self.gap_threshold
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    /// Number of gap indices below zero.
    fn gap_neg(&self) -> usize {
        self.window.neg_len()
    }
}

/// Computes gaps and moments of `w` under `map`.
pub fn compute_gaps<M: PiecewiseBijectiveMap + ?Sized>(
    map: &M,
    w: &TrajectoryWindow,
    gap_threshold: f64,
) -> Result<PseudoTrajectory> {
    if !(gap_threshold >= 0.0) {
        return Err(Error::usage("gap threshold must be non-negative"));
    }
    if !w.is_empty() && w.space() != Some(map.space()) {
        return Err(Error::usage("window and map live in different spaces"));
    }
    let gaps: Vec<f64> = w
        .points()
        .windows(2)
        .map(|p| dist_unchecked(&map.forward(&p[0]), &p[1]))
        .collect();
    let base = w.first_index();
    let moments = gaps
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > gap_threshold)
        .map(|(j, _)| base + j as i64)
        .collect();
    Ok(PseudoTrajectory {
        window: w.clone(),
        gaps,
        moments,
        gap_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    /// Every step moved by at most ε.
    Uniform,
    /// Every step moved by a capped half-normal amplitude of mean ε/2.
    Average,
    /// Each step moved with probability ε by an amplitude in (0, D].
    Rare,
}

impl PerturbationKind {
    pub fn letter(self) -> &'static str {
        match self {
            PerturbationKind::Uniform => "U",
            PerturbationKind::Average => "A",
            PerturbationKind::Rare => "R",
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "U" | "u" | "uniform" => Ok(PerturbationKind::Uniform),
            "A" | "a" | "average" => Ok(PerturbationKind::Average),
            "R" | "r" | "rare" => Ok(PerturbationKind::Rare),
            other => Err(Error::usage(format!("unknown perturbation kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub epsilon: f64,
    /// Amplitude cap `D` (used by the A and R types).
    pub amplitude_cap: f64,
    pub seed: u64,
    pub neg_len: usize,
    pub pos_len: usize,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, epsilon: f64, amplitude_cap: f64, seed: u64, pos_len: usize) -> Self {
        PerturbationSpec {
            kind,
            epsilon,
            amplitude_cap,
            seed,
            neg_len: 0,
            pos_len,
        }
    }

    pub fn with_neg_len(mut self, neg_len: usize) -> Self {
        self.neg_len = neg_len;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon={} must be non-negative", self.epsilon)));
        }
        if self.kind == PerturbationKind::Rare && self.epsilon > 1.0 {
            return Err(Error::invalid("rare-perturbation density must not exceed 1"));
        }
        if self.kind != PerturbationKind::Uniform && !(self.amplitude_cap > 0.0 && self.amplitude_cap.is_finite()) {
            return Err(Error::invalid("amplitude cap D must be positive"));
        }
        if self.neg_len + self.pos_len < 2 {
            return Err(Error::invalid("window needs at least two points"));
        }
        Ok(())
    }
}

/// A generated pseudo-trajectory together with what the generator applied.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub pseudo: PseudoTrajectory,
    /// Applied displacement norm at each gap index (0 where unperturbed).
    pub injected: Vec<f64>,
    /// Number of displacements shortened to keep the point in the space.
    pub clamped: usize,
    /// Amplitude cap actually used (reduced to the diameter when larger).
    pub amplitude_cap: f64,
}

/// Generates a pseudo-trajectory of the requested type.
///
/// The first point is uniform in the space (the square `[-1, 1]²` on the
/// plane); every later point is `T y_i` displaced according to the type.
pub fn generate_pseudo<M: PiecewiseBijectiveMap + ?Sized, R: Rng + ?Sized>(
    map: &M,
    spec: &PerturbationSpec,
    rng: &mut R,
) -> Result<Perturbed> {
    spec.validate()?;
    let space = map.space();
    let mut cap = spec.amplitude_cap;
    if let Some(diam) = space.diameter() {
        if cap > diam {
            cap = diam;
        }
    }
    let len = spec.neg_len + spec.pos_len;
    let half_normal = Normal::new(0.0, spec.epsilon * 0.5 * (std::f64::consts::PI / 2.0).sqrt())
        .map_err(|e| Error::invalid(e.to_string()))?;

    let start = random_point(space, rng);
    let mut points = Vec::with_capacity(len);
    let mut injected = Vec::with_capacity(len - 1);
    let mut clamped = 0;
    points.push(start);
    for _ in 1..len {
        let base = map.forward(points.last().unwrap());
        let amplitude = match spec.kind {
            _ if spec.epsilon == 0.0 => 0.0,
            PerturbationKind::Uniform => match space {
                SpaceTag::Interval01 => spec.epsilon * rng.random::<f64>(),
                _ => spec.epsilon * rng.random::<f64>().sqrt(),
            },
            PerturbationKind::Average => half_normal.sample(rng).abs().min(cap),
            PerturbationKind::Rare => {
                if rng.random::<f64>() < spec.epsilon {
                    cap * (1.0 - rng.random::<f64>())
                } else {
                    0.0
                }
            }
        };
        if amplitude == 0.0 {
            points.push(base);
            injected.push(0.0);
            continue;
        }
        let (next, was_clamped) = displace(&base, amplitude, rng);
        clamped += usize::from(was_clamped);
        injected.push(dist_unchecked(&base, &next));
        points.push(next);
    }
    let window = TrajectoryWindow::new(points, spec.neg_len)?;
    let pseudo = compute_gaps(map, &window, crate::GAP_THRESHOLD)?;
    Ok(Perturbed {
        pseudo,
        injected,
        clamped,
        amplitude_cap: cap,
    })
}

pub(crate) fn random_point<R: Rng + ?Sized>(space: SpaceTag, rng: &mut R) -> State {
    match space {
        SpaceTag::Interval01 => State::interval(rng.random::<f64>()),
        SpaceTag::TorusT2 => State::torus(rng.random::<f64>(), rng.random::<f64>()),
        SpaceTag::PlaneR2 => State::plane(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0),
    }
}

/// Moves `base` by `amplitude` in a random direction. On the interval the
/// opposite direction is tried before clamping at the boundary.
fn displace<R: Rng + ?Sized>(base: &State, amplitude: f64, rng: &mut R) -> (State, bool) {
    match base.space() {
        SpaceTag::Interval01 => {
            let x = base.x();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            for s in [sign, -sign] {
                let cand = x + s * amplitude;
                if (0.0..=1.0).contains(&cand) {
                    return (State::interval(cand), false);
                }
            }
            // neither direction fits: go to the farther boundary
            let target = if x < 0.5 { 1.0 } else { 0.0 };
            (State::interval(target), true)
        }
        SpaceTag::PlaneR2 | SpaceTag::TorusT2 => {
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let (s, c) = theta.sin_cos();
            let v = [base.x() + amplitude * c, base.y() + amplitude * s];
            if base.space() == SpaceTag::PlaneR2 {
                (State::plane(v[0], v[1]), false)
            } else {
                (State::torus(v[0], v[1]), amplitude > 0.5)
            }
        }
    }
}

/// Type U: every gap is at most ε.
pub fn classify_uniform(p: &PseudoTrajectory, epsilon: f64) -> bool {
    p.max_gap() <= epsilon + 1e-12
}

/// Outcome of the small-on-average test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AverageClass {
    pub ok: bool,
    pub first_valid_n: Option<usize>,
}

/// Type A: the running mean of the gaps stays below ε from some `N` on.
///
/// Means are symmetric when the window has a negative part and one-sided
/// otherwise. `N` must not exceed half of the largest computable `n`.
pub fn classify_average(p: &PseudoTrajectory, epsilon: f64, n_min: usize) -> AverageClass {
    let n_min = n_min.max(1);
    let means = running_means(&p.gaps, p.gap_neg());
    let failing = AverageClass {
        ok: false,
        first_valid_n: None,
    };
    if means.len() < 2 {
        return failing;
    }
    let max_n = means.len() - 1;
    let last_bad = means.iter().rposition(|m| *m > epsilon + 1e-12);
    let n = match last_bad {
        None => n_min,
        Some(b) => (b + 1).max(n_min),
    };
    if n <= max_n / 2 {
        AverageClass {
            ok: true,
            first_valid_n: Some(n),
        }
    } else {
        failing
    }
}

/// Running moment densities and their limsup estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    /// `d_n = #(N ∩ [-n, n]) / (2n + 1)` (one-sided without a negative part).
    pub densities: Vec<f64>,
    /// Maximum of `d_n` over the final half.
    pub limsup: f64,
}

/// Upper density of the moment set of `p`.
pub fn upper_density(p: &PseudoTrajectory) -> DensityEstimate {
    upper_density_of(p.moments(), p.window.first_index(), p.gaps.len())
}

/// Upper density of `moments` over the gap indices
/// `first .. first + count`.
pub fn upper_density_of(moments: &[i64], first: i64, count: usize) -> DensityEstimate {
    let mut indicator = vec![0.0; count];
    for &m in moments {
        let j = m - first;
        if j >= 0 && (j as usize) < count {
            indicator[j as usize] = 1.0;
        }
    }
    let neg = if first < 0 { (-first) as usize } else { 0 };
    let densities = running_means(&indicator, neg);
    let limsup = if densities.is_empty() {
        0.0
    } else {
        final_half_max(&densities)
    };
    DensityEstimate { densities, limsup }
}
