//! Phase-space points, the metric on each supported space, and finite
//! windows onto bi-infinite trajectories.

use std::fmt;

use crate::error::{Error, Result};
use crate::maps::PiecewiseBijectiveMap;

/// The phase spaces supported by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceTag {
    /// The unit interval `[0, 1]` with `|u - v|`.
    Interval01,
    /// The Euclidean plane.
    PlaneR2,
    /// The flat unit torus `[0, 1)²`.
    TorusT2,
}

impl SpaceTag {
    pub fn dim(self) -> usize {
        match self {
            SpaceTag::Interval01 => 1,
            SpaceTag::PlaneR2 | SpaceTag::TorusT2 => 2,
        }
    }

    /// Diameter of the space, `None` when unbounded.
    pub fn diameter(self) -> Option<f64> {
        match self {
            SpaceTag::Interval01 => Some(1.0),
            SpaceTag::PlaneR2 => None,
            SpaceTag::TorusT2 => Some(std::f64::consts::FRAC_1_SQRT_2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceTag::Interval01 => "interval_01",
            SpaceTag::PlaneR2 => "plane_r2",
            SpaceTag::TorusT2 => "torus_t2",
        }
    }
}

impl fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point of one of the supported spaces.
///
/// Interval points keep their coordinate in `coords[0]`; the second slot is
/// always zero for them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    coords: [f64; 2],
    space: SpaceTag,
}

impl State {
    /// Interval point, clamped into `[0, 1]`.
    pub fn interval(x: f64) -> Self {
        State {
            coords: [x.clamp(0.0, 1.0), 0.0],
            space: SpaceTag::Interval01,
        }
    }

    pub fn plane(x: f64, y: f64) -> Self {
        State {
            coords: [x, y],
            space: SpaceTag::PlaneR2,
        }
    }

    /// Torus point, reduced into `[0, 1)²`.
    pub fn torus(x: f64, y: f64) -> Self {
        State {
            coords: [wrap_unit(x), wrap_unit(y)],
            space: SpaceTag::TorusT2,
        }
    }

    /// Builds a state from a coordinate slice, normalising into the space.
    pub fn from_coords(space: SpaceTag, coords: &[f64]) -> Result<Self> {
        if coords.len() != space.dim() {
            return Err(Error::usage(format!(
                "{space} expects {} coordinates, got {}",
                space.dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::usage("non-finite coordinate"));
        }
        Ok(match space {
            SpaceTag::Interval01 => State::interval(coords[0]),
            SpaceTag::PlaneR2 => State::plane(coords[0], coords[1]),
            SpaceTag::TorusT2 => State::torus(coords[0], coords[1]),
        })
    }

    pub fn space(&self) -> SpaceTag {
        self.space
    }

    /// The meaningful coordinates (length 1 or 2).
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.space.dim()]
    }

    /// First coordinate; the position for interval states.
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub(crate) fn raw(&self) -> [f64; 2] {
        self.coords
    }
}

/// Reduces `x` into `[0, 1)`.
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// The metric of `space` between `u` and `v`.
///
/// On the torus this is the flat metric: the minimum Euclidean distance over
/// the nine integer translates of `v` adjacent to the unit square.
pub fn distance(space: SpaceTag, u: &State, v: &State) -> Result<f64> {
    if u.space != space || v.space != space {
        return Err(Error::usage(format!(
            "distance on {space} between {} and {} states",
            u.space, v.space
        )));
    }
    Ok(dist_unchecked(u, v))
}

/// Metric without tag checks. Both states must share a space.
pub(crate) fn dist_unchecked(u: &State, v: &State) -> f64 {
    match u.space {
        SpaceTag::Interval01 => (u.coords[0] - v.coords[0]).abs(),
        SpaceTag::PlaneR2 => (u.coords[0] - v.coords[0]).hypot(u.coords[1] - v.coords[1]),
        SpaceTag::TorusT2 => {
            let mut best = f64::INFINITY;
            for sx in [-1.0, 0.0, 1.0] {
                for sy in [-1.0, 0.0, 1.0] {
                    let d = (u.coords[0] - v.coords[0] - sx).hypot(u.coords[1] - v.coords[1] - sy);
                    best = best.min(d);
                }
            }
            best
        }
    }
}

/// A finite window `[-neg_len, pos_len - 1]` of a trajectory or
/// pseudo-trajectory. Index 0 is the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryWindow {
    points: Vec<State>,
    neg_len: usize,
}

impl TrajectoryWindow {
    pub fn new(points: Vec<State>, neg_len: usize) -> Result<Self> {
        if neg_len > points.len() {
            return Err(Error::usage(format!(
                "neg_len {neg_len} exceeds window length {}",
                points.len()
            )));
        }
        if let Some(first) = points.first() {
            let tag = first.space();
            if points.iter().any(|p| p.space() != tag) {
                return Err(Error::usage("window mixes states from different spaces"));
            }
        }
        Ok(TrajectoryWindow { points, neg_len })
    }

    /// Forward orbit `x, Tx, ..., T^{len-1}x` with origin at `x`.
    pub fn forward_orbit<M: PiecewiseBijectiveMap + ?Sized>(map: &M, x: State, len: usize) -> Self {
        let mut points = Vec::with_capacity(len);
        let mut cur = x;
        for _ in 0..len {
            points.push(cur);
            cur = map.forward(&cur);
        }
        TrajectoryWindow { points, neg_len: 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn neg_len(&self) -> usize {
        self.neg_len
    }

    pub fn pos_len(&self) -> usize {
        self.points.len() - self.neg_len
    }

    /// Smallest valid index.
    pub fn first_index(&self) -> i64 {
        -(self.neg_len as i64)
    }

    /// Largest valid index.
    pub fn last_index(&self) -> i64 {
        self.pos_len() as i64 - 1
    }

    pub fn space(&self) -> Option<SpaceTag> {
        self.points.first().map(State::space)
    }

    pub fn points(&self) -> &[State] {
        &self.points
    }

    pub fn into_points(self) -> Vec<State> {
        self.points
    }

    pub fn contains_index(&self, i: i64) -> bool {
        i >= self.first_index() && i <= self.last_index()
    }

    /// Point at trajectory index `i`.
    pub fn get(&self, i: i64) -> Option<&State> {
        if self.contains_index(i) {
            Some(&self.points[(i + self.neg_len as i64) as usize])
        } else {
            None
        }
    }

    /// Point at trajectory index `i`; panics outside the window.
    pub fn at(&self, i: i64) -> &State {
        self.get(i).unwrap_or_else(|| {
            panic!(
                "index {i} outside window [{}, {}]",
                self.first_index(),
                self.last_index()
            )
        })
    }

    /// Iterator over `(index, state)` pairs in index order.
    pub fn indexed(&self) -> impl Iterator<Item = (i64, &State)> + '_ {
        let base = self.first_index();
        self.points.iter().enumerate().map(move |(j, s)| (base + j as i64, s))
    }

    /// Re-centres the window so that former index `tau` becomes the origin.
    pub fn shift(&self, tau: i64) -> Result<Self> {
        if !self.contains_index(tau) {
            return Err(Error::usage(format!(
                "shift {tau} outside window [{}, {}]",
                self.first_index(),
                self.last_index()
            )));
        }
        Ok(TrajectoryWindow {
            points: self.points.clone(),
            neg_len: (self.neg_len as i64 + tau) as usize,
        })
    }
}

/// Largest one-step defect `ρ(T w_i, w_{i+1})` over the window.
///
/// `tol` is validated but not applied; callers compare the returned value
/// against it.
pub fn verify_trajectory<M: PiecewiseBijectiveMap + ?Sized>(map: &M, w: &TrajectoryWindow, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::usage("trajectory tolerance must be positive"));
    }
    if w.len() < 2 {
        return Err(Error::usage("trajectory window needs at least two points"));
    }
    if w.space() != Some(map.space()) {
        return Err(Error::usage("window and map live in different spaces"));
    }
    Ok(w.points
        .windows(2)
        .map(|p| dist_unchecked(&map.forward(&p[0]), &p[1]))
        .fold(0.0, f64::max))
}
