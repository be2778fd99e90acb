//! Piecewise bijective maps and their branch inverses.
//!
//! A map is piecewise bijective when its phase space is partitioned into
//! branch domains on each of which it is injective. `inverse_branch(v, y)`
//! inverts the branch containing `v`, which is how backward trajectories are
//! followed along a prescribed itinerary.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};
use crate::roots::{self, ROOT_TOL};
use crate::space::{wrap_unit, SpaceTag, State};

/// Slack used when testing whether a point lies in a closed branch image.
const IMAGE_SLACK: f64 = 1e-12;

pub trait PiecewiseBijectiveMap: Send + Sync {
    fn space(&self) -> SpaceTag;

    fn branch_count(&self) -> usize;

    fn forward(&self, x: &State) -> State;

    /// Index of the unique branch domain containing `x`.
    fn branch_index(&self, x: &State) -> usize;

    /// Preimage of `y` inside branch `branch`.
    fn inverse_in_branch(&self, branch: usize, y: &State) -> Result<State>;

    /// `T_v^{-1} y`: the preimage of `y` in the branch containing `v`.
    fn inverse_branch(&self, v: &State, y: &State) -> Result<State> {
        self.inverse_in_branch(self.branch_index(v), y)
    }

    /// Short human-readable description used in reports.
    fn describe(&self) -> String;
}

fn domain_err(branch: usize, y: &State) -> Error {
    Error::Domain {
        branch,
        y: y.coords().to_vec(),
    }
}

fn check_interval(y: &State) -> Result<f64> {
    if y.space() != SpaceTag::Interval01 {
        return Err(Error::usage(format!("expected an interval state, got {}", y.space())));
    }
    Ok(y.x())
}

/// `Tx = a x` on `[0, c)`, `Tx = b x + 1 - b` on `[c, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseLinearMap {
    a: f64,
    b: f64,
    c: f64,
}

impl PiecewiseLinearMap {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("slopes must be positive, got a={a}, b={b}")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid(format!("breakpoint c={c} must lie in (0, 1)")));
        }
        if a * c > 1.0 + IMAGE_SLACK || b * (1.0 - c) > 1.0 + IMAGE_SLACK {
            return Err(Error::invalid(format!(
                "map leaves [0, 1]: a*c = {}, b*(1-c) = {}",
                a * c,
                b * (1.0 - c)
            )));
        }
        Ok(PiecewiseLinearMap { a, b, c })
    }

    /// The doubling map `x ↦ 2x mod 1` written with closed right branch.
    pub fn doubling() -> Self {
        PiecewiseLinearMap { a: 2.0, b: 2.0, c: 0.5 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Both branches map onto the whole interval.
    pub fn is_full_branch(&self) -> bool {
        (self.a * self.c - 1.0).abs() <= IMAGE_SLACK && (self.b * (1.0 - self.c) - 1.0).abs() <= IMAGE_SLACK
    }

    /// Closed hull of the image of each branch.
    pub fn branch_image(&self, branch: usize) -> (f64, f64) {
        if branch == 0 {
            (0.0, self.a * self.c)
        } else {
            (1.0 - self.b * (1.0 - self.c), 1.0)
        }
    }
}

impl PiecewiseBijectiveMap for PiecewiseLinearMap {
    fn space(&self) -> SpaceTag {
        SpaceTag::Interval01
    }

    fn branch_count(&self) -> usize {
        2
    }

    fn forward(&self, x: &State) -> State {
        let x = x.x();
        if x < self.c {
            State::interval(self.a * x)
        } else {
            State::interval(self.b * x + (1.0 - self.b))
        }
    }

    fn branch_index(&self, x: &State) -> usize {
        // "ax if x < c": the breakpoint belongs to the right branch
        usize::from(x.x() >= self.c)
    }

    fn inverse_in_branch(&self, branch: usize, y: &State) -> Result<State> {
        let yv = check_interval(y)?;
        let (lo, hi) = self.branch_image(branch);
        if yv < lo - IMAGE_SLACK || yv > hi + IMAGE_SLACK {
            return Err(domain_err(branch, y));
        }
        let x = match branch {
            // the left domain is [0, c): keep the preimage strictly below c
            0 => (yv / self.a).min(self.c.next_down()),
            1 => ((yv - (1.0 - self.b)) / self.b).max(self.c),
            _ => return Err(Error::usage(format!("branch {branch} out of range"))),
        };
        Ok(State::interval(x))
    }

    fn describe(&self) -> String {
        format!("piecewise_linear(a={},b={},c={})", self.a, self.b, self.c)
    }
}

/// Interval map with neutral fixed points:
/// `Tx = x + (1-c)(x/c)^{1+α}` on `[0, c]` and
/// `Tx = 1 - T(c(1-x)/(1-c))` on `(c, 1]`.
///
/// The map jumps from 1 to 0 at `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeutralMap {
    alpha: f64,
    c: f64,
    root_tol: f64,
}

impl NeutralMap {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        Self::with_tolerance(alpha, c, ROOT_TOL)
    }

    pub fn with_tolerance(alpha: f64, c: f64, root_tol: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha={alpha} must be positive")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid(format!("breakpoint c={c} must lie in (0, 1)")));
        }
        if !(root_tol >= 0.0) {
            return Err(Error::invalid("root tolerance must be non-negative"));
        }
        Ok(NeutralMap { alpha, c, root_tol })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Amplitude `R` such that the left branch reads `x + R x^{1+α}`.
    pub fn left_amplitude(&self) -> f64 {
        (1.0 - self.c) / self.c.powf(1.0 + self.alpha)
    }

    fn left(&self, x: f64) -> f64 {
        x + (1.0 - self.c) * (x / self.c).powf(1.0 + self.alpha)
    }

    fn left_slope(&self, x: f64) -> f64 {
        1.0 + (1.0 - self.c) * (1.0 + self.alpha) / self.c * (x / self.c).powf(self.alpha)
    }

    fn left_inverse(&self, y: f64) -> Result<f64> {
        roots::solve_increasing(|u| self.left(u), |u| self.left_slope(u), 0.0, self.c, y, self.root_tol)
    }
}

impl PiecewiseBijectiveMap for NeutralMap {
    fn space(&self) -> SpaceTag {
        SpaceTag::Interval01
    }

    fn branch_count(&self) -> usize {
        2
    }

    fn forward(&self, x: &State) -> State {
        let x = x.x();
        if x <= self.c {
            State::interval(self.left(x))
        } else {
            State::interval(1.0 - self.left(self.c * (1.0 - x) / (1.0 - self.c)))
        }
    }

    fn branch_index(&self, x: &State) -> usize {
        // "if x ≤ c": the breakpoint belongs to the left branch
        usize::from(x.x() > self.c)
    }

    fn inverse_in_branch(&self, branch: usize, y: &State) -> Result<State> {
        let yv = check_interval(y)?;
        if !(-IMAGE_SLACK..=1.0 + IMAGE_SLACK).contains(&yv) {
            return Err(domain_err(branch, y));
        }
        let yv = yv.clamp(0.0, 1.0);
        match branch {
            0 => Ok(State::interval(self.left_inverse(yv)?)),
            1 => {
                let u = self.left_inverse(1.0 - yv)?;
                // the right domain is (c, 1]
                let x = 1.0 - u * (1.0 - self.c) / self.c;
                Ok(State::interval(x.max(self.c.next_up())))
            }
            _ => Err(Error::usage(format!("branch {branch} out of range"))),
        }
    }

    fn describe(&self) -> String {
        format!("neutral(alpha={},c={})", self.alpha, self.c)
    }
}

/// Eigen data shared by the planar affine map and the toral automorphism.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Eigenbasis {
    lambda1: f64,
    lambda2: f64,
    e1: Vec2,
    e2: Vec2,
    basis_inv: Mat2,
    c_cond: f64,
}

impl Eigenbasis {
    fn new(lambda1: f64, lambda2: f64, e1: Vec2, e2: Vec2) -> Result<Self> {
        let n1 = linalg::norm(e1);
        let n2 = linalg::norm(e2);
        if !(n1 > 0.0 && n1.is_finite() && n2 > 0.0 && n2.is_finite()) {
            return Err(Error::invalid("eigenvectors must be finite and non-zero"));
        }
        let basis = Mat2::from_columns(e1, e2);
        if basis.det().abs() < 1e-12 * n1 * n2 {
            return Err(Error::invalid("eigenvectors are collinear"));
        }
        let basis_inv = basis
            .inverse()
            .ok_or_else(|| Error::invalid("eigenbasis is singular"))?;
        Ok(Eigenbasis {
            lambda1,
            lambda2,
            e1,
            e2,
            basis_inv,
            c_cond: basis_inv.op_norm() * basis.op_norm(),
        })
    }

    fn coords(&self, v: Vec2) -> (f64, f64) {
        let c = self.basis_inv.apply(v);
        (c[0], c[1])
    }
}

fn check_hyperbolic(lambda1: f64, lambda2: f64) -> Result<()> {
    if lambda1 > 1.0 && lambda1.is_finite() && lambda2 > 0.0 && lambda2 < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "need λ1 > 1 > λ2 > 0, got λ1={lambda1}, λ2={lambda2}"
        )))
    }
}

/// `Tx = Ax + a` on the plane, with `A` given by its eigen data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicAffine2D {
    eig: Eigenbasis,
    offset: Vec2,
    matrix: Mat2,
    matrix_inv: Mat2,
    fixed_point: Vec2,
}

impl HyperbolicAffine2D {
    pub fn new(lambda1: f64, lambda2: f64, e1: Vec2, e2: Vec2, offset: Vec2) -> Result<Self> {
        check_hyperbolic(lambda1, lambda2)?;
        if !offset.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("offset must be finite"));
        }
        let eig = Eigenbasis::new(lambda1, lambda2, e1, e2)?;
        let basis = Mat2::from_columns(eig.e1, eig.e2);
        let matrix = basis.mul(&Mat2::diag(lambda1, lambda2)).mul(&eig.basis_inv);
        let matrix_inv = basis.mul(&Mat2::diag(1.0 / lambda1, 1.0 / lambda2)).mul(&eig.basis_inv);
        // (I - A) is invertible because neither eigenvalue equals one
        let i_minus_a = basis.mul(&Mat2::diag(1.0 - lambda1, 1.0 - lambda2)).mul(&eig.basis_inv);
        let fixed_point = i_minus_a
            .inverse()
            .ok_or_else(|| Error::invalid("I - A is singular"))?
            .apply(offset);
        Ok(HyperbolicAffine2D {
            eig,
            offset,
            matrix,
            matrix_inv,
            fixed_point,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.eig.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.eig.lambda2
    }

    pub fn e1(&self) -> Vec2 {
        self.eig.e1
    }

    pub fn e2(&self) -> Vec2 {
        self.eig.e2
    }

    pub fn offset(&self) -> Vec2 {
        self.offset
    }

    pub fn matrix(&self) -> Mat2 {
        self.matrix
    }

    pub fn fixed_point(&self) -> Vec2 {
        self.fixed_point
    }

    /// Condition constant `‖E⁻¹‖·‖E‖` of the eigenbasis change.
    pub fn c_cond(&self) -> f64 {
        self.eig.c_cond
    }

    /// Coordinates `(α, β)` with `v = p + α e1 + β e2`, `p` the fixed point.
    pub fn eigen_coordinates(&self, v: Vec2) -> (f64, f64) {
        self.eig.coords(linalg::sub(v, self.fixed_point))
    }

    /// Point `n` of the orbit with eigen coordinates `(α, β)` at time 0.
    pub fn orbit_point(&self, alpha: f64, beta: f64, n: i32) -> Vec2 {
        let a = alpha * self.eig.lambda1.powi(n);
        let b = beta * self.eig.lambda2.powi(n);
        linalg::add(
            self.fixed_point,
            linalg::add(linalg::scale(a, self.eig.e1), linalg::scale(b, self.eig.e2)),
        )
    }

    pub fn inverse(&self, y: &State) -> State {
        let v = self.matrix_inv.apply(linalg::sub(y.raw(), self.offset));
        State::plane(v[0], v[1])
    }
}

impl PiecewiseBijectiveMap for HyperbolicAffine2D {
    fn space(&self) -> SpaceTag {
        SpaceTag::PlaneR2
    }

    fn branch_count(&self) -> usize {
        1
    }

    fn forward(&self, x: &State) -> State {
        let v = linalg::add(self.matrix.apply(x.raw()), self.offset);
        State::plane(v[0], v[1])
    }

    fn branch_index(&self, _x: &State) -> usize {
        0
    }

    fn inverse_in_branch(&self, branch: usize, y: &State) -> Result<State> {
        if branch != 0 {
            return Err(Error::usage(format!("branch {branch} out of range")));
        }
        if y.space() != SpaceTag::PlaneR2 {
            return Err(Error::usage("expected a plane state"));
        }
        Ok(self.inverse(y))
    }

    fn describe(&self) -> String {
        format!("affine(l1={},l2={})", self.eig.lambda1, self.eig.lambda2)
    }
}

/// `Tx = Ax mod 1` on the torus for a hyperbolic integer matrix with
/// determinant one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusLinearMap {
    m: [[i64; 2]; 2],
    eig: Eigenbasis,
}

impl TorusLinearMap {
    pub fn new(m: [[i64; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() != 1 {
            return Err(Error::invalid(format!("|det A| must be 1, got {det}")));
        }
        let tr = (m[0][0] + m[1][1]) as f64;
        let disc = tr * tr - 4.0 * det as f64;
        if disc <= 0.0 {
            return Err(Error::invalid("matrix has no real distinct eigenvalues"));
        }
        let s = disc.sqrt();
        let (l1, l2) = ((tr + s) / 2.0, (tr - s) / 2.0);
        check_hyperbolic(l1, l2)?;
        let eigvec = |l: f64| -> Vec2 {
            // rows of A - λI are proportional; use the better-conditioned one
            let r0 = [m[0][1] as f64, l - m[0][0] as f64];
            let r1 = [l - m[1][1] as f64, m[1][0] as f64];
            if linalg::norm(r0) >= linalg::norm(r1) {
                r0
            } else {
                r1
            }
        };
        let eig = Eigenbasis::new(l1, l2, eigvec(l1), eigvec(l2))?;
        Ok(TorusLinearMap { m, eig })
    }

    /// Arnold's cat map `[[2, 1], [1, 1]]`.
    pub fn cat() -> Self {
        Self::new([[2, 1], [1, 1]]).expect("cat map is hyperbolic")
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.m
    }

    pub fn lambda1(&self) -> f64 {
        self.eig.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.eig.lambda2
    }

    pub fn e1(&self) -> Vec2 {
        self.eig.e1
    }

    pub fn e2(&self) -> Vec2 {
        self.eig.e2
    }

    pub fn c_cond(&self) -> f64 {
        self.eig.c_cond
    }

    /// Eigen coordinates of a plane (lift) vector.
    pub fn eigen_coordinates(&self, v: Vec2) -> (f64, f64) {
        self.eig.coords(v)
    }

    pub(crate) fn apply_lift(&self, v: Vec2) -> Vec2 {
        let m = &self.m;
        [
            m[0][0] as f64 * v[0] + m[0][1] as f64 * v[1],
            m[1][0] as f64 * v[0] + m[1][1] as f64 * v[1],
        ]
    }

    pub(crate) fn apply_inverse_lift(&self, v: Vec2) -> Vec2 {
        let m = &self.m;
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) as f64;
        [
            (m[1][1] as f64 * v[0] - m[0][1] as f64 * v[1]) / det,
            (-(m[1][0] as f64) * v[0] + m[0][0] as f64 * v[1]) / det,
        ]
    }

    pub fn inverse(&self, y: &State) -> State {
        let v = self.apply_inverse_lift(y.raw());
        State::torus(v[0], v[1])
    }
}

impl PiecewiseBijectiveMap for TorusLinearMap {
    fn space(&self) -> SpaceTag {
        SpaceTag::TorusT2
    }

    fn branch_count(&self) -> usize {
        1
    }

    fn forward(&self, x: &State) -> State {
        let v = self.apply_lift(x.raw());
        State::torus(wrap_unit(v[0]), wrap_unit(v[1]))
    }

    fn branch_index(&self, _x: &State) -> usize {
        0
    }

    fn inverse_in_branch(&self, branch: usize, y: &State) -> Result<State> {
        if branch != 0 {
            return Err(Error::usage(format!("branch {branch} out of range")));
        }
        if y.space() != SpaceTag::TorusT2 {
            return Err(Error::usage("expected a torus state"));
        }
        Ok(self.inverse(y))
    }

    fn describe(&self) -> String {
        let m = &self.m;
        format!("torus([[{},{}],[{},{}]])", m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

/// Any of the concrete maps. Gluing constructions dispatch on this.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Map {
    PiecewiseLinear(PiecewiseLinearMap),
    Neutral(NeutralMap),
    Affine(HyperbolicAffine2D),
    Torus(TorusLinearMap),
}

impl Map {
    fn inner(&self) -> &dyn PiecewiseBijectiveMap {
        match self {
            Map::PiecewiseLinear(m) => m,
            Map::Neutral(m) => m,
            Map::Affine(m) => m,
            Map::Torus(m) => m,
        }
    }

    /// Short kind name as used in config files.
    pub fn kind(&self) -> &'static str {
        match self {
            Map::PiecewiseLinear(m) if *m == PiecewiseLinearMap::doubling() => "doubling",
            Map::PiecewiseLinear(_) => "piecewise_linear",
            Map::Neutral(_) => "neutral",
            Map::Affine(_) => "affine",
            Map::Torus(_) => "torus",
        }
    }
}

impl fmt::Display for Map {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl PiecewiseBijectiveMap for Map {
    fn space(&self) -> SpaceTag {
        self.inner().space()
    }

    fn branch_count(&self) -> usize {
        self.inner().branch_count()
    }

    fn forward(&self, x: &State) -> State {
        self.inner().forward(x)
    }

    fn branch_index(&self, x: &State) -> usize {
        self.inner().branch_index(x)
    }

    fn inverse_in_branch(&self, branch: usize, y: &State) -> Result<State> {
        self.inner().inverse_in_branch(branch, y)
    }

    fn describe(&self) -> String {
        self.inner().describe()
    }
}

impl From<PiecewiseLinearMap> for Map {
    fn from(m: PiecewiseLinearMap) -> Self {
        Map::PiecewiseLinear(m)
    }
}

impl From<NeutralMap> for Map {
    fn from(m: NeutralMap) -> Self {
        Map::Neutral(m)
    }
}

impl From<HyperbolicAffine2D> for Map {
    fn from(m: HyperbolicAffine2D) -> Self {
        Map::Affine(m)
    }
}

impl From<TorusLinearMap> for Map {
    fn from(m: TorusLinearMap) -> Self {
        Map::Torus(m)
    }
}
