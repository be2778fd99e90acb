//! C ABI over `glueshadow`.
//!
//! Objects are opaque handles created by `gs_*_new`/`gs_*_generate`
//! functions and released with the matching `gs_*_free`. Every fallible call
//! returns a [`GsStatus`]; on failure the message is available from
//! [`gs_last_error_message`] on the same thread. Panics never cross the
//! boundary: they are reported as [`GsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use glueshadow::lemmas::{neutral_one_step_bounds, NeutralBranch};
use glueshadow::perturbation::{generate_pseudo, rng_from_seed};
use glueshadow::shadowing::{check_shadowing, parallel_glue_with, ShadowKind};
use glueshadow::{
    Error, HyperbolicAffine2D, Map, NeutralMap, PerturbationKind, PerturbationSpec, PiecewiseBijectiveMap,
    PiecewiseLinearMap, PseudoTrajectory, ShadowOptions, ShadowingReport, State, TorusLinearMap,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    /// The computation finished but the checked bound does not hold.
    BoundFailure = 1,
    /// Invalid arguments or parameters.
    Usage = 2,
    /// Root finding, gluing or merging failed.
    Numerical = 3,
    NullPointer = 4,
    Panic = 5,
}

/// A map of the interval, the plane or the torus.
pub struct GsMap(Map);

/// A pseudo-trajectory together with its gaps and moments.
pub struct GsPseudo(PseudoTrajectory);

/// Result of a parallel-gluing run.
pub struct GsReport(ShadowingReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> GsStatus {
    set_error(e.to_string());
    if e.is_numerical() {
        GsStatus::Numerical
    } else {
        GsStatus::Usage
    }
}

/// Runs `f`, turning panics into [`GsStatus::Panic`].
fn guard(f: impl FnOnce() -> GsStatus) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == GsStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            GsStatus::Panic
        }
    }
}

fn null() -> GsStatus {
    set_error("null pointer argument");
    GsStatus::NullPointer
}

/// Stores `value` behind `out` as a fresh handle.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
unsafe fn emit<T>(out: *mut *mut T, value: Result<T, Error>) -> GsStatus {
    if out.is_null() {
        return null();
    }
    match value {
        Ok(v) => {
            *out = Box::into_raw(Box::new(v));
            GsStatus::Ok
        }
        Err(e) => {
            *out = ptr::null_mut();
            status_of(&e)
        }
    }
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn gs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `Tx = a x` on `[0, c)` and `b x + 1 - b` on `[c, 1]`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn gs_map_new_piecewise_linear(a: f64, b: f64, c: f64, out: *mut *mut GsMap) -> GsStatus {
    guard(|| emit(out, PiecewiseLinearMap::new(a, b, c).map(|m| GsMap(m.into()))))
}

/// Interval map with neutral fixed points at 0 and 1.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn gs_map_new_neutral(alpha: f64, c: f64, out: *mut *mut GsMap) -> GsStatus {
    guard(|| emit(out, NeutralMap::new(alpha, c).map(|m| GsMap(m.into()))))
}

/// Affine map of the plane with eigenvalues `λ1 > 1 > λ2 > 0` along
/// `e1`, `e2` (two doubles each) and translation `offset`.
///
/// # Safety
/// `e1`, `e2` and `offset` must point to two readable doubles; `out` must be
/// valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn gs_map_new_affine(
    lambda1: f64,
    lambda2: f64,
    e1: *const f64,
    e2: *const f64,
    offset: *const f64,
    out: *mut *mut GsMap,
) -> GsStatus {
    guard(|| {
        if e1.is_null() || e2.is_null() || offset.is_null() {
            return null();
        }
        let v = |p: *const f64| [*p, *p.add(1)];
        let m = HyperbolicAffine2D::new(lambda1, lambda2, v(e1), v(e2), v(offset));
        emit(out, m.map(|m| GsMap(m.into())))
    })
}

/// Linear automorphism of the torus given by a row-major integer matrix.
///
/// # Safety
/// `m` must point to four readable integers; `out` must be valid for a
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn gs_map_new_torus(m: *const i64, out: *mut *mut GsMap) -> GsStatus {
    guard(|| {
        if m.is_null() {
            return null();
        }
        let t = TorusLinearMap::new([[*m, *m.add(1)], [*m.add(2), *m.add(3)]]);
        emit(out, t.map(|t| GsMap(t.into())))
    })
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_map_free(map: *mut GsMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Number of coordinates of a point (1 or 2), 0 for a null map.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_map_dim(map: *const GsMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.space().dim())
}

/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_map_branch_count(map: *const GsMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.branch_count())
}

unsafe fn read_state(map: &Map, p: *const f64) -> Result<State, Error> {
    let dim = map.space().dim();
    State::from_coords(map.space(), std::slice::from_raw_parts(p, dim))
}

unsafe fn write_state(s: &State, out: *mut f64) {
    for (i, v) in s.coords().iter().enumerate() {
        *out.add(i) = *v;
    }
}

/// `out = T x`. Interval points are clamped into `[0, 1]`, torus points
/// reduced mod 1.
///
/// # Safety
/// `x` and `out` must hold `gs_map_dim(map)` doubles.
#[no_mangle]
pub unsafe extern "C" fn gs_map_forward(map: *const GsMap, x: *const f64, out: *mut f64) -> GsStatus {
    guard(|| {
        let Some(m) = map.as_ref() else { return null() };
        if x.is_null() || out.is_null() {
            return null();
        }
        match read_state(&m.0, x) {
            Ok(s) => {
                write_state(&m.0.forward(&s), out);
                GsStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// `out = T_v^{-1} y`, the preimage of `y` in the branch containing `v`.
///
/// # Safety
/// `v`, `y` and `out` must hold `gs_map_dim(map)` doubles.
#[no_mangle]
pub unsafe extern "C" fn gs_map_inverse_branch(
    map: *const GsMap,
    v: *const f64,
    y: *const f64,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let Some(m) = map.as_ref() else { return null() };
        if v.is_null() || y.is_null() || out.is_null() {
            return null();
        }
        let r = read_state(&m.0, v).and_then(|v| {
            let y = read_state(&m.0, y)?;
            m.0.inverse_branch(&v, &y)
        });
        match r {
            Ok(s) => {
                write_state(&s, out);
                GsStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

fn kind_of(kind: c_int) -> Option<PerturbationKind> {
    match kind {
        0 => Some(PerturbationKind::Uniform),
        1 => Some(PerturbationKind::Average),
        2 => Some(PerturbationKind::Rare),
        _ => None,
    }
}

/// Random pseudo-trajectory of `len` points. `kind` is 0 (uniform),
/// 1 (small on average) or 2 (rare); `amplitude_cap` is `D`.
///
/// # Safety
/// `map` must be a live handle; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn gs_pseudo_generate(
    map: *const GsMap,
    kind: c_int,
    epsilon: f64,
    amplitude_cap: f64,
    seed: u64,
    len: usize,
    out: *mut *mut GsPseudo,
) -> GsStatus {
    guard(|| {
        let Some(m) = map.as_ref() else { return null() };
        let Some(kind) = kind_of(kind) else {
            set_error(format!("unknown perturbation kind {kind}"));
            return GsStatus::Usage;
        };
        let spec = PerturbationSpec::new(kind, epsilon, amplitude_cap, seed, len);
        let p = generate_pseudo(&m.0, &spec, &mut rng_from_seed(seed)).map(|g| GsPseudo(g.pseudo));
        emit(out, p)
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_pseudo_free(p: *mut GsPseudo) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of points, 0 for null.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_pseudo_len(p: *const GsPseudo) -> usize {
    p.as_ref().map_or(0, |p| p.0.window().len())
}

/// Number of indices with a non-zero gap, 0 for null.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_pseudo_moment_count(p: *const GsPseudo) -> usize {
    p.as_ref().map_or(0, |p| p.0.moments().len())
}

/// Merges the true segments of `p` by parallel gluing.
///
/// # Safety
/// `map` and `p` must be live handles; `out` must be valid for a pointer
/// write.
#[no_mangle]
pub unsafe extern "C" fn gs_parallel_glue(map: *const GsMap, p: *const GsPseudo, out: *mut *mut GsReport) -> GsStatus {
    guard(|| {
        let (Some(m), Some(p)) = (map.as_ref(), p.as_ref()) else {
            return null();
        };
        emit(
            out,
            parallel_glue_with(&m.0, &p.0, &ShadowOptions::default()).map(GsReport),
        )
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_report_free(r: *mut GsReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// `sup_t ρ(z_t, y_t)`, NaN for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_report_uniform_error(r: *const GsReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.uniform_err)
}

/// Limsup estimate of the running mean errors, NaN for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_report_q_limsup(r: *const GsReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.q_limsup)
}

/// Largest error over the outer halves of the window, NaN for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_report_limit_error(r: *const GsReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.limit_err)
}

/// Largest `ρ(T z_i, z_{i+1})` of the merged orbit, NaN for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_report_defect(r: *const GsReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.defect)
}

/// Number of merge levels, 0 for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_report_level_count(r: *const GsReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.levels.len())
}

/// Copies point `i` (0-based within the window) of the merged orbit.
///
/// # Safety
/// `r` must be a live handle; `out` must hold the map's dimension in doubles.
#[no_mangle]
pub unsafe extern "C" fn gs_report_point(r: *const GsReport, i: usize, out: *mut f64) -> GsStatus {
    guard(|| {
        let Some(r) = r.as_ref() else { return null() };
        if out.is_null() {
            return null();
        }
        match r.0.z.points().get(i) {
            Some(s) => {
                write_state(s, out);
                GsStatus::Ok
            }
            None => {
                set_error(format!("index {i} outside the window of {} points", r.0.z.len()));
                GsStatus::Usage
            }
        }
    })
}

/// Checks the shadowing bound for a perturbation `kind` (as in
/// [`gs_pseudo_generate`]) and functional `functional` (0 uniform,
/// 1 average, 2 limit). Writes the bound (NaN when none applies) and
/// returns `Ok` or `BoundFailure`.
///
/// # Safety
/// `r` must be a live handle; `bound` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gs_report_check(
    r: *const GsReport,
    kind: c_int,
    functional: c_int,
    epsilon: f64,
    bound: *mut f64,
) -> GsStatus {
    guard(|| {
        let Some(r) = r.as_ref() else { return null() };
        let functional = match functional {
            0 => ShadowKind::Uniform,
            1 => ShadowKind::Average,
            2 => ShadowKind::Limit,
            other => {
                set_error(format!("unknown functional {other}"));
                return GsStatus::Usage;
            }
        };
        let Some(kind) = kind_of(kind) else {
            set_error(format!("unknown perturbation kind {kind}"));
            return GsStatus::Usage;
        };
        let v = check_shadowing((kind, functional), epsilon, &r.0);
        if !bound.is_null() {
            *bound = v.bound.unwrap_or(f64::NAN);
        }
        if v.pass {
            GsStatus::Ok
        } else {
            set_error(format!("error {} exceeds bound {:?}", v.delta, v.bound));
            GsStatus::BoundFailure
        }
    })
}

/// Writes the per-index CSV of the run (`y` is the pseudo-trajectory it was
/// computed from) to the UTF-8 path `path`.
///
/// # Safety
/// `r` and `p` must be live handles; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gs_report_write_csv(r: *const GsReport, p: *const GsPseudo, path: *const c_char) -> GsStatus {
    guard(|| {
        let (Some(r), Some(p)) = (r.as_ref(), p.as_ref()) else {
            return null();
        };
        if path.is_null() {
            return null();
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            set_error("path is not valid UTF-8");
            return GsStatus::Usage;
        };
        let res = std::fs::File::create(Path::new(path))
            .map_err(Error::from)
            .and_then(|f| r.0.write_csv(p.0.window(), std::io::BufWriter::new(f)));
        match res {
            Ok(()) => GsStatus::Ok,
            Err(e) => status_of(&e),
        }
    })
}

/// One inverse step of `τ(v) = v + R v^{1+α}` with its lower and upper
/// estimates. `ordered` receives 1 when `u ≤ τ^{-1}(v) ≤ w`.
///
/// # Safety
/// Every output pointer must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gs_neutral_one_step_bounds(
    r: f64,
    alpha: f64,
    v: f64,
    u: *mut f64,
    inv: *mut f64,
    w: *mut f64,
    ordered: *mut c_int,
) -> GsStatus {
    guard(|| {
        let res = NeutralBranch::new(r, alpha).and_then(|nb| neutral_one_step_bounds(&nb, v));
        match res {
            Ok(s) => {
                for (p, val) in [(u, s.u), (inv, s.inv), (w, s.w)] {
                    if !p.is_null() {
                        *p = val;
                    }
                }
                if !ordered.is_null() {
                    *ordered = c_int::from(s.ordered);
                }
                GsStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
