//! C ABI over `lmcf-core`.
//!
//! Objects are opaque handles created by `*_new` functions and released by
//! the matching `*_free`. Every fallible call returns an [`LmcfStatus`]; on
//! failure a message is kept per thread and can be read with
//! [`lmcf_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lmcf_core::ale::{mu_g, solve_level, vertex, AleParams, Sheet, SubtorusAction};
use lmcf_core::flat::{level_set_sample, shrinker_alpha_c, FlatModel, ShrinkerModel};
use lmcf_core::flow::{integrate_flow, AleSlice, FlatSlice, FlowTrajectory, IntegratorConfig};
use lmcf_core::geometry::QuaternionicPoint;
use lmcf_core::singularity::{sample_level, singular_schedule, BlowupWeights};
use lmcf_core::LmcfError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmcfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    OutsideDomain = 4,
    EmptyLevel = 5,
    OnFixedLevel = 6,
    ProjectionFailure = 7,
    BufferTooSmall = 8,
    NotFound = 9,
    Panic = 10,
}

/// ALE quotient with a circle action `H_{a,b}`.
pub struct LmcfAle {
    params: AleParams,
    action: SubtorusAction,
}

/// Flat self-shrinker model on `C^d`.
pub struct LmcfShrinker {
    model: ShrinkerModel,
}

/// Result of a flow integration.
pub struct LmcfTrajectory {
    inner: FlowTrajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &LmcfError) -> LmcfStatus {
    match e {
        LmcfError::NumericalDomain(_)
        | LmcfError::DegenerateFrame(_)
        | LmcfError::CorruptPoint(_) => LmcfStatus::Numerical,
        LmcfError::Dimension { .. } | LmcfError::Config { .. } => LmcfStatus::InvalidArgument,
        LmcfError::OutsideDomain(_)
        | LmcfError::OutsidePolygon { .. }
        | LmcfError::OutsideChart { .. }
        | LmcfError::BoundaryAmbiguity { .. }
        | LmcfError::NotTangent(_) => LmcfStatus::OutsideDomain,
        LmcfError::EmptyLevel(_) | LmcfError::EmptyWindow => LmcfStatus::EmptyLevel,
        LmcfError::OnFixedLevel { .. } | LmcfError::FixedPointHit { .. } => {
            LmcfStatus::OnFixedLevel
        }
        LmcfError::ProjectionFailure { .. } => LmcfStatus::ProjectionFailure,
        LmcfError::Io(_) => LmcfStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (LmcfStatus, String)>>(f: F) -> LmcfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LmcfStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            LmcfStatus::Panic
        }
    }
}

fn core<T>(r: lmcf_core::Result<T>) -> Result<T, (LmcfStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (LmcfStatus, String) {
    (LmcfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (LmcfStatus, String) {
    (LmcfStatus::InvalidArgument, msg.into())
}

unsafe fn slice<'a>(
    p: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (LmcfStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(
    p: *mut f64,
    len: usize,
    need: usize,
    what: &str,
) -> Result<&'a mut [f64], (LmcfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err((
            LmcfStatus::BufferTooSmall,
            format!("{what} needs {need} entries, got {len}"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (LmcfStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), (LmcfStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn sheet_of(index: u32) -> Result<Sheet, (LmcfStatus, String)> {
    Sheet::ALL
        .get(index as usize)
        .copied()
        .ok_or_else(|| invalid(format!("sheet index {index} is not in 0..4")))
}

fn integrator(step: f64) -> IntegratorConfig {
    if step > 0.0 {
        IntegratorConfig {
            step,
            ..Default::default()
        }
    } else {
        IntegratorConfig::default()
    }
}

/// Version string of the library, NUL-terminated and static.
#[no_mangle]
pub extern "C" fn lmcf_version() -> *const c_char {
    static V: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(s) => s,
            Err(_) => panic!("version contains NUL"),
        };
    V.as_ptr()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lmcf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates an ALE quotient with `n` parameters `alpha[0..n]`, offset `h0`
/// and the circle action `(a, b)`.
///
/// # Safety
/// `alpha` must be valid for `n` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_new(
    n: usize,
    alpha: *const f64,
    h0: f64,
    a: i64,
    b: i64,
    out: *mut *mut LmcfAle,
) -> LmcfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let alpha = slice(alpha, n, "alpha")?.to_vec();
        let params = core(AleParams::new(alpha, h0))?;
        let action = core(SubtorusAction::new(a, b, n))?;
        out.write(Box::into_raw(Box::new(LmcfAle { params, action })));
        Ok(())
    })
}

/// Releases an ALE handle. Null is ignored.
///
/// # Safety
/// `h` must come from `lmcf_ale_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_free(h: *mut LmcfAle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of real-slice coordinates of a point, `2(n+1)`.
///
/// # Safety
/// `h` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_slice_dim(h: *const LmcfAle) -> usize {
    h.as_ref().map_or(0, |h| 2 * (h.params.n() + 1))
}

/// Moment image `(x, y)` of the fixed point `P_k`.
///
/// # Safety
/// `h` must be a live handle, `out_xy` valid for two writes.
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_vertex(
    h: *const LmcfAle,
    k: usize,
    out_xy: *mut f64,
) -> LmcfStatus {
    guard(|| {
        let h = handle(h, "handle")?;
        if k > h.params.n() {
            return Err(invalid(format!("k = {k} exceeds n = {}", h.params.n())));
        }
        let out = out_slice(out_xy, 2, 2, "out_xy")?;
        let (x, y) = vertex(&h.params, k);
        out.copy_from_slice(&[x, y]);
        Ok(())
    })
}

/// Real-slice point `(z_0..z_n, w_0..w_n)` over `(x, y)` on sheet `0..4`
/// (`++, -+, +-, --`).
///
/// # Safety
/// `h` must be a live handle, `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_solve_level(
    h: *const LmcfAle,
    x: f64,
    y: f64,
    sheet: u32,
    out: *mut f64,
    len: usize,
) -> LmcfStatus {
    guard(|| {
        let h = handle(h, "handle")?;
        let sheet = sheet_of(sheet)?;
        let q = core(solve_level(&h.params, x, y, sheet))?;
        let p = AleSlice::from_rep(q.rep());
        out_slice(out, len, p.len(), "out")?.copy_from_slice(&p);
        Ok(())
    })
}

/// Moment image of a real-slice point of length `2(n+1)`.
///
/// # Safety
/// `h` must be a live handle, `point` valid for `len` reads, `out_xy` for two writes.
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_mu_g(
    h: *const LmcfAle,
    point: *const f64,
    len: usize,
    out_xy: *mut f64,
) -> LmcfStatus {
    guard(|| {
        let h = handle(h, "handle")?;
        let m = h.params.n() + 1;
        if len != 2 * m {
            return Err(invalid(format!("point needs {} entries, got {len}", 2 * m)));
        }
        let p = slice(point, len, "point")?;
        let rep = core(QuaternionicPoint::from_real(&p[..m], &p[m..]))?;
        let (x, y) = core(mu_g(&h.params, &rep))?;
        out_slice(out_xy, 2, 2, "out_xy")?.copy_from_slice(&[x, y]);
        Ok(())
    })
}

/// Singular times `t_0..t_n` of the level `c0` and the first singular
/// vertex. `out_k0` is set to -1 and `out_t` to NaN when the flow never
/// becomes singular.
///
/// # Safety
/// `h` must be a live handle, `out_times` valid for `len` writes, the
/// scalar outputs for one write each.
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_schedule(
    h: *const LmcfAle,
    c0: f64,
    out_times: *mut f64,
    len: usize,
    out_k0: *mut i64,
    out_t: *mut f64,
) -> LmcfStatus {
    guard(|| {
        let h = handle(h, "handle")?;
        let s = core(singular_schedule(&h.params, h.action, c0))?;
        if !s.times.is_empty() {
            out_slice(out_times, len, s.times.len(), "out_times")?.copy_from_slice(&s.times);
        }
        put(out_k0, s.k0.map_or(-1, |k| k as i64), "out_k0")?;
        put(out_t, s.first_singular.unwrap_or(f64::NAN), "out_t")?;
        Ok(())
    })
}

/// Weights `(λ1, λ2)` of the action in the chart at `P_k0`.
///
/// # Safety
/// `h` must be a live handle, outputs valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_blowup_weights(
    h: *const LmcfAle,
    k0: usize,
    out_l1: *mut i64,
    out_l2: *mut i64,
) -> LmcfStatus {
    guard(|| {
        let h = handle(h, "handle")?;
        let w = core(BlowupWeights::new(h.params.n(), h.action, k0))?;
        put(out_l1, w.lambda1, "out_l1")?;
        put(out_l2, w.lambda2, "out_l2")
    })
}

/// Integrates `per_sheet` seeds on each sheet of the level `c0` up to
/// `horizon` (or just before the first singular time). `step <= 0` selects
/// the default step.
///
/// # Safety
/// `h` must be a live handle, `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lmcf_ale_flow(
    h: *const LmcfAle,
    c0: f64,
    per_sheet: usize,
    horizon: f64,
    step: f64,
    out: *mut *mut LmcfTrajectory,
) -> LmcfStatus {
    guard(|| {
        let h = handle(h, "handle")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let seeds: Vec<Vec<f64>> = core(sample_level(&h.params, h.action, c0, per_sheet, 2.0))?
            .into_iter()
            .map(|s| s.point)
            .collect();
        let f = AleSlice::new(h.params.clone(), h.action);
        let tr = core(integrate_flow(&f, &seeds, c0, horizon, &integrator(step)))?;
        out.write(Box::into_raw(Box::new(LmcfTrajectory { inner: tr })));
        Ok(())
    })
}

/// Creates a flat shrinker with nonzero integer weights `weights[0..d]`.
///
/// # Safety
/// `weights` must be valid for `d` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn lmcf_shrinker_new(
    weights: *const i64,
    d: usize,
    out: *mut *mut LmcfShrinker,
) -> LmcfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if d == 0 || weights.is_null() {
            return Err(invalid("weights must be a non-empty array"));
        }
        let w = std::slice::from_raw_parts(weights, d).to_vec();
        let model = core(ShrinkerModel::new(w))?;
        out.write(Box::into_raw(Box::new(LmcfShrinker { model })));
        Ok(())
    })
}

/// Releases a shrinker handle. Null is ignored.
///
/// # Safety
/// `h` must come from `lmcf_shrinker_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lmcf_shrinker_free(h: *mut LmcfShrinker) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Soliton constant `α_c` of the level `c`.
///
/// # Safety
/// `h` must be a live handle, `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lmcf_shrinker_alpha_c(
    h: *const LmcfShrinker,
    c: f64,
    out: *mut f64,
) -> LmcfStatus {
    guard(|| {
        let h = handle(h, "handle")?;
        let a = core(shrinker_alpha_c(&h.model, c))?;
        put(out, a, "out")
    })
}

/// Integrates `count` seeds of the level `c0` drawn with `seed`.
///
/// # Safety
/// `h` must be a live handle, `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lmcf_shrinker_flow(
    h: *const LmcfShrinker,
    c0: f64,
    count: usize,
    seed: u64,
    horizon: f64,
    step: f64,
    out: *mut *mut LmcfTrajectory,
) -> LmcfStatus {
    guard(|| {
        let h = handle(h, "handle")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let f = FlatSlice::new(FlatModel::Shrinker(h.model.clone()));
        let seeds = core(level_set_sample(&f.model, c0, count, seed))?;
        let tr = core(integrate_flow(&f, &seeds, c0, horizon, &integrator(step)))?;
        out.write(Box::into_raw(Box::new(LmcfTrajectory { inner: tr })));
        Ok(())
    })
}

/// Releases a trajectory. Null is ignored.
///
/// # Safety
/// `t` must come from a flow call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lmcf_trajectory_free(t: *mut LmcfTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of time samples (0 for null).
///
/// # Safety
/// `t` must be a live trajectory or null.
#[no_mangle]
pub unsafe extern "C" fn lmcf_trajectory_samples(t: *const LmcfTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.times.len())
}

/// Number of seeds (0 for null).
///
/// # Safety
/// `t` must be a live trajectory or null.
#[no_mangle]
pub unsafe extern "C" fn lmcf_trajectory_seeds(t: *const LmcfTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.seed_count())
}

/// Coordinates per point (0 for null).
///
/// # Safety
/// `t` must be a live trajectory or null.
#[no_mangle]
pub unsafe extern "C" fn lmcf_trajectory_dim(t: *const LmcfTrajectory) -> usize {
    t.as_ref()
        .and_then(|t| t.inner.points.first()?.first().map(|p| p.len()))
        .unwrap_or(0)
}

/// Largest drift-law residual (NaN for null).
///
/// # Safety
/// `t` must be a live trajectory or null.
#[no_mangle]
pub unsafe extern "C" fn lmcf_trajectory_max_drift(t: *const LmcfTrajectory) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.inner.max_drift())
}

/// Time of sample `i`.
///
/// # Safety
/// `t` must be a live trajectory, `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lmcf_trajectory_time(
    t: *const LmcfTrajectory,
    i: usize,
    out: *mut f64,
) -> LmcfStatus {
    guard(|| {
        let t = handle(t, "trajectory")?;
        let v = *t
            .inner
            .times
            .get(i)
            .ok_or_else(|| (LmcfStatus::NotFound, format!("sample {i} out of range")))?;
        put(out, v, "out")
    })
}

/// Position of seed `s` at sample `i`.
///
/// # Safety
/// `t` must be a live trajectory, `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lmcf_trajectory_point(
    t: *const LmcfTrajectory,
    i: usize,
    s: usize,
    out: *mut f64,
    len: usize,
) -> LmcfStatus {
    guard(|| {
        let t = handle(t, "trajectory")?;
        let p = t
            .inner
            .points
            .get(i)
            .and_then(|snap| snap.get(s))
            .ok_or_else(|| {
                (
                    LmcfStatus::NotFound,
                    format!("sample {i}, seed {s} out of range"),
                )
            })?;
        out_slice(out, len, p.len(), "out")?.copy_from_slice(p);
        Ok(())
    })
}
