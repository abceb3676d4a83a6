//! C ABI over the `scenegen` library.
//!
//! Objects cross the boundary as opaque handles created by `sg_*_from_json`,
//! `sg_*_fit`, `sg_*_parse` or `sg_tiles_from_spline` and released with the
//! matching `sg_*_free`.
//! Every fallible function returns an [`SgStatus`]; on failure a description
//! is available from [`sg_last_error`] on the same thread. Strings returned
//! through `char **` out-parameters must be released with [`sg_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use scenegen::geometry::{distance_lp, fit_spline, CurveMetricParams, Point2, Spline2D};
use scenegen::stl::{monitor, parse_stl, StlFormula, Trace};
use scenegen::tiles::{rasterize, synthesize, RasterParams, TileGrid};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    Geometry = 4,
    Stl = 5,
    Tiles = 6,
    OutOfRange = 7,
    Panic = 99,
}

/// A clamped cubic B-spline.
pub struct SgSpline {
    inner: Spline2D,
}

/// A parsed STL formula.
pub struct SgFormula {
    inner: StlFormula,
}

/// Named signals on a shared time axis.
pub struct SgTrace {
    inner: Trace,
}

/// A grid of 4-neighbor tile codes.
pub struct SgTileGrid {
    inner: TileGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SgStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: SgStatus, message: impl ToString) -> FfiResult<T> {
    Err(Failure(status, message.to_string()))
}

/// Runs `f`, converting errors and panics into a status and the thread's
/// last error message.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(SgStatus::NullArgument, "null string argument");
    }
    CStr::from_ptr(p).to_str().or_else(|e| fail(SgStatus::InvalidUtf8, e))
}

unsafe fn ref_arg<'a, T>(p: *const T) -> FfiResult<&'a T> {
    p.as_ref()
        .map_or_else(|| fail(SgStatus::NullArgument, "null handle"), Ok)
}

unsafe fn out_arg<'a, T>(p: *mut T) -> FfiResult<&'a mut T> {
    p.as_mut()
        .map_or_else(|| fail(SgStatus::NullArgument, "null output pointer"), Ok)
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    *out_arg(out)? = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, text: String) -> FfiResult<()> {
    let c = CString::new(text).or_else(|e| fail(SgStatus::InvalidUtf8, e))?;
    *out_arg(out)? = c.into_raw();
    Ok(())
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. Owned by the
/// library; valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn sg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn sg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a spline file (`{"closed": …, "control_points": [[x, y], …]}`).
#[no_mangle]
pub unsafe extern "C" fn sg_spline_from_json(json: *const c_char, out: *mut *mut SgSpline) -> SgStatus {
    guard(|| {
        let spline: Spline2D = serde_json::from_str(str_arg(json)?).or_else(|e| fail(SgStatus::InvalidJson, e))?;
        put_handle(out, SgSpline { inner: spline })
    })
}

/// Least-squares fit with chord-length parameters. `xy` holds `n_points`
/// interleaved coordinate pairs.
#[no_mangle]
pub unsafe extern "C" fn sg_spline_fit(
    xy: *const f64,
    n_points: usize,
    n_ctrl: usize,
    out: *mut *mut SgSpline,
) -> SgStatus {
    guard(|| {
        if xy.is_null() {
            return fail(SgStatus::NullArgument, "null point buffer");
        }
        let coords = std::slice::from_raw_parts(xy, 2 * n_points);
        let points: Vec<Point2> = coords.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect();
        let fit = fit_spline(&points, n_ctrl).or_else(|e| fail(SgStatus::Geometry, e))?;
        put_handle(out, SgSpline { inner: fit.spline })
    })
}

#[no_mangle]
pub unsafe extern "C" fn sg_spline_control_point_count(spline: *const SgSpline) -> usize {
    spline.as_ref().map_or(0, |s| s.inner.len())
}

/// Evaluates the curve at `t` in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn sg_spline_eval(spline: *const SgSpline, t: f64, out_x: *mut f64, out_y: *mut f64) -> SgStatus {
    guard(|| {
        let p = ref_arg(spline)?
            .inner
            .eval(t)
            .or_else(|e| fail(SgStatus::OutOfRange, e))?;
        *out_arg(out_x)? = p.x;
        *out_arg(out_y)? = p.y;
        Ok(())
    })
}

/// L_p distance over the parameter domain; pass `INFINITY` for the supremum.
#[no_mangle]
pub unsafe extern "C" fn sg_spline_distance(
    a: *const SgSpline,
    b: *const SgSpline,
    p: f64,
    samples: usize,
    out: *mut f64,
) -> SgStatus {
    guard(|| {
        let params = CurveMetricParams::new(p, samples).or_else(|e| fail(SgStatus::Geometry, e))?;
        let d = distance_lp(&ref_arg(a)?.inner, &ref_arg(b)?.inner, params).or_else(|e| fail(SgStatus::Geometry, e))?;
        *out_arg(out)? = d;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sg_spline_to_json(spline: *const SgSpline, out: *mut *mut c_char) -> SgStatus {
    guard(|| {
        let text = serde_json::to_string(&ref_arg(spline)?.inner).or_else(|e| fail(SgStatus::InvalidJson, e))?;
        put_string(out, text)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sg_spline_free(spline: *mut SgSpline) {
    free_handle(spline);
}

/// Parses STL text such as `G[0,10](d1 < 5)`.
#[no_mangle]
pub unsafe extern "C" fn sg_formula_parse(text: *const c_char, out: *mut *mut SgFormula) -> SgStatus {
    guard(|| {
        let formula = parse_stl(str_arg(text)?).or_else(|e| fail(SgStatus::Stl, e))?;
        put_handle(out, SgFormula { inner: formula })
    })
}

/// Fully parenthesized text of the formula.
#[no_mangle]
pub unsafe extern "C" fn sg_formula_to_string(formula: *const SgFormula, out: *mut *mut c_char) -> SgStatus {
    guard(|| put_string(out, ref_arg(formula)?.inner.to_string()))
}

#[no_mangle]
pub unsafe extern "C" fn sg_formula_free(formula: *mut SgFormula) {
    free_handle(formula);
}

/// Parses a trace file (`{"timestamps": […], "signals": {"name": […]}}`).
#[no_mangle]
pub unsafe extern "C" fn sg_trace_from_json(json: *const c_char, out: *mut *mut SgTrace) -> SgStatus {
    guard(|| {
        let trace: Trace = serde_json::from_str(str_arg(json)?).or_else(|e| fail(SgStatus::InvalidJson, e))?;
        put_handle(out, SgTrace { inner: trace })
    })
}

#[no_mangle]
pub unsafe extern "C" fn sg_trace_free(trace: *mut SgTrace) {
    free_handle(trace);
}

/// Boolean verdict and robustness of `formula` at the first sample.
#[no_mangle]
pub unsafe extern "C" fn sg_monitor(
    formula: *const SgFormula,
    trace: *const SgTrace,
    out_satisfied: *mut bool,
    out_robustness: *mut f64,
) -> SgStatus {
    guard(|| {
        let verdict = monitor(&ref_arg(formula)?.inner, &ref_arg(trace)?.inner).or_else(|e| fail(SgStatus::Stl, e))?;
        *out_arg(out_satisfied)? = verdict.satisfied;
        *out_arg(out_robustness)? = verdict.robustness;
        Ok(())
    })
}

/// Rasterizes `spline` into a `width` x `height` grid and codes the tiles.
#[no_mangle]
pub unsafe extern "C" fn sg_tiles_from_spline(
    spline: *const SgSpline,
    width: usize,
    height: usize,
    road_halfwidth: f64,
    out: *mut *mut SgTileGrid,
) -> SgStatus {
    guard(|| {
        let params = RasterParams {
            grid_width: width,
            grid_height: height,
            road_halfwidth,
            ..RasterParams::default()
        };
        let mask = rasterize(&ref_arg(spline)?.inner, &params).or_else(|e| fail(SgStatus::Tiles, e))?;
        put_handle(
            out,
            SgTileGrid {
                inner: synthesize(&mask),
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn sg_tile_grid_from_json(json: *const c_char, out: *mut *mut SgTileGrid) -> SgStatus {
    guard(|| {
        let grid: TileGrid = serde_json::from_str(str_arg(json)?).or_else(|e| fail(SgStatus::InvalidJson, e))?;
        put_handle(out, SgTileGrid { inner: grid })
    })
}

#[no_mangle]
pub unsafe extern "C" fn sg_tile_grid_width(grid: *const SgTileGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.width())
}

#[no_mangle]
pub unsafe extern "C" fn sg_tile_grid_height(grid: *const SgTileGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.height())
}

/// Tile code 0..=15 at `(x, y)`, or -1 for a non-road cell.
#[no_mangle]
pub unsafe extern "C" fn sg_tile_grid_get(grid: *const SgTileGrid, x: usize, y: usize, out_code: *mut i32) -> SgStatus {
    guard(|| {
        let grid = &ref_arg(grid)?.inner;
        if x >= grid.width() || y >= grid.height() {
            return fail(
                SgStatus::OutOfRange,
                format!("cell ({x}, {y}) outside {}x{} grid", grid.width(), grid.height()),
            );
        }
        *out_arg(out_code)? = grid.get(x, y).map_or(-1, |c| i32::from(c.value()));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sg_tile_grid_to_json(grid: *const SgTileGrid, out: *mut *mut c_char) -> SgStatus {
    guard(|| {
        let text = serde_json::to_string(&ref_arg(grid)?.inner).or_else(|e| fail(SgStatus::InvalidJson, e))?;
        put_string(out, text)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sg_tile_grid_free(grid: *mut SgTileGrid) {
    free_handle(grid);
}
