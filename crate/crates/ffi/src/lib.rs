//! C ABI over `structsparse`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `ss_*_new`/`ss_*_from_json`/solver call and released by the matching
//! `ss_*_free`. Fallible functions return an [`SsStatus`]; on failure the
//! message is available from [`ss_last_error`] on the same thread.
//!
//! Matrices are passed row-major. Indices are zero-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use structsparse::baselines::{lambda_grid, lambda_max, lasso_path_with, omp, LassoConfig, PathPoint};
use structsparse::blocks::BlockSetSpec;
use structsparse::signals::recovery_error;
use structsparse::{
    struct_omp, BlockSet, Bits, CodingScheme, CoefficientVector, DesignMatrix, Error, GreedyConfig, SchemeSpec,
    SupportSet,
};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    Infeasible = 5,
    InvalidStructure = 6,
    Parse = 7,
    OutOfRange = 8,
    Internal = 9,
}

impl From<&Error> for SsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionMismatch(_) => SsStatus::DimensionMismatch,
            Error::InvalidArgument(_) | Error::TooLarge { .. } | Error::EmptyPath => SsStatus::InvalidArgument,
            Error::NonFinite(_) => SsStatus::NonFinite,
            Error::Infeasible(_) => SsStatus::Infeasible,
            Error::InvalidBlockSet(_) | Error::InvalidTree(_) => SsStatus::InvalidStructure,
            Error::Json(_) | Error::Csv(_) | Error::Parse(_) => SsStatus::Parse,
            Error::Io(_) => SsStatus::Internal,
        }
    }
}

/// Row-major design matrix.
pub struct SsDesign(DesignMatrix);

/// Candidate base blocks.
pub struct SsBlockSet(BlockSet);

/// Coding scheme pricing support sets.
pub struct SsScheme(Box<dyn CodingScheme>);

/// Solution path of one solver run.
pub struct SsPath {
    points: Vec<PathPoint>,
    complexity: Vec<f64>,
    selected: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(SsStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Fail>;

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> SsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SsStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> FfiResult<&'a mut [f64]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(SsStatus::Parse, format!("{what} is not valid UTF-8")))
}

fn check_len(got: usize, want: usize, what: &str) -> FfiResult<()> {
    if got != want {
        return Err(Fail(
            SsStatus::DimensionMismatch,
            format!("{what} has length {got}, expected {want}"),
        ));
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next `ss_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies an `n × p` row-major matrix.
///
/// # Safety
/// `data` must point to `n * p` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_design_new(data: *const f64, n: usize, p: usize, out: *mut *mut SsDesign) -> SsStatus {
    guard(|| {
        let len = n
            .checked_mul(p)
            .ok_or_else(|| Fail(SsStatus::InvalidArgument, format!("{n} x {p} overflows")))?;
        let values = input(data, len, "data")?;
        put(out, SsDesign(DesignMatrix::from_row_major(n, p, values)?), "out")
    })
}

/// # Safety
/// `design` must come from [`ss_design_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_design_free(design: *mut SsDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// # Safety
/// `design` must be valid; `n` and `p` writable or null.
#[no_mangle]
pub unsafe extern "C" fn ss_design_dims(design: *const SsDesign, n: *mut usize, p: *mut usize) -> SsStatus {
    guard(|| {
        let d = &borrow(design, "design")?.0;
        if let Some(n) = n.as_mut() {
            *n = d.n();
        }
        if let Some(p) = p.as_mut() {
            *p = d.p();
        }
        Ok(())
    })
}

/// Builds a block set from its JSON descriptor, e.g.
/// `{"kind": "line", "p": 64}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_blocks_from_json(json: *const c_char, out: *mut *mut SsBlockSet) -> SsStatus {
    guard(|| {
        let spec: BlockSetSpec = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        put(out, SsBlockSet(spec.build()?), "out")
    })
}

/// # Safety
/// `blocks` must come from [`ss_blocks_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_blocks_free(blocks: *mut SsBlockSet) {
    if !blocks.is_null() {
        drop(Box::from_raw(blocks));
    }
}

/// Number of base blocks, or 0 for a null handle.
///
/// # Safety
/// `blocks` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ss_blocks_len(blocks: *const SsBlockSet) -> usize {
    blocks.as_ref().map_or(0, |b| b.0.len())
}

/// Builds a coding scheme from its JSON descriptor, e.g.
/// `{"kind": "graph", "graph": {"kind": "line", "p": 64}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_scheme_from_json(json: *const c_char, out: *mut *mut SsScheme) -> SsStatus {
    guard(|| {
        let spec: SchemeSpec = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        put(out, SsScheme(spec.build()?), "out")
    })
}

/// # Safety
/// `scheme` must come from [`ss_scheme_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_scheme_free(scheme: *mut SsScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// `c(F) = |F| + cl(F)` for the support given by `indices`. Writes
/// `INFINITY` when the scheme cannot encode `F`.
///
/// # Safety
/// `indices` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_scheme_complexity(
    scheme: *const SsScheme,
    indices: *const usize,
    len: usize,
    out: *mut f64,
) -> SsStatus {
    guard(|| {
        let s = &borrow(scheme, "scheme")?.0;
        let idx = if len == 0 {
            &[][..]
        } else if indices.is_null() {
            return Err(null("indices"));
        } else {
            slice::from_raw_parts(indices, len)
        };
        if let Some(&bad) = idx.iter().find(|&&j| j >= s.dim()) {
            return Err(Fail(
                SsStatus::OutOfRange,
                format!("index {bad} outside 0..{}", s.dim()),
            ));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = match s.complexity(&SupportSet::new(idx.to_vec())) {
            Bits::Finite(v) => v,
            Bits::Infinite => f64::INFINITY,
        };
        Ok(())
    })
}

/// Structured greedy solver with complexity budget `budget` (pass
/// `INFINITY` for none). The selected point is the last one within budget.
///
/// # Safety
/// Handles must be valid; `y` must point to `y_len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_structomp(
    design: *const SsDesign,
    y: *const f64,
    y_len: usize,
    blocks: *const SsBlockSet,
    scheme: *const SsScheme,
    budget: f64,
    out: *mut *mut SsPath,
) -> SsStatus {
    guard(|| {
        let x = &borrow(design, "design")?.0;
        let y = input(y, y_len, "y")?;
        let blocks = &borrow(blocks, "blocks")?.0;
        let scheme = &borrow(scheme, "scheme")?.0;
        let path = struct_omp(x, y, blocks, scheme.as_ref(), &GreedyConfig::with_budget(budget))?;
        let complexity = path.states.iter().map(|s| s.complexity.finite().unwrap_or(f64::INFINITY)).collect();
        let result = SsPath {
            points: path.to_path_points(),
            complexity,
            selected: path.within_budget,
        };
        put(out, result, "out")
    })
}

/// Orthogonal matching pursuit for up to `max_steps` atoms. The selected
/// point is the last one.
///
/// # Safety
/// `design` must be valid; `y` must point to `y_len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_omp(
    design: *const SsDesign,
    y: *const f64,
    y_len: usize,
    max_steps: usize,
    out: *mut *mut SsPath,
) -> SsStatus {
    guard(|| {
        let x = &borrow(design, "design")?.0;
        let y = input(y, y_len, "y")?;
        let points = omp(x, y, max_steps)?;
        put(out, baseline_path(points), "out")
    })
}

/// Lasso path on `points` log-spaced values of `λ` from `λ_max` down to
/// `ratio · λ_max`, solved to relative KKT tolerance `tol`. The selected
/// point is the last one.
///
/// # Safety
/// `design` must be valid; `y` must point to `y_len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_lasso(
    design: *const SsDesign,
    y: *const f64,
    y_len: usize,
    points: usize,
    ratio: f64,
    tol: f64,
    out: *mut *mut SsPath,
) -> SsStatus {
    guard(|| {
        let x = &borrow(design, "design")?.0;
        let y = input(y, y_len, "y")?;
        if !(ratio > 0.0 && ratio < 1.0) || points == 0 {
            return Err(Fail(
                SsStatus::InvalidArgument,
                format!("need points > 0 and ratio in (0, 1), got {points} and {ratio}"),
            ));
        }
        let grid = lambda_grid(lambda_max(x, y), points, ratio);
        let cfg = LassoConfig {
            tol,
            ..LassoConfig::default()
        };
        let points = lasso_path_with(x, y, &grid, &cfg)?;
        put(out, baseline_path(points), "out")
    })
}

fn baseline_path(points: Vec<PathPoint>) -> SsPath {
    let complexity = points.iter().map(|p| p.coefficients.nnz() as f64).collect();
    SsPath {
        selected: points.len().saturating_sub(1),
        points,
        complexity,
    }
}

/// # Safety
/// `path` must come from a solver call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_path_free(path: *mut SsPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Number of points on the path, or 0 for a null handle.
///
/// # Safety
/// `path` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ss_path_len(path: *const SsPath) -> usize {
    path.as_ref().map_or(0, |p| p.points.len())
}

/// Index of the solver's own choice along the path.
///
/// # Safety
/// `path` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ss_path_selected(path: *const SsPath) -> usize {
    path.as_ref().map_or(0, |p| p.selected)
}

/// Copies the coefficients of point `index` into `out[0..p]`, and its
/// residual norm and complexity into the optional scalars. For baselines
/// the complexity is the number of nonzeros.
///
/// # Safety
/// `path` must be valid; `out` must point to `p` writable doubles; the
/// scalar outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn ss_path_point(
    path: *const SsPath,
    index: usize,
    out: *mut f64,
    p: usize,
    residual_norm: *mut f64,
    complexity: *mut f64,
) -> SsStatus {
    guard(|| {
        let path = borrow(path, "path")?;
        let pt = path.points.get(index).ok_or_else(|| {
            Fail(
                SsStatus::OutOfRange,
                format!("point {index} outside 0..{}", path.points.len()),
            )
        })?;
        check_len(p, pt.coefficients.len(), "out")?;
        output(out, p, "out")?.copy_from_slice(pt.coefficients.values());
        if let Some(r) = residual_norm.as_mut() {
            *r = pt.residual_norm;
        }
        if let Some(c) = complexity.as_mut() {
            *c = path.complexity[index];
        }
        Ok(())
    })
}

/// `‖est - truth‖₂ / ‖truth‖₂`.
///
/// # Safety
/// `est` and `truth` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_recovery_error(
    est: *const f64,
    truth: *const f64,
    len: usize,
    out: *mut f64,
) -> SsStatus {
    guard(|| {
        let est = CoefficientVector::new(input(est, len, "est")?.to_vec());
        let truth = CoefficientVector::new(input(truth, len, "truth")?.to_vec());
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = recovery_error(&est, &truth)?;
        Ok(())
    })
}
