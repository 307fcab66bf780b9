//! C ABI for `maxinfo`.
//!
//! Every fallible function returns an [`MxStatus`]. On failure a message is
//! kept per thread and can be read with [`mx_last_error_message`]. Objects
//! are opaque handles created by `*_new`/`*_read`/`mx_select` and released
//! with the matching `*_free`. Passing NULL to a `*_free` is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use maxinfo::linalg::{rect_vol, EmbeddingMatrix, Matrix};
use maxinfo::metrics::uniform_sample;
use maxinfo::pipeline::{select, MaxInfoConfig, Mode, SelectionReport, TolConvention};
use maxinfo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MxStatus {
    Ok = 0,
    NullPointer = 1,
    /// Empty, non-finite or otherwise unusable input data.
    InvalidInput = 2,
    /// Configuration, count or chunking out of range.
    InvalidConfig = 3,
    /// Malformed file contents.
    Format = 4,
    Io = 5,
    Numerical = 6,
    /// Output buffer smaller than the result.
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MxMode {
    Fast = 0,
    Slow = 1,
    Chunked = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MxTolConvention {
    /// Stop threshold `sqrt(1 + tol^2)`.
    Sqrt1p = 0,
    /// Stop threshold `tol`.
    Literal = 1,
}

/// Embedding matrix, one row per frame.
pub struct MxMatrix(EmbeddingMatrix);

/// Selection parameters.
pub struct MxConfig(MaxInfoConfig);

/// Result of [`mx_select`].
pub struct MxReport(SelectionReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) => MxStatus::InvalidInput,
            Error::InvalidConfig(_) | Error::InvalidCount(_) | Error::InvalidChunking(_) => {
                MxStatus::InvalidConfig
            }
            Error::Format(_) => MxStatus::Format,
            Error::Io { .. } => MxStatus::Io,
            _ => MxStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MxStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MxStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside maxinfo");
            MxStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(MxStatus::InvalidInput, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn copy_out(values: &[usize], buf: *mut usize, cap: usize, written: *mut usize) -> Result<(), Failure> {
    if !written.is_null() {
        *written = values.len();
    }
    if cap < values.len() {
        return Err(Failure(
            MxStatus::BufferTooSmall,
            format!("need {} slots, buffer has {cap}", values.len()),
        ));
    }
    if !values.is_empty() {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    Ok(())
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn mx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies a row-major `rows x cols` f32 buffer into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mx_matrix_from_f32(
    data: *const f32,
    rows: usize,
    cols: usize,
    out: *mut *mut MxMatrix,
) -> MxStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(MxStatus::InvalidInput, "rows * cols overflows".into()))?;
        let values = std::slice::from_raw_parts(data, len).iter().map(|&v| f64::from(v)).collect();
        write_out(out, MxMatrix(EmbeddingMatrix::new(rows, cols, values)?))
    })
}

/// Copies a row-major `rows x cols` f64 buffer into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mx_matrix_from_f64(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut MxMatrix,
) -> MxStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(MxStatus::InvalidInput, "rows * cols overflows".into()))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        write_out(out, MxMatrix(EmbeddingMatrix::new(rows, cols, values)?))
    })
}

/// Reads an MXIF embedding file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mx_matrix_read(path: *const c_char, out: *mut *mut MxMatrix) -> MxStatus {
    guard(|| {
        let p = path_arg(path)?;
        write_out(out, MxMatrix(maxinfo::io::read_embeddings(p)?))
    })
}

/// Reads a headerless numeric CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mx_matrix_read_csv(path: *const c_char, out: *mut *mut MxMatrix) -> MxStatus {
    guard(|| {
        let p = path_arg(path)?;
        write_out(out, MxMatrix(maxinfo::io::read_csv_embeddings(p)?))
    })
}

/// # Safety
/// `m` must be NULL or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn mx_matrix_rows(m: *const MxMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be NULL or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn mx_matrix_cols(m: *const MxMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// # Safety
/// `m` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mx_matrix_free(m: *mut MxMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// New configuration with the library defaults.
#[no_mangle]
pub extern "C" fn mx_config_new() -> *mut MxConfig {
    Box::into_raw(Box::new(MxConfig(MaxInfoConfig::default())))
}

/// # Safety
/// `c` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mx_config_free(c: *mut MxConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

unsafe fn with_config(c: *mut MxConfig, f: impl FnOnce(&mut MaxInfoConfig)) -> MxStatus {
    guard(|| {
        let c = c.as_mut().ok_or_else(|| null("config"))?;
        f(&mut c.0);
        Ok(())
    })
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn mx_config_set_rank(c: *mut MxConfig, rank: usize) -> MxStatus {
    with_config(c, |c| c.rank = rank)
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn mx_config_set_tol(c: *mut MxConfig, tol: f64) -> MxStatus {
    with_config(c, |c| c.tol = tol)
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn mx_config_set_bounds(c: *mut MxConfig, min_out: usize, max_out: usize) -> MxStatus {
    with_config(c, |c| {
        c.min_out = min_out;
        c.max_out = max_out;
    })
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn mx_config_set_mode(c: *mut MxConfig, mode: MxMode) -> MxStatus {
    with_config(c, |c| {
        c.mode = match mode {
            MxMode::Fast => Mode::Fast,
            MxMode::Slow => Mode::Slow,
            MxMode::Chunked => Mode::Chunked,
        }
    })
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn mx_config_set_pool(c: *mut MxConfig, pool: usize) -> MxStatus {
    with_config(c, |c| c.pool = pool)
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn mx_config_set_chunks(c: *mut MxConfig, chunks: usize) -> MxStatus {
    with_config(c, |c| c.chunks = chunks)
}

/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn mx_config_set_tol_convention(c: *mut MxConfig, conv: MxTolConvention) -> MxStatus {
    with_config(c, |c| {
        c.tol_convention = match conv {
            MxTolConvention::Sqrt1p => TolConvention::Sqrt1p,
            MxTolConvention::Literal => TolConvention::Literal,
        }
    })
}

/// Checks the configuration without running a selection.
///
/// # Safety
/// `c` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn mx_config_validate(c: *const MxConfig) -> MxStatus {
    guard(|| Ok(handle(c, "config")?.0.validate()?))
}

/// Runs keyframe selection.
///
/// # Safety
/// `m` and `c` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mx_select(m: *const MxMatrix, c: *const MxConfig, out: *mut *mut MxReport) -> MxStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        let c = handle(c, "config")?;
        write_out(out, MxReport(select(&m.0, &c.0)?))
    })
}

/// Number of selected frames.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn mx_report_len(r: *const MxReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.selected_indices.len())
}

/// Copies the ascending selected frame indices into `buf`.
///
/// `*written` (if not NULL) receives the number of indices even when `cap`
/// is too small, in which case `MX_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `r` must be a live report; `buf` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn mx_report_indices(
    r: *const MxReport,
    buf: *mut usize,
    cap: usize,
    written: *mut usize,
) -> MxStatus {
    guard(|| copy_out(&handle(r, "report")?.0.selected_indices, buf, cap, written))
}

/// Serialises the report as JSON. With `canonical` the timing fields are
/// zeroed. Release the string with [`mx_string_free`].
///
/// # Safety
/// `r` must be a live report; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mx_report_to_json(r: *const MxReport, canonical: bool, out: *mut *mut c_char) -> MxStatus {
    guard(|| {
        let mut report = handle(r, "report")?.0.clone();
        if canonical {
            report.canonicalize();
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = maxinfo::io::to_text(&report)?;
        *out = CString::new(text)
            .map_err(|_| Failure(MxStatus::Numerical, "report contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `r` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mx_report_free(r: *mut MxReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `k` evenly spaced indices out of `0..n` into `buf`.
///
/// # Safety
/// `buf` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn mx_uniform_sample(n: usize, k: usize, buf: *mut usize, cap: usize) -> MxStatus {
    guard(|| copy_out(&uniform_sample(n, k)?, buf, cap, ptr::null_mut()))
}

/// Volume of a row-major `rows x cols` matrix.
///
/// # Safety
/// `data` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mx_rect_vol(data: *const f64, rows: usize, cols: usize, out: *mut f64) -> MxStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(MxStatus::InvalidInput, "rows * cols overflows".into()))?;
        let m = Matrix::new(rows, cols, std::slice::from_raw_parts(data, len).to_vec())?;
        *out = rect_vol(&m)?;
        Ok(())
    })
}
