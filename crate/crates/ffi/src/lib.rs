//! C ABI over the estimation toolkit.
//!
//! Datasets and estimation results cross the boundary as opaque handles
//! that the caller releases with the matching `*_free` function. Every
//! fallible call returns a [`DcStatus`]; after a non-`Ok` status the
//! message is available from [`dc_last_error_message`] on the same thread.
//! Panics never unwind into C: they are caught and reported as
//! [`DcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use detour_choice::pipeline::fit_model;
use detour_choice::{load_dataset, Dataset, Error, EstimationResult, RunConfig};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// Malformed input file: missing column, bad row, failed validation.
    Data = 4,
    Specification = 5,
    /// Estimation or numerical failure.
    Estimation = 6,
    /// The output buffer is too small; the required size was still reported.
    BufferTooSmall = 7,
    IndexOutOfRange = 8,
    Panic = 9,
}

/// Loaded survey responses.
pub struct DcDataset {
    inner: Dataset,
}

/// Final estimates of one fit: the mixture when one was requested,
/// otherwise the logit.
pub struct DcResult {
    inner: EstimationResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> DcStatus {
    match err {
        Error::Io { .. } => DcStatus::Io,
        Error::Schema(_)
        | Error::Parse { .. }
        | Error::Validation { .. }
        | Error::EmptyDataset
        | Error::Csv(_)
        | Error::Data { .. } => DcStatus::Data,
        Error::Specification(_) | Error::UndefinedCell(_) => DcStatus::Specification,
        Error::Argument(_) | Error::Config(_) | Error::DrawDimensions { .. } => {
            DcStatus::InvalidArgument
        }
        _ => DcStatus::Estimation,
    }
}

/// Runs `f`, recording any error or panic for [`dc_last_error_message`].
fn guarded(f: impl FnOnce() -> Result<(), (DcStatus, String)>) -> DcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DcStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (DcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DcStatus, String) {
    (DcStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DcStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn result_ref<'a>(r: *const DcResult) -> Result<&'a EstimationResult, (DcStatus, String)> {
    r.as_ref().map(|r| &r.inner).ok_or_else(|| null("result"))
}

fn index(r: &EstimationResult, i: usize) -> Result<usize, (DcStatus, String)> {
    if i < r.n_parameters {
        Ok(i)
    } else {
        Err((
            DcStatus::IndexOutOfRange,
            format!(
                "parameter index {i} out of range for {} parameters",
                r.n_parameters
            ),
        ))
    }
}

/// Copies `s` into `buf` with a terminating NUL. `required` receives the
/// needed size including the NUL even when the buffer is too small.
unsafe fn copy_out(
    s: &str,
    buf: *mut c_char,
    len: usize,
    required: *mut usize,
) -> Result<(), (DcStatus, String)> {
    let bytes = s.as_bytes();
    if !required.is_null() {
        *required = bytes.len() + 1;
    }
    if buf.is_null() || len < bytes.len() + 1 {
        return Err((
            DcStatus::BufferTooSmall,
            format!("buffer of {len} bytes, {} needed", bytes.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
    *buf.add(bytes.len()) = 0;
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to fit) and returns the full message length
/// without the NUL. Returns 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a survey CSV. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_dataset_load(
    path: *const c_char,
    out: *mut *mut DcDataset,
) -> DcStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = c_str(path, "path")?;
        let inner = load_dataset(path).map_err(core_err)?;
        *out = Box::into_raw(Box::new(DcDataset { inner }));
        Ok(())
    })
}

/// Number of observations; 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle from [`dc_dataset_load`].
#[no_mangle]
pub unsafe extern "C" fn dc_dataset_len(d: *const DcDataset) -> usize {
    d.as_ref().map_or(0, |d| d.inner.len())
}

/// Releases a dataset handle. Null is a no-op.
///
/// # Safety
/// `d` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dc_dataset_free(d: *mut DcDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Estimates `model` (preset name or spec file path) with default settings.
/// With `mixture` set the time coefficients are also fitted as normal
/// mixtures using `draws` Halton draws per observation (0 keeps the default)
/// seeded by `seed`, and the handle holds the mixture estimates.
///
/// # Safety
/// `d` must be a live dataset handle, `model` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_fit(
    d: *const DcDataset,
    model: *const c_char,
    mixture: bool,
    draws: usize,
    seed: u64,
    out: *mut *mut DcResult,
) -> DcStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let d = d.as_ref().ok_or_else(|| null("dataset"))?;
        let model = c_str(model, "model")?;
        let mut cfg = RunConfig::default();
        cfg.simulation.seed = seed;
        if draws > 0 {
            cfg.simulation.draws = draws;
        }
        let fitted = fit_model(&d.inner, &cfg, model, mixture).map_err(core_err)?;
        let inner = fitted.mixed.unwrap_or(fitted.mnl);
        *out = Box::into_raw(Box::new(DcResult { inner }));
        Ok(())
    })
}

/// Releases a result handle. Null is a no-op.
///
/// # Safety
/// `r` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dc_result_free(r: *mut DcResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of estimated coefficients; 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn dc_result_parameter_count(r: *const DcResult) -> usize {
    r.as_ref().map_or(0, |r| r.inner.n_parameters)
}

/// Copies the name of coefficient `i` into `buf`. `required` (may be null)
/// receives the buffer size needed including the NUL.
///
/// # Safety
/// `r` must be a live result handle; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dc_result_parameter_name(
    r: *const DcResult,
    i: usize,
    buf: *mut c_char,
    len: usize,
    required: *mut usize,
) -> DcStatus {
    guarded(|| {
        let r = result_ref(r)?;
        let i = index(r, i)?;
        copy_out(&r.parameters.names()[i], buf, len, required)
    })
}

/// Estimate, robust standard error and robust t-statistic of coefficient `i`.
/// Any of the output pointers may be null.
///
/// # Safety
/// `r` must be a live result handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_result_parameter(
    r: *const DcResult,
    i: usize,
    value: *mut f64,
    robust_se: *mut f64,
    robust_t: *mut f64,
) -> DcStatus {
    guarded(|| {
        let r = result_ref(r)?;
        let i = index(r, i)?;
        for (p, v) in [
            (value, r.parameters.values()[i]),
            (robust_se, r.robust_se[i]),
            (robust_t, r.robust_t[i]),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Fit summary of an estimation result.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcFitSummary {
    pub ll_null: f64,
    pub ll_final: f64,
    pub adjusted_rho_sq: f64,
    pub n_parameters: usize,
    pub sample_size: usize,
    /// Draws per observation for a mixture, 0 for a logit.
    pub draws: usize,
    pub iterations: usize,
    pub hessian_rank: usize,
    pub converged: bool,
}

/// Fills `out` with the fit summary.
///
/// # Safety
/// `r` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dc_result_summary(r: *const DcResult, out: *mut DcFitSummary) -> DcStatus {
    guarded(|| {
        let r = result_ref(r)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = DcFitSummary {
            ll_null: r.ll_null,
            ll_final: r.ll_final,
            adjusted_rho_sq: r.adjusted_rho_sq,
            n_parameters: r.n_parameters,
            sample_size: r.sample_size,
            draws: r.draws.unwrap_or(0),
            iterations: r.iterations,
            hessian_rank: r.hessian_rank,
            converged: r.converged,
        };
        Ok(())
    })
}

/// Adjusted rho-square `1 − (ll_final − k) / ll_null`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dc_fit_statistics(
    ll_null: f64,
    ll_final: f64,
    k: usize,
    out: *mut f64,
) -> DcStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = detour_choice::fit_statistics(ll_null, ll_final, k).map_err(core_err)?;
        Ok(())
    })
}
