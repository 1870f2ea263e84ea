//! C ABI for `hmrtc-core`.
//!
//! Tensors, masks and solver results cross the boundary as opaque handles that
//! the caller releases with the matching `*_free` function. Every fallible call
//! returns an [`HmrtcStatus`]; on failure a description is available from
//! [`hmrtc_last_error_message`] until the next call on the same thread.
//! Complex data is exchanged as interleaved `(re, im)` doubles in canonical
//! order (first index fastest).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use hmrtc_core::baselines::{wcp_solve, WcpConfig};
use hmrtc_core::{io, metrics, solve, ComplexTensor, Error, SamplingMask, SolveResult, SolverConfig, C64};

/// Opaque complex tensor.
pub struct HmrtcTensor(ComplexTensor);

/// Opaque sampling mask.
pub struct HmrtcMask(SamplingMask);

/// Opaque solver output.
pub struct HmrtcResult(SolveResult);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HmrtcStatus {
    Ok = 0,
    NullPointer = 1,
    DimMismatch = 2,
    Shape = 3,
    OutOfRange = 4,
    EmptyMask = 5,
    NonFinite = 6,
    InvalidParameter = 7,
    ZeroReference = 8,
    Format = 9,
    Io = 10,
    InvalidUtf8 = 11,
    Panic = 12,
    Other = 13,
}

impl From<&Error> for HmrtcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimMismatch { .. } => HmrtcStatus::DimMismatch,
            Error::Shape(_) => HmrtcStatus::Shape,
            Error::OutOfRange(_) => HmrtcStatus::OutOfRange,
            Error::EmptyMask => HmrtcStatus::EmptyMask,
            Error::NonFinite(_) => HmrtcStatus::NonFinite,
            Error::InvalidParameter { .. } => HmrtcStatus::InvalidParameter,
            Error::ZeroReference => HmrtcStatus::ZeroReference,
            Error::Format { .. } => HmrtcStatus::Format,
            Error::Io { .. } => HmrtcStatus::Io,
            _ => HmrtcStatus::Other,
        }
    }
}

/// HMRTC solver settings. Obtain defaults from [`hmrtc_solver_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HmrtcSolverConfig {
    pub r_hat: usize,
    pub lambda: f64,
    pub beta0: f64,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// True to solve the rows of each factor update in parallel.
    pub parallel: bool,
}

impl From<&HmrtcSolverConfig> for SolverConfig {
    fn from(c: &HmrtcSolverConfig) -> Self {
        SolverConfig {
            r_hat: c.r_hat,
            lambda: c.lambda,
            beta0: c.beta0,
            rho: c.rho,
            tol: c.tol,
            max_iter: c.max_iter,
            seed: c.seed,
            parallel: c.parallel,
            ..SolverConfig::default()
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(HmrtcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(HmrtcStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HmrtcStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HmrtcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HmrtcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
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
            HmrtcStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn dims_from(dims: *const usize, order: usize) -> Result<Vec<usize>, Failure> {
    if order == 0 {
        return Ok(Vec::new());
    }
    if dims.is_null() {
        return Err(null("dims"));
    }
    Ok(slice::from_raw_parts(dims, order).to_vec())
}

unsafe fn path_from<'a>(path: *const c_char) -> Result<&'a str, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path).to_str().map_err(|e| Failure(HmrtcStatus::InvalidUtf8, format!("path: {e}")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn hmrtc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hmrtc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn hmrtc_solver_config_default() -> HmrtcSolverConfig {
    let d = SolverConfig::default();
    HmrtcSolverConfig {
        r_hat: d.r_hat,
        lambda: d.lambda,
        beta0: d.beta0,
        rho: d.rho,
        tol: d.tol,
        max_iter: d.max_iter,
        seed: d.seed,
        parallel: d.parallel,
    }
}

/// Creates a tensor from `2 · ∏ dims` interleaved doubles.
///
/// # Safety
/// `dims` must point to `order` values and `data` to `data_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_tensor_new(
    dims: *const usize,
    order: usize,
    data: *const f64,
    data_len: usize,
    out: *mut *mut HmrtcTensor,
) -> HmrtcStatus {
    guard(|| {
        let dims = dims_from(dims, order)?;
        if data.is_null() && data_len > 0 {
            return Err(null("data"));
        }
        if !data_len.is_multiple_of(2) {
            return Err(Failure(HmrtcStatus::Shape, format!("data_len {data_len} is odd")));
        }
        let raw = if data_len == 0 { &[][..] } else { slice::from_raw_parts(data, data_len) };
        let values = raw.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        write_out(out, HmrtcTensor(ComplexTensor::new(dims, values)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_tensor_load(path: *const c_char, out: *mut *mut HmrtcTensor) -> HmrtcStatus {
    guard(|| write_out(out, HmrtcTensor(io::load_tensor(path_from(path)?)?)))
}

/// # Safety
/// `tensor` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_tensor_save(tensor: *const HmrtcTensor, path: *const c_char) -> HmrtcStatus {
    guard(|| Ok(io::save_tensor(path_from(path)?, &as_ref(tensor, "tensor")?.0)?))
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `tensor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_tensor_order(tensor: *const HmrtcTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.0.order())
}

/// Number of complex entries, or 0 for a null handle.
///
/// # Safety
/// `tensor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_tensor_len(tensor: *const HmrtcTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.0.len())
}

/// Copies the dims into `out[0..order]`.
///
/// # Safety
/// `out` must have room for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_tensor_dims(tensor: *const HmrtcTensor, out: *mut usize, capacity: usize) -> HmrtcStatus {
    guard(|| {
        let dims = as_ref(tensor, "tensor")?.0.dims();
        if capacity < dims.len() {
            return Err(Failure(HmrtcStatus::Shape, format!("capacity {capacity} below order {}", dims.len())));
        }
        if out.is_null() && !dims.is_empty() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(dims.as_ptr(), out, dims.len());
        Ok(())
    })
}

/// Copies the entries as interleaved doubles into `out[0..2·len]`.
///
/// # Safety
/// `out` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_tensor_copy_data(tensor: *const HmrtcTensor, out: *mut f64, capacity: usize) -> HmrtcStatus {
    guard(|| {
        let data = as_ref(tensor, "tensor")?.0.data();
        if capacity < 2 * data.len() {
            return Err(Failure(HmrtcStatus::Shape, format!("capacity {capacity} below {}", 2 * data.len())));
        }
        if out.is_null() && !data.is_empty() {
            return Err(null("out"));
        }
        let dst = slice::from_raw_parts_mut(out, 2 * data.len());
        for (pair, v) in dst.chunks_exact_mut(2).zip(data) {
            pair[0] = v.re;
            pair[1] = v.im;
        }
        Ok(())
    })
}

/// # Safety
/// `tensor` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_tensor_free(tensor: *mut HmrtcTensor) {
    if !tensor.is_null() {
        drop(Box::from_raw(tensor));
    }
}

/// Creates a mask from canonical linear indices; duplicates are merged.
///
/// # Safety
/// `dims` must point to `order` values and `indices` to `count` values.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_mask_new(
    dims: *const usize,
    order: usize,
    indices: *const usize,
    count: usize,
    out: *mut *mut HmrtcMask,
) -> HmrtcStatus {
    guard(|| {
        let dims = dims_from(dims, order)?;
        if indices.is_null() && count > 0 {
            return Err(null("indices"));
        }
        let linear = if count == 0 { Vec::new() } else { slice::from_raw_parts(indices, count).to_vec() };
        write_out(out, HmrtcMask(SamplingMask::from_linear(&dims, linear)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_mask_load(path: *const c_char, out: *mut *mut HmrtcMask) -> HmrtcStatus {
    guard(|| write_out(out, HmrtcMask(io::load_mask(path_from(path)?)?)))
}

/// # Safety
/// `mask` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_mask_save(mask: *const HmrtcMask, path: *const c_char) -> HmrtcStatus {
    guard(|| Ok(io::save_mask(path_from(path)?, &as_ref(mask, "mask")?.0)?))
}

/// Number of observed entries, or 0 for a null handle.
///
/// # Safety
/// `mask` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_mask_len(mask: *const HmrtcMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `mask` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_mask_free(mask: *mut HmrtcMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Runs HMRTC on the entries of `observed` selected by `mask`.
///
/// # Safety
/// All pointers must be live handles or valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_solve(
    observed: *const HmrtcTensor,
    mask: *const HmrtcMask,
    config: *const HmrtcSolverConfig,
    out: *mut *mut HmrtcResult,
) -> HmrtcStatus {
    guard(|| {
        let cfg = SolverConfig::from(as_ref(config, "config")?);
        let result = solve(&as_ref(observed, "observed")?.0, &as_ref(mask, "mask")?.0, &cfg)?;
        write_out(out, HmrtcResult(result))
    })
}

/// Runs the weighted CP baseline (alternating least squares).
///
/// # Safety
/// All pointers must be live handles or valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_wcp_solve(
    observed: *const HmrtcTensor,
    mask: *const HmrtcMask,
    r_hat: usize,
    max_iter: usize,
    seed: u64,
    out: *mut *mut HmrtcResult,
) -> HmrtcStatus {
    guard(|| {
        let cfg = WcpConfig { r_hat, max_iter, seed, ..WcpConfig::default() };
        let result = wcp_solve(&as_ref(observed, "observed")?.0, &as_ref(mask, "mask")?.0, &cfg)?;
        write_out(out, HmrtcResult(result))
    })
}

/// New tensor handle holding a copy of the reconstruction.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_result_reconstruction(result: *const HmrtcResult, out: *mut *mut HmrtcTensor) -> HmrtcStatus {
    guard(|| write_out(out, HmrtcTensor(as_ref(result, "result")?.0.reconstruction.clone())))
}

/// Iterations run, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_result_iterations(result: *const HmrtcResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.iterations)
}

/// Whether the stopping tolerance was reached before the iteration cap.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_result_converged(result: *const HmrtcResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.converged)
}

/// # Safety
/// `result` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_result_free(result: *mut HmrtcResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// `‖x − y‖_F / ‖y‖_F` written to `out`.
///
/// # Safety
/// `x` and `y` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hmrtc_rlne(x: *const HmrtcTensor, y: *const HmrtcTensor, out: *mut f64) -> HmrtcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = metrics::rlne(&as_ref(x, "x")?.0, &as_ref(y, "y")?.0)?;
        Ok(())
    })
}
