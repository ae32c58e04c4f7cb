//! C ABI for the gengm estimator.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns a
//! [`GengmStatus`]; on failure [`gengm_last_error_message`] describes the
//! error for the calling thread. Matrices are passed as row-major `double`
//! buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gengm::linalg::{DenseMatrix, SymmetricMatrix};
use gengm::model::{sample_covariances, CovarianceTriplet, Dataset, RegularizationConfig};
use gengm::simulate::first_diff_structure;
use gengm::solver::{fit, FitResult, FitSettings, Variant};
use gengm::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GengmStatus {
    Ok = 0,
    InvalidInput = 1,
    NumericFailure = 2,
    SingularGradient = 3,
    HypothesisViolated = 4,
    OutsideValidityRegion = 5,
    InvalidEpsilon = 6,
    InvalidReport = 7,
    Capacity = 8,
    Config = 9,
    Schema = 10,
    Io = 11,
    NullPointer = 12,
    Panic = 13,
}

/// Estimator flavour.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GengmVariant {
    Gengm = 0,
    Gm = 1,
    Spr = 2,
    Oracle = 3,
}

/// Sample covariance blocks of a dataset.
pub struct GengmCovariances {
    inner: CovarianceTriplet,
}

/// A fitted parameter pair.
pub struct GengmFit {
    inner: FitResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GengmStatus {
    match e {
        Error::InvalidInput(_) => GengmStatus::InvalidInput,
        Error::NumericFailure(_) => GengmStatus::NumericFailure,
        Error::SingularGradient(_) => GengmStatus::SingularGradient,
        Error::HypothesisViolated(_) => GengmStatus::HypothesisViolated,
        Error::OutsideValidityRegion(_) => GengmStatus::OutsideValidityRegion,
        Error::InvalidEpsilon(_) => GengmStatus::InvalidEpsilon,
        Error::InvalidReport(_) => GengmStatus::InvalidReport,
        Error::Capacity(_) => GengmStatus::Capacity,
        Error::Config(_) => GengmStatus::Config,
        Error::Schema(_) => GengmStatus::Schema,
        Error::Io(_) | Error::Csv(_) => GengmStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (GengmStatus, String)>) -> GengmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GengmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GengmStatus::Panic
        }
    }
}

fn lift<T>(r: gengm::Result<T>) -> Result<T, (GengmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GengmStatus, String) {
    (GengmStatus::NullPointer, format!("{what} is null"))
}

/// Reads `len` doubles from `ptr`.
///
/// # Safety
/// `ptr` must be valid for `len` reads when `len > 0`.
unsafe fn read_buf(ptr: *const f64, len: usize, what: &str) -> Result<Vec<f64>, (GengmStatus, String)> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len).to_vec())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gengm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gengm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds sample covariances from `x` (`n x p`) and `y` (`n x q`).
///
/// # Safety
/// `x` and `y` must point to `n*p` and `n*q` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gengm_covariances_from_data(
    x: *const f64,
    y: *const f64,
    n: usize,
    p: usize,
    q: usize,
    out: *mut *mut GengmCovariances,
) -> GengmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let xs = read_buf(x, n * p, "x")?;
        let ys = read_buf(y, n * q, "y")?;
        let d = lift(Dataset::new(lift(DenseMatrix::new(n, p, xs))?, lift(DenseMatrix::new(n, q, ys))?))?;
        let inner = lift(sample_covariances(&d))?;
        *out = Box::into_raw(Box::new(GengmCovariances { inner }));
        Ok(())
    })
}

/// # Safety
/// `cov` must come from [`gengm_covariances_from_data`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn gengm_covariances_free(cov: *mut GengmCovariances) {
    if !cov.is_null() {
        drop(Box::from_raw(cov));
    }
}

/// Fits the estimator. `variant` takes a [`GengmVariant`] value;
/// `structure` is a `p x p` matrix, or NULL for the first-difference
/// operator; `oracle_precision` (`q x q`) is read only by the oracle variant.
///
/// # Safety
/// Pointers must be valid for the stated sizes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gengm_fit(
    cov: *const GengmCovariances,
    lambda: f64,
    mu: f64,
    eta: f64,
    beta: f64,
    structure: *const f64,
    variant: i32,
    oracle_precision: *const f64,
    out: *mut *mut GengmFit,
) -> GengmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cov = cov.as_ref().ok_or_else(|| null("cov"))?;
        let (q, p) = (cov.inner.q(), cov.inner.p());
        let l = if structure.is_null() {
            lift(first_diff_structure(p))?
        } else {
            lift(SymmetricMatrix::new(lift(DenseMatrix::new(p, p, read_buf(structure, p * p, "structure")?))?))?
        };
        let v = match variant {
            x if x == GengmVariant::Gengm as i32 => Variant::GenGm,
            x if x == GengmVariant::Gm as i32 => Variant::Gm,
            x if x == GengmVariant::Spr as i32 => Variant::Spr,
            x if x == GengmVariant::Oracle as i32 => Variant::Oracle,
            other => return Err((GengmStatus::InvalidInput, format!("unknown variant code {other}"))),
        };
        let mut s = FitSettings::default().with_variant(v);
        if v == Variant::Oracle {
            let m = lift(DenseMatrix::new(q, q, read_buf(oracle_precision, q * q, "oracle_precision")?))?;
            s.oracle_precision = Some(lift(SymmetricMatrix::new(m))?);
        }
        let cfg = RegularizationConfig::new(lambda, mu, eta, beta, l);
        let inner = lift(fit(&cov.inner, &cfg, &s))?;
        *out = Box::into_raw(Box::new(GengmFit { inner }));
        Ok(())
    })
}

/// Writes the response and predictor counts.
///
/// # Safety
/// `fit` must be a live handle; `q` and `p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gengm_fit_dims(fit: *const GengmFit, q: *mut usize, p: *mut usize) -> GengmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if q.is_null() || p.is_null() {
            return Err(null("q or p"));
        }
        *q = f.inner.theta_hat.q();
        *p = f.inner.theta_hat.p();
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (GengmStatus, String)> {
    if len != src.len() {
        return Err((GengmStatus::InvalidInput, format!("buffer holds {len} values, {} needed", src.len())));
    }
    if len > 0 {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    }
    Ok(())
}

/// Copies `Omega_yy` (`q*q` values, row-major) into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gengm_fit_omega_yy(fit: *const GengmFit, buf: *mut f64, len: usize) -> GengmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        copy_out(f.inner.theta_hat.omega_yy().as_slice(), buf, len)
    })
}

/// Copies `Omega_yx` (`q*p` values, row-major) into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gengm_fit_omega_yx(fit: *const GengmFit, buf: *mut f64, len: usize) -> GengmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        copy_out(f.inner.theta_hat.omega_yx().as_slice(), buf, len)
    })
}

/// Final objective value and convergence flag (1 converged, 0 not).
///
/// # Safety
/// `fit` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gengm_fit_summary(
    fit: *const GengmFit,
    objective: *mut f64,
    converged: *mut i32,
    outer_iters: *mut usize,
) -> GengmStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if objective.is_null() || converged.is_null() || outer_iters.is_null() {
            return Err(null("output pointer"));
        }
        *objective = f.inner.objective;
        *converged = f.inner.converged as i32;
        *outer_iters = f.inner.outer_iters;
        Ok(())
    })
}

/// # Safety
/// `fit` must come from [`gengm_fit`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn gengm_fit_free(fit: *mut GengmFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}
