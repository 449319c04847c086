//! C ABI over `jacobi_lattice`.
//!
//! Every entry point returns a [`JlStatus`]; results go through out
//! pointers. Heavy objects (bound states, kernel tables, decay curves) are
//! opaque handles created by `*_new` and released by the matching `*_free`.
//! After a failure, `jl_last_error_message` describes it (per thread).
//! Panics are caught at the boundary and reported as `JL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jacobi_lattice::decay::{decay_curve, DecayCurve, KernelPart};
use jacobi_lattice::eigenfunctions::phi_values;
use jacobi_lattice::lattice::{OperatorSpec, WeightSpec};
use jacobi_lattice::propagator::{kernel_table, KernelTable, QuadratureConfig};
use jacobi_lattice::spectral::{bound_state_solve, completeness_check, g_factor, BoundState};
use jacobi_lattice::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JlStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Threshold = 3,
    NotConverged = 4,
    Grid = 5,
    Invalid = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> JlStatus {
    match e {
        Error::Domain(_) => JlStatus::Domain,
        Error::Threshold(_) => JlStatus::Threshold,
        Error::NotConverged(_) => JlStatus::NotConverged,
        Error::Grid(_) => JlStatus::Grid,
        Error::Invalid(_) => JlStatus::Invalid,
        Error::Io(_) | Error::Json(_) => JlStatus::Io,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), JlStatus>) -> JlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            JlStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside jacobi_lattice");
            JlStatus::Panic
        }
    }
}

fn lift<T>(r: jacobi_lattice::Result<T>) -> Result<T, JlStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> JlStatus {
    set_error("null pointer argument");
    JlStatus::NullPointer
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, JlStatus> {
    p.as_mut().ok_or_else(null)
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], JlStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize) -> Result<&'a mut [f64], JlStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn operator(q: f64) -> Result<OperatorSpec, JlStatus> {
    if q == 0.0 {
        Ok(OperatorSpec::free(0))
    } else {
        lift(OperatorSpec::perturbed(q, 0))
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn jl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// `φ_λ(0..len)` into `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn jl_phi_values(lambda: f64, out: *mut f64, len: usize) -> JlStatus {
    guard(|| {
        let dst = slice_mut(out, len)?;
        if len == 0 {
            return Ok(());
        }
        dst.copy_from_slice(&phi_values(lambda, len - 1));
        Ok(())
    })
}

/// `g_λ` and `w^L_λ = g_λ e^{-λ}` for coupling `q > 0`.
///
/// # Safety
/// `g` and `weight` must be valid pointers to doubles.
#[no_mangle]
pub unsafe extern "C" fn jl_g_factor(lambda: f64, q: f64, g: *mut f64, weight: *mut f64) -> JlStatus {
    guard(|| {
        let (g, weight) = (out(g)?, out(weight)?);
        let v = lift(g_factor(lambda, q))?;
        *g = v.value;
        *weight = v.weight;
        Ok(())
    })
}

/// Deviation of the spectral resolution of the identity at `(x1, x2)`;
/// `q = 0` uses the free operator.
///
/// # Safety
/// `deviation` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jl_completeness_deviation(q: f64, x1: usize, x2: usize, deviation: *mut f64) -> JlStatus {
    guard(|| {
        let d = out(deviation)?;
        *d = lift(completeness_check((q != 0.0).then_some(q), x1, x2))?;
        Ok(())
    })
}

/// Bound state of `L = L₀ - qP₀`.
pub struct JlBoundState {
    inner: BoundState,
}

/// # Safety
/// `handle` must be a valid pointer; on success it receives a handle to be
/// released with `jl_bound_state_free`.
#[no_mangle]
pub unsafe extern "C" fn jl_bound_state_new(q: f64, handle: *mut *mut JlBoundState) -> JlStatus {
    guard(|| {
        let h = out(handle)?;
        let inner = lift(bound_state_solve(q))?;
        *h = Box::into_raw(Box::new(JlBoundState { inner }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from `jl_bound_state_new`; `lambda0` must be valid.
#[no_mangle]
pub unsafe extern "C" fn jl_bound_state_energy(handle: *const JlBoundState, lambda0: *mut f64) -> JlStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(null)?;
        *out(lambda0)? = h.inner.lambda0;
        Ok(())
    })
}

/// Copies up to `len` entries of the normalized eigenvector; `written`
/// receives the number copied and `total` the stored length.
///
/// # Safety
/// `handle` must come from `jl_bound_state_new`; `buf` must hold `len`
/// doubles; `written` and `total` must be valid.
#[no_mangle]
pub unsafe extern "C" fn jl_bound_state_vector(
    handle: *const JlBoundState,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
    total: *mut usize,
) -> JlStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(null)?;
        let dst = slice_mut(buf, len)?;
        let v = h.inner.vector.values();
        let n = v.len().min(len);
        for (d, s) in dst.iter_mut().zip(v) {
            *d = s.re;
        }
        *out(written)? = n;
        *out(total)? = v.len();
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from `jl_bound_state_new`, and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn jl_bound_state_free(handle: *mut JlBoundState) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Spectral kernel table of `e^{-itH}` on `x₁, x₂ ≤ xmax`.
pub struct JlKernelTable {
    inner: KernelTable,
}

/// `q = 0` selects the free operator. Uses the default quadrature.
///
/// # Safety
/// `times` must hold `ntimes` doubles; `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn jl_kernel_table_new(
    q: f64,
    times: *const f64,
    ntimes: usize,
    xmax: usize,
    handle: *mut *mut JlKernelTable,
) -> JlStatus {
    guard(|| {
        let h = out(handle)?;
        let times = slice(times, ntimes)?;
        let spec = operator(q)?;
        let inner = lift(kernel_table(&spec, times, xmax, &QuadratureConfig::default()))?;
        *h = Box::into_raw(Box::new(JlKernelTable { inner }));
        Ok(())
    })
}

fn check_index(t: &KernelTable, ti: usize, x1: usize, x2: usize) -> Result<(), JlStatus> {
    if ti >= t.times.len() || x1 > t.xmax || x2 > t.xmax {
        set_error(format!("index ({ti}, {x1}, {x2}) outside the table"));
        return Err(JlStatus::Grid);
    }
    Ok(())
}

/// `K(t_i, x₁, x₂)` with its quadrature error estimate.
///
/// # Safety
/// `handle` must come from `jl_kernel_table_new`; the out pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn jl_kernel_table_get(
    handle: *const JlKernelTable,
    ti: usize,
    x1: usize,
    x2: usize,
    re: *mut f64,
    im: *mut f64,
    err_est: *mut f64,
) -> JlStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(null)?;
        check_index(&h.inner, ti, x1, x2)?;
        let (re, im, err_est) = (out(re)?, out(im)?, out(err_est)?);
        let v = h.inner.get(ti, x1, x2);
        *re = v.re;
        *im = v.im;
        *err_est = h.inner.error(ti, x1, x2);
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from `jl_kernel_table_new`, and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jl_kernel_table_free(handle: *mut JlKernelTable) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Weighted decay curve `D(t)`.
pub struct JlDecayCurve {
    inner: DecayCurve,
}

/// `continuum_only != 0` removes the bound-state projector.
///
/// # Safety
/// `times` must hold `ntimes` doubles; `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn jl_decay_curve_new(
    q: f64,
    kappa: f64,
    tau: f64,
    xmax: usize,
    times: *const f64,
    ntimes: usize,
    continuum_only: i32,
    handle: *mut *mut JlDecayCurve,
) -> JlStatus {
    guard(|| {
        let h = out(handle)?;
        let times = slice(times, ntimes)?;
        let spec = operator(q)?;
        let weight = lift(WeightSpec::new(kappa, tau))?;
        let part = if continuum_only != 0 {
            KernelPart::Continuum
        } else {
            KernelPart::Full
        };
        let inner = lift(decay_curve(&spec, weight, xmax, times, part, &QuadratureConfig::default()))?;
        *h = Box::into_raw(Box::new(JlDecayCurve { inner }));
        Ok(())
    })
}

/// Copies `D(t_i)` and the error estimates; both buffers must hold the
/// number of times the curve was built with.
///
/// # Safety
/// `handle` must come from `jl_decay_curve_new`; `values` and `errors` must
/// hold `len` doubles each (either may be null to skip it).
#[no_mangle]
pub unsafe extern "C" fn jl_decay_curve_values(
    handle: *const JlDecayCurve,
    values: *mut f64,
    errors: *mut f64,
    len: usize,
) -> JlStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(null)?;
        let n = h.inner.values.len();
        if len < n {
            set_error(format!("buffer holds {len} values, curve has {n}"));
            return Err(JlStatus::BufferTooSmall);
        }
        if !values.is_null() {
            slice_mut(values, n)?.copy_from_slice(&h.inner.values);
        }
        if !errors.is_null() {
            slice_mut(errors, n)?.copy_from_slice(&h.inner.errors);
        }
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from `jl_decay_curve_new`, and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn jl_decay_curve_free(handle: *mut JlDecayCurve) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
