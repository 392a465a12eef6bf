//! C ABI over `liouvlab`.
//!
//! Systems live behind an opaque [`LlSystem`] handle. Every call returns an
//! [`LlStatus`]; on failure [`ll_last_error`] holds a message for the calling
//! thread. Complex arrays are passed as separate real and imaginary buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use liouvlab::analysis::fit_damped_sine;
use liouvlab::dynamics::{integrate_constant, IntegratorConfig};
use liouvlab::liouvillian::{build_superoperator, qubit_ep_coupling, spectrum, steady_state};
use liouvlab::model::{Dimension, DriveParams, QuantumSystem, Rates};
use liouvlab::numerics::ComplexMatrix;
use liouvlab::Error;
use num_complex::Complex64;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad parameter, dimension or buffer length.
    InvalidArgument = 2,
    /// The computation itself failed (no convergence, no steady state, ...).
    Numerical = 3,
    /// A Rust panic was caught at the boundary.
    Panic = 4,
}

/// Opaque handle to a qubit or qutrit with fixed drive and rates.
pub struct LlSystem {
    inner: QuantumSystem,
}

/// Parameters of `A e^{-Γt} sin(ωt + φ) + C`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LlFit {
    pub omega: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: LlStatus, msg: &str) -> LlStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> LlStatus {
    if err.is_config_error() {
        LlStatus::InvalidArgument
    } else {
        LlStatus::Numerical
    }
}

/// Runs `f`, mapping errors and panics onto status codes.
fn guard(f: impl FnOnce() -> Result<(), (LlStatus, String)>) -> LlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LlStatus::Ok,
        Ok(Err((s, msg))) => fail(s, &msg),
        Err(_) => fail(LlStatus::Panic, "internal panic"),
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (LlStatus, String)>;
}

impl<T> IntoFfi<T> for liouvlab::Result<T> {
    fn ffi(self) -> Result<T, (LlStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (LlStatus, String) {
    (LlStatus::NullPointer, format!("{what} is null"))
}

fn bad_len(what: &str, want: usize, got: usize) -> (LlStatus, String) {
    (LlStatus::InvalidArgument, format!("{what} has length {got}, expected {want}"))
}

/// # Safety
/// `ptr` must be null or valid for `len` reads.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], (LlStatus, String)> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be null or valid for `len` writes.
unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], (LlStatus, String)> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

/// # Safety
/// `sys` must be null or a live handle from `ll_system_new`.
unsafe fn system<'a>(sys: *const LlSystem) -> Result<&'a QuantumSystem, (LlStatus, String)> {
    sys.as_ref().map(|s| &s.inner).ok_or_else(|| null("system"))
}

fn split(values: &[Complex64], re: &mut [f64], im: &mut [f64]) {
    for (k, z) in values.iter().enumerate() {
        re[k] = z.re;
        im[k] = z.im;
    }
}

/// Message of the last failure on this thread; empty after success-only use.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ll_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ll_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a system of dimension `dim` (2 or 3). Qubits ignore `gamma_f` and
/// `gamma_f_extra`. Release with [`ll_system_free`].
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ll_system_new(
    dim: u32,
    j: f64,
    delta: f64,
    gamma_e: f64,
    gamma_phi: f64,
    gamma_f: f64,
    gamma_f_extra: f64,
    out: *mut *mut LlSystem,
) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let dim = Dimension::from_size(dim as usize).ffi()?;
        let rates = match dim {
            Dimension::Qubit => Rates::new(gamma_e, gamma_phi),
            Dimension::Qutrit => Rates::qutrit(gamma_e, gamma_phi, gamma_f, gamma_f_extra),
        }
        .ffi()?;
        let drive = DriveParams::new(j, delta).ffi()?;
        let inner = QuantumSystem::new(dim, drive, rates).ffi()?;
        *out = Box::into_raw(Box::new(LlSystem { inner }));
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ll_system_free(sys: *mut LlSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Hilbert-space dimension of `sys`, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ll_system_dim(sys: *const LlSystem) -> u32 {
    sys.as_ref().map_or(0, |s| s.inner.d() as u32)
}

/// Replaces the drive of `sys`.
///
/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ll_system_set_drive(sys: *mut LlSystem, j: f64, delta: f64) -> LlStatus {
    guard(|| {
        let s = sys.as_mut().ok_or_else(|| null("system"))?;
        s.inner = s.inner.with_drive(DriveParams::new(j, delta).ffi()?).ffi()?;
        Ok(())
    })
}

/// The `d²` Liouvillian eigenvalues, ascending real part.
///
/// # Safety
/// `re` and `im` must be valid for `len` writes; `len` must equal `d²`.
#[no_mangle]
pub unsafe extern "C" fn ll_spectrum(sys: *const LlSystem, re: *mut f64, im: *mut f64, len: usize) -> LlStatus {
    guard(|| {
        let s = system(sys)?;
        let n = s.d() * s.d();
        if len != n {
            return Err(bad_len("eigenvalue buffer", n, len));
        }
        let (re, im) = (slice_mut(re, len, "re")?, slice_mut(im, len, "im")?);
        let result = spectrum(&build_superoperator(s)).ffi()?;
        split(&result.eigenvalues, re, im);
        Ok(())
    })
}

/// Steady-state density matrix, row-major, `len = d²`.
///
/// # Safety
/// `re` and `im` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ll_steady_state(sys: *const LlSystem, re: *mut f64, im: *mut f64, len: usize) -> LlStatus {
    guard(|| {
        let s = system(sys)?;
        let n = s.d() * s.d();
        if len != n {
            return Err(bad_len("density buffer", n, len));
        }
        let (re, im) = (slice_mut(re, len, "re")?, slice_mut(im, len, "im")?);
        let rho = steady_state(&build_superoperator(s)).ffi()?;
        split(rho.as_slice(), re, im);
        Ok(())
    })
}

/// Populations `ρ_kk(t)` on a time grid, written row-major as `n_times × d`.
///
/// # Safety
/// `rho0_re`/`rho0_im` hold `d²` entries, `times` holds `n_times`, and
/// `populations` must be valid for `n_times · d` writes.
#[no_mangle]
pub unsafe extern "C" fn ll_evolve_populations(
    sys: *const LlSystem,
    rho0_re: *const f64,
    rho0_im: *const f64,
    times: *const f64,
    n_times: usize,
    populations: *mut f64,
) -> LlStatus {
    guard(|| {
        let s = system(sys)?;
        let d = s.d();
        let (re, im) = (slice(rho0_re, d * d, "rho0_re")?, slice(rho0_im, d * d, "rho0_im")?);
        let times = slice(times, n_times, "times")?;
        let out = slice_mut(populations, n_times * d, "populations")?;
        let rho0 = ComplexMatrix::new(d, d, re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()).ffi()?;
        let r = integrate_constant(s, &rho0, times, &IntegratorConfig::default()).ffi()?;
        for (k, rho) in r.states.iter().enumerate() {
            for i in 0..d {
                out[k * d + i] = rho[(i, i)].re;
            }
        }
        Ok(())
    })
}

/// Qubit population-EP coupling `J_EP`; fails when the rates admit none.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ll_qubit_ep_coupling(gamma_e: f64, gamma_phi: f64, out: *mut f64) -> LlStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rates = Rates::new(gamma_e, gamma_phi).ffi()?;
        *out = qubit_ep_coupling(&rates)
            .ok_or_else(|| (LlStatus::InvalidArgument, "no exceptional point for these rates".to_string()))?;
        Ok(())
    })
}

/// Least-squares fit of a damped sinusoid to `n` samples.
///
/// # Safety
/// `times` and `values` must hold `n` entries; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ll_fit_damped_sine(times: *const f64, values: *const f64, n: usize, out: *mut LlFit) -> LlStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let f = fit_damped_sine(slice(times, n, "times")?, slice(values, n, "values")?).ffi()?;
        *out = LlFit {
            omega: f.omega,
            gamma: f.gamma,
            amplitude: f.amplitude,
            phase: f.phase,
            offset: f.offset,
            residual_rms: f.residual_rms,
            converged: f.converged,
        };
        Ok(())
    })
}
