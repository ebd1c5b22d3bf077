//! C ABI for the projective-space dynamics library.
//!
//! Conventions: every fallible call returns a status code (`CPDYN_OK` on
//! success) and writes its result through an out-pointer; the most recent
//! error message is kept per thread and readable via
//! [`cpdyn_last_error_message`]. Handles are opaque and must be released
//! with their matching `_free` function. All functions are panic-safe at
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cpdyn::dynamics::{self, IntegratorConfig, MarkovianBathSpec};
use cpdyn::hamiltonian::{fmo_hamiltonian, two_qubit_hamiltonian, TwoQubitCoefficients};
use cpdyn::observables::ObservableSeries;
use cpdyn::projective::AmplitudeVector;
use cpdyn::scenario::choose_pivot;
use cpdyn::{C64, Error};

use nalgebra::DVector;

/// Success.
pub const CPDYN_OK: i32 = 0;
/// A pointer argument was null or an argument was out of range.
pub const CPDYN_ERR_ARGUMENT: i32 = 1;
/// The inputs describe an invalid model (dimensions, parse errors, ...).
pub const CPDYN_ERR_CONFIG: i32 = 2;
/// The integrator failed (step underflow, singular damping solve, ...).
pub const CPDYN_ERR_SOLVER: i32 = 3;
/// An internal invariant failed.
pub const CPDYN_ERR_INTERNAL: i32 = 100;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn code_of(err: &Error) -> i32 {
    match err {
        Error::ConfigParse { .. }
        | Error::InvalidSpec { .. }
        | Error::FileIo(_)
        | Error::EmptySweep
        | Error::DimensionMismatch { .. }
        | Error::PivotTooSmall { .. }
        | Error::NotHermitian { .. } => CPDYN_ERR_CONFIG,
        _ => CPDYN_ERR_SOLVER,
    }
}

fn fail(err: &Error) -> i32 {
    set_last_error(&err.to_string());
    code_of(err)
}

fn fail_argument(message: &str) -> i32 {
    set_last_error(message);
    CPDYN_ERR_ARGUMENT
}

fn guarded(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => {
            set_last_error("internal panic");
            CPDYN_ERR_INTERNAL
        }
    }
}

/// Opaque Hermitian operator handle.
pub struct CpdynHamiltonian {
    inner: cpdyn::HermitianOperator,
}

/// Opaque sampled-trajectory handle. Populations are stored row-major:
/// sample index varies slowest, level index fastest.
pub struct CpdynTrajectory {
    times: Vec<f64>,
    populations: Vec<f64>,
    energy: Vec<f64>,
    z: Option<Vec<f64>>,
    concurrence: Option<Vec<f64>>,
    dim: usize,
}

/// The most recent error message on this thread; an empty string if no
/// error has occurred. The pointer stays valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn cpdyn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds the five-coefficient four-level operator
/// `c1 σz⊗I + c2 σx⊗I + c3 σy⊗I + c4 σy⊗σy + c5 σx⊗σy`.
#[no_mangle]
pub extern "C" fn cpdyn_hamiltonian_two_qubit(
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
    c5: f64,
    out: *mut *mut CpdynHamiltonian,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail_argument("out pointer is null");
        }
        match two_qubit_hamiltonian(&TwoQubitCoefficients::new(c1, c2, c3, c4, c5)) {
            Ok(h) => {
                unsafe { *out = Box::into_raw(Box::new(CpdynHamiltonian { inner: h })) };
                CPDYN_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Builds the bundled seven-site exciton operator (wavenumber units).
#[no_mangle]
pub extern "C" fn cpdyn_hamiltonian_fmo(out: *mut *mut CpdynHamiltonian) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail_argument("out pointer is null");
        }
        unsafe {
            *out = Box::into_raw(Box::new(CpdynHamiltonian {
                inner: fmo_hamiltonian(),
            }))
        };
        CPDYN_OK
    })
}

/// Loads an operator from a plain-text matrix file (optional
/// `# unit: cm-1` header).
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_hamiltonian_from_file(
    path: *const c_char,
    out: *mut *mut CpdynHamiltonian,
) -> i32 {
    guarded(|| {
        if path.is_null() || out.is_null() {
            return fail_argument("path or out pointer is null");
        }
        let raw = unsafe { CStr::from_ptr(path) };
        let Ok(path) = raw.to_str() else {
            return fail_argument("path is not valid UTF-8");
        };
        match cpdyn::HermitianOperator::from_file(Path::new(path)) {
            Ok(h) => {
                unsafe { *out = Box::into_raw(Box::new(CpdynHamiltonian { inner: h })) };
                CPDYN_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Dimension of the operator, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn cpdyn_hamiltonian_dim(h: *const CpdynHamiltonian) -> usize {
    if h.is_null() {
        return 0;
    }
    unsafe { &*h }.inner.dim()
}

/// Releases an operator handle; a null pointer is ignored.
#[no_mangle]
pub extern "C" fn cpdyn_hamiltonian_free(h: *mut CpdynHamiltonian) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Integrates the isolated or damped flow and samples observables.
///
/// `amps_re`/`amps_im` hold the `dim` initial amplitudes (normalized
/// internally). `gammas` is either null (isolated run), one value
/// (broadcast), or `dim - 1` per-coordinate damping constants; the chart
/// anchor is chosen automatically. Sampling runs from 0 to `t_final` every
/// `sample_dt`, with default integrator settings.
///
/// # Safety
/// The array arguments must point to buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_integrate(
    h: *const CpdynHamiltonian,
    amps_re: *const f64,
    amps_im: *const f64,
    dim: usize,
    gammas: *const f64,
    gammas_len: usize,
    t_final: f64,
    sample_dt: f64,
    out: *mut *mut CpdynTrajectory,
) -> i32 {
    guarded(|| {
        if h.is_null() || amps_re.is_null() || amps_im.is_null() || out.is_null() {
            return fail_argument("handle, amplitude or out pointer is null");
        }
        if dim < 2 {
            return fail_argument("dim must be at least 2");
        }
        let h = unsafe { &*h };
        let re = unsafe { std::slice::from_raw_parts(amps_re, dim) };
        let im = unsafe { std::slice::from_raw_parts(amps_im, dim) };
        let raw = DVector::from_fn(dim, |i, _| C64::new(re[i], im[i]));

        let result = (|| -> Result<CpdynTrajectory, Error> {
            let amps = AmplitudeVector::normalized(raw)?;
            let initial = amps.to_projective(choose_pivot(&amps))?;
            let bath = if gammas.is_null() || gammas_len == 0 {
                None
            } else {
                let g = unsafe { std::slice::from_raw_parts(gammas, gammas_len) };
                Some(if gammas_len == 1 {
                    MarkovianBathSpec::uniform(g[0], dim - 1)?
                } else {
                    MarkovianBathSpec::new(g.to_vec())?
                })
            };
            let cfg = IntegratorConfig::default();
            let traj = dynamics::integrate(
                &h.inner,
                &initial,
                bath.as_ref(),
                t_final,
                sample_dt,
                &cfg,
            )?;
            let series = ObservableSeries::from_trajectory(&traj)?;
            let mut populations = Vec::with_capacity(series.len() * dim);
            for row in series.populations() {
                populations.extend(row.iter().copied());
            }
            Ok(CpdynTrajectory {
                times: series.times().to_vec(),
                populations,
                energy: series.energy().to_vec(),
                z: series.z().map(|v| v.to_vec()),
                concurrence: series.concurrence().map(|v| v.to_vec()),
                dim,
            })
        })();

        match result {
            Ok(traj) => {
                unsafe { *out = Box::into_raw(Box::new(traj)) };
                CPDYN_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of samples, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn cpdyn_trajectory_len(t: *const CpdynTrajectory) -> usize {
    if t.is_null() {
        return 0;
    }
    unsafe { &*t }.times.len()
}

/// System dimension, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn cpdyn_trajectory_dim(t: *const CpdynTrajectory) -> usize {
    if t.is_null() {
        return 0;
    }
    unsafe { &*t }.dim
}

/// Sample times (length `len`); valid until the handle is freed.
#[no_mangle]
pub extern "C" fn cpdyn_trajectory_times(t: *const CpdynTrajectory) -> *const f64 {
    if t.is_null() {
        return ptr::null();
    }
    unsafe { &*t }.times.as_ptr()
}

/// Populations, row-major `len × dim` (sample-major); valid until the
/// handle is freed.
#[no_mangle]
pub extern "C" fn cpdyn_trajectory_populations(t: *const CpdynTrajectory) -> *const f64 {
    if t.is_null() {
        return ptr::null();
    }
    unsafe { &*t }.populations.as_ptr()
}

/// System energy per sample (length `len`).
#[no_mangle]
pub extern "C" fn cpdyn_trajectory_energy(t: *const CpdynTrajectory) -> *const f64 {
    if t.is_null() {
        return ptr::null();
    }
    unsafe { &*t }.energy.as_ptr()
}

/// Population-imbalance channel `z` (length `len`); null unless the system
/// has four levels.
#[no_mangle]
pub extern "C" fn cpdyn_trajectory_z(t: *const CpdynTrajectory) -> *const f64 {
    if t.is_null() {
        return ptr::null();
    }
    match &unsafe { &*t }.z {
        Some(v) => v.as_ptr(),
        None => ptr::null(),
    }
}

/// Concurrence channel (length `len`); null unless the system has four
/// levels.
#[no_mangle]
pub extern "C" fn cpdyn_trajectory_concurrence(t: *const CpdynTrajectory) -> *const f64 {
    if t.is_null() {
        return ptr::null();
    }
    match &unsafe { &*t }.concurrence {
        Some(v) => v.as_ptr(),
        None => ptr::null(),
    }
}

/// Releases a trajectory handle; a null pointer is ignored.
#[no_mangle]
pub extern "C" fn cpdyn_trajectory_free(t: *mut CpdynTrajectory) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}
