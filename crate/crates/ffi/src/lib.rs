//! C ABI over the bellsynth library.
//!
//! Objects are opaque heap handles released with the matching `*_free`
//! function. Every fallible call returns a [`BsStatus`]; on failure a
//! description is kept per thread and can be copied out with
//! [`bs_last_error_message`]. Angles are in degrees, delays in fs, phases
//! in radians.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bellsynth::biphoton::{biphoton_from_setup, BiphotonAmplitude};
use bellsynth::concentrator::{coincidence_rate, output_state, werner_epsilon, MeasurementSetting};
use bellsynth::config::RunConfig;
use bellsynth::qstate::{coincidence_probability, partial_state, Matrix, TwoQubitState};
use bellsynth::setup::SetupConfig;
use bellsynth::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Resolution = 5,
    Range = 6,
    Misuse = 7,
    Contract = 8,
    InvariantViolation = 9,
    UndefinedVisibility = 10,
    Io = 11,
    Internal = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsPreset {
    /// cw 351.1 nm pump, 3 mm BBO, no filters.
    CwReference = 0,
    /// 390 nm pump with 2 nm bandwidth, 3 mm BBO, 20 nm filters.
    PulsedReference = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BsMetrics {
    pub concurrence: f64,
    pub entanglement_of_formation: f64,
    pub normalized_entropy: f64,
    pub purity: f64,
}

/// Two-qubit density matrix over HH, HV, VH, VV.
pub struct BsState(TwoQubitState);

/// Two-photon amplitude on its time grid.
pub struct BsBiphoton(BiphotonAmplitude);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> BsStatus {
    match err {
        Error::Domain(_) => BsStatus::Domain,
        Error::InvariantViolation(_) => BsStatus::InvariantViolation,
        Error::Resolution(_) => BsStatus::Resolution,
        Error::Misuse(_) => BsStatus::Misuse,
        Error::Range(_) => BsStatus::Range,
        Error::UndefinedVisibility(_) => BsStatus::UndefinedVisibility,
        Error::Contract(_) => BsStatus::Contract,
        Error::Internal(_) => BsStatus::Internal,
        Error::Config { .. } => BsStatus::Config,
        Error::Io(_) => BsStatus::Io,
    }
}

enum Failure {
    Status(BsStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(BsStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            BsStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Err(_) => {
            set_last_error("panic inside bellsynth".into());
            BsStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn boxed_state(out: *mut *mut BsState, s: TwoQubitState) -> Result<(), Failure> {
    unsafe { write_out(out, Box::into_raw(Box::new(BsState(s)))) }
}

/// ε|Φ_φ⟩⟨Φ_φ| + (1 − ε)·(|HH⟩⟨HH| + |VV⟩⟨VV|)/2.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_state_partial(
    epsilon: f64,
    phi: f64,
    out: *mut *mut BsState,
) -> BsStatus {
    guard(|| boxed_state(out, partial_state(epsilon, phi)?))
}

/// Builds a state from row-major real and imaginary parts (16 values each).
///
/// # Safety
/// `re` and `im` must point to 16 doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_state_from_matrix(
    re: *const f64,
    im: *const f64,
    out: *mut *mut BsState,
) -> BsStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null());
        }
        let (re, im) = (
            std::slice::from_raw_parts(re, 16),
            std::slice::from_raw_parts(im, 16),
        );
        let m = Matrix::from_fn(|i, j| Complex64::new(re[4 * i + j], im[4 * i + j]));
        boxed_state(out, TwoQubitState::new(m)?)
    })
}

/// # Safety
/// `state` must be a live handle; `re`/`im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bs_state_element(
    state: *const BsState,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> BsStatus {
    guard(|| {
        let s = borrow(state)?;
        if row > 3 || col > 3 {
            return Err(Failure::Status(
                BsStatus::InvalidArgument,
                format!("index ({row}, {col}) outside 4x4"),
            ));
        }
        let z = s.0.element(row, col);
        write_out(re, z.re)?;
        write_out(im, z.im)
    })
}

/// # Safety
/// `state` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_state_metrics(state: *const BsState, out: *mut BsMetrics) -> BsStatus {
    guard(|| {
        let m = borrow(state)?.0.metrics();
        write_out(
            out,
            BsMetrics {
                concurrence: m.concurrence,
                entanglement_of_formation: m.entanglement_of_formation,
                normalized_entropy: m.normalized_entropy,
                purity: m.purity,
            },
        )
    })
}

/// Probability that both photons pass linear analyzers at the given angles.
///
/// # Safety
/// `state` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_state_coincidence_probability(
    state: *const BsState,
    theta1_deg: f64,
    theta2_deg: f64,
    out: *mut f64,
) -> BsStatus {
    guard(|| {
        let s = borrow(state)?;
        write_out(
            out,
            coincidence_probability(&s.0, theta1_deg.to_radians(), theta2_deg.to_radians()),
        )
    })
}

/// # Safety
/// `state` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn bs_state_free(state: *mut BsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

fn boxed_biphoton(out: *mut *mut BsBiphoton, setup: &SetupConfig) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    let pi = biphoton_from_setup(setup)?;
    unsafe { write_out(out, Box::into_raw(Box::new(BsBiphoton(pi)))) }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_biphoton_preset(
    preset: BsPreset,
    out: *mut *mut BsBiphoton,
) -> BsStatus {
    guard(|| {
        let setup = match preset {
            BsPreset::CwReference => SetupConfig::cw_reference(),
            BsPreset::PulsedReference => SetupConfig::pulsed_reference(),
        };
        boxed_biphoton(out, &setup)
    })
}

/// Builds the amplitude from the crystal, pump, filter, grid and phase keys
/// of a configuration text (same format as the command-line config files).
///
/// # Safety
/// `config_text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_biphoton_from_config(
    config_text: *const c_char,
    out: *mut *mut BsBiphoton,
) -> BsStatus {
    guard(|| {
        if config_text.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(config_text).to_str().map_err(|_| {
            Failure::Status(BsStatus::InvalidArgument, "config text is not UTF-8".into())
        })?;
        let cfg = RunConfig::parse(text)?;
        boxed_biphoton(out, &cfg.setup)
    })
}

/// o/e walk-off D·L in fs.
///
/// # Safety
/// `pi` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_biphoton_walkoff_fs(pi: *const BsBiphoton, out: *mut f64) -> BsStatus {
    guard(|| write_out(out, borrow(pi)?.0.scales.walkoff_fs))
}

/// Grid sizes and the relative-time step.
///
/// # Safety
/// `pi` must be a live handle; out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn bs_biphoton_grid(
    pi: *const BsBiphoton,
    n_plus: *mut usize,
    n_minus: *mut usize,
    dt_minus_fs: *mut f64,
) -> BsStatus {
    guard(|| {
        let l = borrow(pi)?.0.layout;
        write_out(n_plus, l.n_plus)?;
        write_out(n_minus, l.n_minus)?;
        write_out(dt_minus_fs, l.dt_minus)
    })
}

/// Normalized coincidence rate (1 at zero delay, 45°/45°, φ = 0).
///
/// # Safety
/// `pi` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_coincidence_rate(
    pi: *const BsBiphoton,
    tau_fs: f64,
    theta1_deg: f64,
    theta2_deg: f64,
    phi: f64,
    out: *mut f64,
) -> BsStatus {
    guard(|| {
        let pi = borrow(pi)?;
        let s = MeasurementSetting::new(tau_fs, theta1_deg, theta2_deg, phi);
        write_out(out, coincidence_rate(&pi.0, &s)?)
    })
}

/// # Safety
/// `pi` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_werner_epsilon(
    pi: *const BsBiphoton,
    tau_fs: f64,
    out: *mut f64,
) -> BsStatus {
    guard(|| write_out(out, werner_epsilon(&borrow(pi)?.0, tau_fs)?))
}

/// Polarization state after the concentrator at delay `tau_fs`.
///
/// # Safety
/// `pi` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_output_state(
    pi: *const BsBiphoton,
    tau_fs: f64,
    phi: f64,
    out: *mut *mut BsState,
) -> BsStatus {
    guard(|| boxed_state(out, output_state(&borrow(pi)?.0, tau_fs, phi)?))
}

/// # Safety
/// `pi` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn bs_biphoton_free(pi: *mut BsBiphoton) {
    if !pi.is_null() {
        drop(Box::from_raw(pi));
    }
}
