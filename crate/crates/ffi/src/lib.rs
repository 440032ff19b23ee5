// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! C ABI over `wpsim`.
//!
//! Every function returns a [`WpsimStatus`] (or a value that signals failure
//! with `NULL`) and never unwinds across the boundary. On failure a message is
//! kept per thread; fetch it with [`wpsim_last_error_message`] and release it
//! with [`wpsim_string_free`]. Handles are opaque and owned by the caller once
//! returned; release each with its `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use wpsim::cli::{self, CliError, Format, Report, Subcommand};
use wpsim::operator::{Operator, SpaceLabel, C64};
use wpsim::states::NamedState;
use wpsim::witness::{certify, CertifyingWitness};
use wpsim::{DensityMatrix, Error};

/// Result codes. Values 1 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WpsimStatus {
    Ok = 0,
    ChecksFailed = 1,
    Schema = 2,
    Numerical = 3,
    Io = 4,
    InvalidArgument = 5,
    Panic = 6,
}

/// Two-qubit density matrix.
pub struct WpsimState {
    rho: DensityMatrix,
}

/// Scenario report with its JSON encoding.
pub struct WpsimReport {
    report: Report,
    json: CString,
}

/// Witness expectations of one state.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WpsimWitnessResult {
    pub w_tilde: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub sigma_w: f64,
    /// 1 when `|⟨W̃⟩| > 1`.
    pub certified: i32,
    /// +1 for `W₊`, -1 for `W₋`, 0 for neither.
    pub certifying_witness: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: WpsimStatus, message: impl Into<String>) -> WpsimStatus {
    set_error(message);
    status
}

fn from_cli(e: CliError) -> WpsimStatus {
    let status = match e.exit_code() {
        cli::EXIT_SCHEMA => WpsimStatus::Schema,
        cli::EXIT_NUMERICAL => WpsimStatus::Numerical,
        cli::EXIT_IO => WpsimStatus::Io,
        _ => WpsimStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn from_core(e: Error) -> WpsimStatus {
    from_cli(e.into())
}

fn guarded(f: impl FnOnce() -> WpsimStatus) -> WpsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(WpsimStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, WpsimStatus> {
    if p.is_null() {
        return Err(fail(WpsimStatus::InvalidArgument, format!("{what} is NULL")));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(WpsimStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wpsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Most recent error on this thread, or `NULL`. Free with [`wpsim_string_free`].
#[no_mangle]
pub extern "C" fn wpsim_last_error_message() -> *mut c_char {
    catch_unwind(|| LAST_ERROR.with(|e| e.borrow().clone()).map_or(ptr::null_mut(), CString::into_raw))
        .unwrap_or(ptr::null_mut())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wpsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { CString::from_raw(s) })));
    }
}

/// Named state (`phi+`, `psi-`, `00`, `maximally-mixed`, ...).
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wpsim_state_named(name: *const c_char, out: *mut *mut WpsimState) -> WpsimStatus {
    guarded(|| {
        if out.is_null() {
            return fail(WpsimStatus::InvalidArgument, "out is NULL");
        }
        let name = match unsafe { read_str(name, "name") } {
            Ok(s) => s,
            Err(s) => return s,
        };
        match name.parse::<NamedState>() {
            Ok(state) => {
                let handle = Box::new(WpsimState {
                    rho: state.density_matrix(),
                });
                unsafe { *out = Box::into_raw(handle) };
                WpsimStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// State from a row-major 4×4 matrix given as separate real and imaginary
/// parts (16 entries each).
///
/// # Safety
/// `re` and `im` point to 16 readable doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wpsim_state_from_matrix(re: *const f64, im: *const f64, out: *mut *mut WpsimState) -> WpsimStatus {
    guarded(|| {
        if re.is_null() || im.is_null() || out.is_null() {
            return fail(WpsimStatus::InvalidArgument, "NULL argument");
        }
        let (re, im) = unsafe { (std::slice::from_raw_parts(re, 16), std::slice::from_raw_parts(im, 16)) };
        let entries: Vec<C64> = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        let rho = Operator::from_row_major(4, &entries).and_then(|op| DensityMatrix::new(op, SpaceLabel::System));
        match rho {
            Ok(rho) => {
                unsafe { *out = Box::into_raw(Box::new(WpsimState { rho })) };
                WpsimStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `state` comes from this library (or is `NULL`) and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wpsim_state_free(state: *mut WpsimState) {
    if !state.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(state) })));
    }
}

/// Witness expectations and the certification verdict.
///
/// # Safety
/// `state` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wpsim_certify(state: *const WpsimState, out: *mut WpsimWitnessResult) -> WpsimStatus {
    guarded(|| {
        if state.is_null() || out.is_null() {
            return fail(WpsimStatus::InvalidArgument, "NULL argument");
        }
        let state = unsafe { &*state };
        match certify(&state.rho) {
            Ok(r) => {
                let result = WpsimWitnessResult {
                    w_tilde: r.w_tilde_expectation,
                    w_plus: r.w_plus,
                    w_minus: r.w_minus,
                    sigma_w: r.sigma_w,
                    certified: r.certified as i32,
                    certifying_witness: match r.certifying_witness {
                        CertifyingWitness::Plus => 1,
                        CertifyingWitness::Minus => -1,
                        CertifyingWitness::None => 0,
                    },
                };
                unsafe { *out = result };
                WpsimStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

fn store_report(report: Report, out: *mut *mut WpsimReport) -> WpsimStatus {
    let json = CString::new(report.to_bytes()).expect("JSON has no NUL bytes");
    let passed = report.passed;
    unsafe { *out = Box::into_raw(Box::new(WpsimReport { report, json })) };
    if passed {
        WpsimStatus::Ok
    } else {
        WpsimStatus::ChecksFailed
    }
}

/// Runs a scenario (`witness`, `gas`, `radiation`, `cavity`, `verify`) from
/// JSON config text. Relative paths resolve against the working directory.
/// A report is produced for both `WPSIM_STATUS_OK` and
/// `WPSIM_STATUS_CHECKS_FAILED`.
///
/// # Safety
/// `subcommand` and `config_json` are NUL-terminated strings (`config_json`
/// may be `NULL` for `verify`); `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wpsim_run(
    subcommand: *const c_char,
    config_json: *const c_char,
    seed: u64,
    out: *mut *mut WpsimReport,
) -> WpsimStatus {
    guarded(|| {
        if out.is_null() {
            return fail(WpsimStatus::InvalidArgument, "out is NULL");
        }
        unsafe { *out = ptr::null_mut() };
        let sub = match unsafe { read_str(subcommand, "subcommand") } {
            Ok(s) => s,
            Err(s) => return s,
        };
        let sub = match sub {
            "witness" => Subcommand::Witness,
            "gas" => Subcommand::Gas,
            "radiation" => Subcommand::Radiation,
            "cavity" => Subcommand::Cavity,
            "verify" => Subcommand::Verify,
            other => return fail(WpsimStatus::InvalidArgument, format!("unknown subcommand `{other}`")),
        };
        let text = if sub == Subcommand::Verify && config_json.is_null() {
            ""
        } else {
            match unsafe { read_str(config_json, "config_json") } {
                Ok(s) => s,
                Err(s) => return s,
            }
        };
        match cli::run_text(sub, text, Path::new("."), seed, Format::Json) {
            Ok(output) => store_report(output.report, out),
            Err(e) => from_cli(e),
        }
    })
}

/// Whether every check in the report passed.
///
/// # Safety
/// `report` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn wpsim_report_passed(report: *const WpsimReport) -> bool {
    !report.is_null() && catch_unwind(AssertUnwindSafe(|| unsafe { &*report }.report.passed)).unwrap_or(false)
}

/// Number of checks in the report.
///
/// # Safety
/// `report` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn wpsim_report_check_count(report: *const WpsimReport) -> usize {
    if report.is_null() {
        return 0;
    }
    catch_unwind(AssertUnwindSafe(|| unsafe { &*report }.report.checks.len())).unwrap_or(0)
}

/// JSON encoding of the report, borrowed until the handle is freed.
///
/// # Safety
/// `report` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn wpsim_report_json(report: *const WpsimReport) -> *const c_char {
    if report.is_null() {
        return ptr::null();
    }
    unsafe { &*report }.json.as_ptr()
}

/// # Safety
/// `report` comes from this library (or is `NULL`) and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wpsim_report_free(report: *mut WpsimReport) {
    if !report.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(report) })));
    }
}
