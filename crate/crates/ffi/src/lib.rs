//! C ABI over `mission_profile`.
//!
//! Every fallible function returns an [`MpStatus`]; on failure the message is
//! available from [`mp_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `*_free` function. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`mp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mission_profile::basis::{make_bspline_basis, BasisSystem};
use mission_profile::depth::{medcouple, outlyingness_report, EvaluationGrid, OutlyingnessReport, ProjectionConfig};
use mission_profile::exchange::{sample_from_json, sample_to_json};
use mission_profile::fdcore::{inner_product, FunctionalSample};
use mission_profile::smoothing::{fit_coordinate, RawSeries};
use mission_profile::Error;

/// Status codes; the nonzero library codes match the `mprof` exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    Config = 2,
    Input = 3,
    Numerical = 4,
    Invariant = 5,
    NullPointer = 6,
    Panic = 7,
    BufferTooSmall = 8,
}

/// A B-spline basis.
pub struct MpBasis(BasisSystem);

/// A sample of multivariate functional data.
pub struct MpSample(FunctionalSample);

/// An outlyingness report.
pub struct MpReport(OutlyingnessReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(MpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            2 => MpStatus::Config,
            4 => MpStatus::Numerical,
            5 => MpStatus::Invariant,
            _ => MpStatus::Input,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(MpStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MpStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            MpStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, needed: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len < needed {
        return Err(Failure(
            MpStatus::BufferTooSmall,
            format!("{name} holds {len} values, {needed} needed"),
        ));
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MpStatus::Input, format!("{name} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(MpStatus::Invariant, "string contains NUL".into()))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn mp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Clamped B-spline basis on `[0, domain_end]`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mp_basis_new(
    domain_end: f64,
    n_basis: usize,
    order: usize,
    penalty_order: usize,
    out: *mut *mut MpBasis,
) -> MpStatus {
    guard(|| {
        let b = make_bspline_basis(domain_end, n_basis, order, penalty_order)?;
        put(out, Box::into_raw(Box::new(MpBasis(b))), "out")
    })
}

/// # Safety
/// `basis` must come from [`mp_basis_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_basis_free(basis: *mut MpBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Number of basis functions, 0 for a null handle.
///
/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_basis_n_basis(basis: *const MpBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.0.n_basis())
}

/// Writes the `n_basis` basis values at `t`.
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_basis_eval(basis: *const MpBasis, t: f64, out: *mut f64, out_len: usize) -> MpStatus {
    guard(|| {
        let b = handle(basis, "basis")?;
        let values = b.0.eval_basis(t)?;
        output(out, out_len, values.len(), "out")?.copy_from_slice(&values);
        Ok(())
    })
}

/// Penalized least-squares coefficients of one series.
///
/// # Safety
/// `times` and `values` must hold `n` doubles; `coefficients` must hold
/// `coefficients_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_fit_coordinate(
    basis: *const MpBasis,
    times: *const f64,
    values: *const f64,
    n: usize,
    lambda: f64,
    coefficients: *mut f64,
    coefficients_len: usize,
) -> MpStatus {
    guard(|| {
        let b = handle(basis, "basis")?;
        let t = input(times, n, "times")?.to_vec();
        let v = input(values, n, "values")?.to_vec();
        let series = RawSeries::new("series", 0, t, v)?;
        let c = fit_coordinate(&b.0, &series, lambda)?;
        output(coefficients, coefficients_len, c.len(), "coefficients")?.copy_from_slice(c.as_slice());
        Ok(())
    })
}

/// Parses a sample from its JSON exchange form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mp_sample_from_json(json: *const c_char, out: *mut *mut MpSample) -> MpStatus {
    guard(|| {
        let s = sample_from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(MpSample(s))), "out")
    })
}

/// Serializes a sample; free the result with [`mp_string_free`].
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mp_sample_to_json(sample: *const MpSample, out: *mut *mut c_char) -> MpStatus {
    guard(|| {
        let s = handle(sample, "sample")?;
        let json = owned_string(sample_to_json(&s.0)?)?;
        put(out, json, "out")
    })
}

/// # Safety
/// `sample` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_sample_free(sample: *mut MpSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of devices, 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_sample_len(sample: *const MpSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.len())
}

/// Number of coordinates, 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_sample_p(sample: *const MpSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.p())
}

/// Writes the `p` coordinates of device `device` at time `t`.
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_sample_eval(
    sample: *const MpSample,
    device: usize,
    t: f64,
    out: *mut f64,
    out_len: usize,
) -> MpStatus {
    guard(|| {
        let s = handle(sample, "sample")?;
        let datum = s.0.data().get(device).ok_or_else(|| {
            Failure(MpStatus::Input, format!("device {device} out of range"))
        })?;
        let values = datum.eval(t)?;
        output(out, out_len, values.len(), "out")?.copy_from_slice(&values);
        Ok(())
    })
}

/// Inner product of devices `i` and `j`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mp_sample_inner_product(sample: *const MpSample, i: usize, j: usize, out: *mut f64) -> MpStatus {
    guard(|| {
        let s = handle(sample, "sample")?;
        let data = s.0.data();
        let (f, g) = match (data.get(i), data.get(j)) {
            (Some(f), Some(g)) => (f, g),
            _ => return Err(Failure(MpStatus::Input, format!("device pair ({i}, {j}) out of range"))),
        };
        put(out, inner_product(f, g)?, "out")
    })
}

/// Outlyingness report on a uniform grid of `grid_size` points.
/// `directions == 0` selects the default direction count.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mp_analyze(
    sample: *const MpSample,
    grid_size: usize,
    gamma: f64,
    directions: usize,
    seed: u64,
    out: *mut *mut MpReport,
) -> MpStatus {
    guard(|| {
        let s = handle(sample, "sample")?;
        let grid = EvaluationGrid::uniform(s.0.domain_end(), grid_size)?;
        let config = ProjectionConfig {
            count: (directions > 0).then_some(directions),
            seed,
        };
        let report = outlyingness_report(&s.0, &grid, &config, gamma)?;
        put(out, Box::into_raw(Box::new(MpReport(report))), "out")
    })
}

/// # Safety
/// `report` must come from [`mp_analyze`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_report_free(report: *mut MpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of devices in the report, 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_report_len(report: *const MpReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.devices.len())
}

/// Functional adjusted outlyingness per device.
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_report_fao(report: *const MpReport, out: *mut f64, out_len: usize) -> MpStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let dst = output(out, out_len, r.devices.len(), "out")?;
        for (d, dev) in dst.iter_mut().zip(&r.devices) {
            *d = dev.fao;
        }
        Ok(())
    })
}

/// Depth per device.
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_report_depth(report: *const MpReport, out: *mut f64, out_len: usize) -> MpStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let dst = output(out, out_len, r.devices.len(), "out")?;
        for (d, dev) in dst.iter_mut().zip(&r.devices) {
            *d = dev.depth;
        }
        Ok(())
    })
}

/// Outlier flags per device, 1 for flagged.
///
/// # Safety
/// `out` must hold `out_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mp_report_flags(report: *const MpReport, out: *mut u8, out_len: usize) -> MpStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let dst = output(out, out_len, r.devices.len(), "out")?;
        for (d, dev) in dst.iter_mut().zip(&r.devices) {
            *d = u8::from(dev.outlier_flag);
        }
        Ok(())
    })
}

/// Device indices of the central set, ascending. `count` receives the set
/// size even when the buffer is too small.
///
/// # Safety
/// `out` must hold `out_len` values; `count` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mp_report_central_set(
    report: *const MpReport,
    out: *mut usize,
    out_len: usize,
    count: *mut usize,
) -> MpStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        put(count, r.central_set.len(), "count")?;
        output(out, out_len, r.central_set.len(), "out")?.copy_from_slice(&r.central_set);
        Ok(())
    })
}

/// Serializes a report; free the result with [`mp_string_free`].
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mp_report_to_json(report: *const MpReport, out: *mut *mut c_char) -> MpStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let json = owned_string(r.0.to_json()?)?;
        put(out, json, "out")
    })
}

/// Medcouple of `n` values.
///
/// # Safety
/// `values` must hold `n` doubles; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mp_medcouple(values: *const f64, n: usize, out: *mut f64) -> MpStatus {
    guard(|| {
        let v = input(values, n, "values")?;
        put(out, medcouple(v)?, "out")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn errors_set_status_and_message() {
        let mut b: *mut MpBasis = ptr::null_mut();
        let status = unsafe { mp_basis_new(-1.0, 10, 4, 2, &mut b) };
        assert_eq!(status, MpStatus::Config);
        assert!(b.is_null());
        let msg = unsafe { CStr::from_ptr(mp_last_error_message()) };
        assert!(!msg.to_bytes().is_empty());

        let mut m = 0.0;
        assert_eq!(unsafe { mp_medcouple(ptr::null(), 3, &mut m) }, MpStatus::NullPointer);
        let v = [0.0, 1.0, 10.0];
        assert_eq!(unsafe { mp_medcouple(v.as_ptr(), 3, &mut m) }, MpStatus::Ok);
        assert!((m - 0.8).abs() < 1e-15);
        assert!(unsafe { CStr::from_ptr(mp_last_error_message()) }.to_bytes().is_empty());
    }

    #[test]
    fn short_buffers_are_reported() {
        let mut b: *mut MpBasis = ptr::null_mut();
        assert_eq!(unsafe { mp_basis_new(1.0, 8, 4, 2, &mut b) }, MpStatus::Ok);
        let mut out = [0.0; 4];
        assert_eq!(unsafe { mp_basis_eval(b, 0.5, out.as_mut_ptr(), out.len()) }, MpStatus::BufferTooSmall);
        let mut full = [0.0; 8];
        assert_eq!(unsafe { mp_basis_eval(b, 0.5, full.as_mut_ptr(), full.len()) }, MpStatus::Ok);
        assert!((full.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        unsafe { mp_basis_free(b) };
        assert_eq!(unsafe { mp_basis_n_basis(ptr::null()) }, 0);
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(mp_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
