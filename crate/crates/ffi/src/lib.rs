//! C ABI over the `isopar` engine.
//!
//! Every fallible call returns an [`IsoparStatus`]; on failure the message is kept per
//! thread and can be read with [`isopar_last_error_message`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use isopar::classify::{run_case, to_json, CaseReport, CaseSpec, RunConfig};
use isopar::{build_clifford_system, verify_clifford_system, CliffordFamily, CliffordSystem, Error};

/// Status codes. `0` is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoparStatus {
    Ok = 0,
    InvalidArgument = 1,
    Unsupported = 2,
    Infeasible = 3,
    NonConvergence = 4,
    Internal = 5,
    Io = 6,
    Serialization = 7,
    NullPointer = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Clifford family selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoparFamily {
    Standard = 0,
    Definite = 1,
    Indefinite = 2,
}

impl From<IsoparFamily> for CliffordFamily {
    fn from(f: IsoparFamily) -> Self {
        match f {
            IsoparFamily::Standard => CliffordFamily::Standard,
            IsoparFamily::Definite => CliffordFamily::Definite,
            IsoparFamily::Indefinite => CliffordFamily::Indefinite,
        }
    }
}

/// Opaque Clifford system.
pub struct IsoparClifford {
    sys: CliffordSystem,
}

/// Opaque classification result for one case.
pub struct IsoparReport {
    report: CaseReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IsoparStatus {
    match e {
        Error::InvalidArgument(_) => IsoparStatus::InvalidArgument,
        Error::UnsupportedFamily(_) | Error::Unsupported(_) => IsoparStatus::Unsupported,
        Error::Infeasible(_) => IsoparStatus::Infeasible,
        Error::NonConvergence { .. } => IsoparStatus::NonConvergence,
        Error::Internal(_) => IsoparStatus::Internal,
        Error::Io { .. } => IsoparStatus::Io,
        Error::Json(_) | Error::Csv(_) => IsoparStatus::Serialization,
    }
}

/// Run `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (IsoparStatus, String)>>(f: F) -> IsoparStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IsoparStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside isopar".into());
            IsoparStatus::Panic
        }
    }
}

fn lift(e: Error) -> (IsoparStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IsoparStatus, String) {
    (IsoparStatus::NullPointer, format!("{what} is null"))
}

/// Length in bytes (without the terminating NUL) of the last error message, 0 if none.
#[no_mangle]
pub extern "C" fn isopar_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copy the last error message into `buf` (NUL-terminated).
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn isopar_last_error_message(buf: *mut c_char, len: usize) -> IsoparStatus {
    if buf.is_null() {
        return IsoparStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |s| s.as_bytes());
        if bytes.len() + 1 > len {
            return IsoparStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
        *buf.add(bytes.len()) = 0;
        IsoparStatus::Ok
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn isopar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Build the Clifford system `P_0, ..., P_m` on `R^{2l}`, `l = k delta(m)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn isopar_clifford_new(
    m: usize,
    k: usize,
    family: IsoparFamily,
    out: *mut *mut IsoparClifford,
) -> IsoparStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sys = build_clifford_system(m, k, family.into()).map_err(lift)?;
        *out = Box::into_raw(Box::new(IsoparClifford { sys }));
        Ok(())
    })
}

/// Release a Clifford handle. Null is ignored.
///
/// # Safety
/// `h` must come from [`isopar_clifford_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isopar_clifford_free(h: *mut IsoparClifford) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Ambient dimension `2l` (0 for a null handle).
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isopar_clifford_ambient_dim(h: *const IsoparClifford) -> usize {
    h.as_ref().map_or(0, |h| h.sys.ambient_dim())
}

/// Copy `P_a` column-major into `buf` of length `(2l)^2`.
///
/// # Safety
/// `h` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn isopar_clifford_generator(
    h: *const IsoparClifford,
    a: usize,
    buf: *mut f64,
    len: usize,
) -> IsoparStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if a > h.sys.m {
            return Err((IsoparStatus::InvalidArgument, format!("generator index {a} > m = {}", h.sys.m)));
        }
        let p = h.sys.generator(a);
        if len < p.len() {
            return Err((IsoparStatus::BufferTooSmall, format!("need {} doubles", p.len())));
        }
        ptr::copy_nonoverlapping(p.as_slice().as_ptr(), buf, p.len());
        Ok(())
    })
}

/// Check the Clifford relations; writes the largest residual and the pass flag.
///
/// # Safety
/// `h` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn isopar_clifford_verify(
    h: *const IsoparClifford,
    tol: f64,
    max_residual: *mut f64,
    passed: *mut bool,
) -> IsoparStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if max_residual.is_null() || passed.is_null() {
            return Err(null("output pointer"));
        }
        let v = verify_clifford_system(&h.sys, tol);
        *max_residual = v.max_anticommutator_residual.max(v.max_symmetry_residual);
        *passed = v.passed;
        Ok(())
    })
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (IsoparStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (IsoparStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Classify one case (`otfkm:M1:4:2[:family]` or `homog:<id>`) with the default sampling
/// budget, `points` random points and the given seed.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isopar_classify_case(
    spec: *const c_char,
    seed: u64,
    points: usize,
    out: *mut *mut IsoparReport,
) -> IsoparStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: CaseSpec = read_str(spec, "spec")?.parse().map_err(lift)?;
        let cfg = RunConfig {
            seed,
            points,
            ..RunConfig::default()
        };
        cfg.validate().map_err(lift)?;
        let report = run_case(&spec, &cfg);
        if let Some(e) = &report.error {
            return Err((IsoparStatus::Internal, e.clone()));
        }
        *out = Box::into_raw(Box::new(IsoparReport { report }));
        Ok(())
    })
}

/// Release a report. Null is ignored.
///
/// # Safety
/// `r` must come from [`isopar_classify_case`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isopar_report_free(r: *mut IsoparReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Whether the verdicts agree with the predicted matrix.
///
/// # Safety
/// `r` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn isopar_report_matches_expected(r: *const IsoparReport) -> bool {
    r.as_ref().is_some_and(|r| r.report.matches_expected)
}

/// Verdicts as `-1` (indeterminate), `0` (no), `1` (yes), in the order
/// A, B, Ricci parallel, Einstein.
///
/// # Safety
/// `r` must be a live report and `out` must point to 4 writable ints.
#[no_mangle]
pub unsafe extern "C" fn isopar_report_verdicts(r: *const IsoparReport, out: *mut i32) -> IsoparStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        for (i, v) in r.report.verdicts().iter().enumerate() {
            *out.add(i) = v.as_bool().map_or(-1, i32::from);
        }
        Ok(())
    })
}

/// The report as JSON; free with [`isopar_string_free`]. Null on failure.
///
/// # Safety
/// `r` must be a live report.
#[no_mangle]
pub unsafe extern "C" fn isopar_report_json(r: *const IsoparReport) -> *mut c_char {
    let mut out = ptr::null_mut();
    let status = guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        let s = to_json(&r.report).map_err(lift)?;
        out = CString::new(s)
            .map_err(|e| (IsoparStatus::Serialization, e.to_string()))?
            .into_raw();
        Ok(())
    });
    if status == IsoparStatus::Ok {
        out
    } else {
        ptr::null_mut()
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isopar_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let n = isopar_last_error_length();
        let mut buf = vec![0 as c_char; n + 1];
        assert_eq!(unsafe { isopar_last_error_message(buf.as_mut_ptr(), buf.len()) }, IsoparStatus::Ok);
        unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn clifford_round_trip() {
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { isopar_clifford_new(3, 2, IsoparFamily::Standard, &mut h) }, IsoparStatus::Ok);
        let n = unsafe { isopar_clifford_ambient_dim(h) };
        assert_eq!(n, 16);
        let mut buf = vec![0.0; n * n];
        assert_eq!(unsafe { isopar_clifford_generator(h, 1, buf.as_mut_ptr(), buf.len()) }, IsoparStatus::Ok);
        assert!(buf.iter().any(|v| *v != 0.0));
        let (mut r, mut ok) = (1.0, false);
        assert_eq!(unsafe { isopar_clifford_verify(h, 1e-12, &mut r, &mut ok) }, IsoparStatus::Ok);
        assert!(ok && r == 0.0);
        assert_eq!(
            unsafe { isopar_clifford_generator(h, 9, buf.as_mut_ptr(), buf.len()) },
            IsoparStatus::InvalidArgument
        );
        assert!(last_error().contains("generator index"));
        assert_eq!(
            unsafe { isopar_clifford_generator(h, 0, buf.as_mut_ptr(), 3) },
            IsoparStatus::BufferTooSmall
        );
        unsafe { isopar_clifford_free(h) };
    }

    #[test]
    fn errors_and_nulls() {
        let mut h = ptr::null_mut();
        let s = unsafe { isopar_clifford_new(0, 1, IsoparFamily::Standard, &mut h) };
        assert_ne!(s, IsoparStatus::Ok);
        assert!(h.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            unsafe { isopar_clifford_new(3, 1, IsoparFamily::Standard, ptr::null_mut()) },
            IsoparStatus::NullPointer
        );
        let mut small = [0 as c_char; 2];
        assert_eq!(
            unsafe { isopar_last_error_message(small.as_mut_ptr(), small.len()) },
            IsoparStatus::BufferTooSmall
        );
        let bad = CString::new("homog:nope").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(unsafe { isopar_classify_case(bad.as_ptr(), 0, 1, &mut r) }, IsoparStatus::InvalidArgument);
        unsafe {
            isopar_clifford_free(ptr::null_mut());
            isopar_report_free(ptr::null_mut());
            isopar_string_free(ptr::null_mut());
        }
    }

    #[test]
    fn classify_through_the_abi() {
        let spec = CString::new("otfkm:M2:1:3").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(unsafe { isopar_classify_case(spec.as_ptr(), 1, 1, &mut r) }, IsoparStatus::Ok);
        assert!(unsafe { isopar_report_matches_expected(r) });
        let mut v = [9i32; 4];
        assert_eq!(unsafe { isopar_report_verdicts(r, v.as_mut_ptr()) }, IsoparStatus::Ok);
        assert_eq!(v, [1, 1, 1, 0]);
        let js = unsafe { isopar_report_json(r) };
        assert!(!js.is_null());
        let text = unsafe { CStr::from_ptr(js) }.to_str().unwrap().to_owned();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["case"], "otfkm:M2:1:3");
        unsafe {
            isopar_string_free(js);
            isopar_report_free(r);
        }
        let ver = unsafe { CStr::from_ptr(isopar_version()) };
        assert_eq!(ver.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
