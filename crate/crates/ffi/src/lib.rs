//! C ABI over zetasign. Every call returns a [`ZsStatus`]; outputs go
//! through caller pointers, and after a failure [`zs_last_error`] holds the
//! message. Handles are opaque and freed with their `_free` function.
//!
//! Strings written into caller buffers are NUL-terminated; a buffer that is
//! too small yields `ZS_STATUS_BUFFER_TOO_SMALL` and `*needed` (when not
//! null) receives the required size including the terminator.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use zetasign::charfun::PsiEvaluator;
use zetasign::cli::format_value;
use zetasign::density::{density_significant, parse_sigma, DensityKind, DensityOptions};
use zetasign::error::Error;
use zetasign::numerics::PrecisionContext;
use zetasign::qpoly::QTable;
use zetasign::Float;

/// Status codes; the nonzero ones below 7 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZsStatus {
    Ok = 0,
    InvalidArgument = 2,
    Domain = 3,
    Precision = 4,
    Invariant = 5,
    Convergence = 6,
    NullPointer = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Which density `zs_density` computes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZsDensityKind {
    /// `|arg zeta| > pi/2`
    D = 0,
    /// `Re zeta < 0`
    DMinus = 1,
    /// `Re zeta > 0`
    DPlus = 2,
    /// `|arg zeta| > (2k+1) pi/2`
    Ak = 3,
    /// `d - d_minus`
    Gap = 4,
}

/// Opaque evaluator of `psi_sigma(x)` for `|x| <= xmax`.
pub struct ZsPsi {
    inner: PsiEvaluator,
    digits: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> ZsStatus {
    match e.exit_code() {
        2 => ZsStatus::InvalidArgument,
        3 => ZsStatus::Domain,
        4 => ZsStatus::Precision,
        5 => ZsStatus::Invariant,
        _ => ZsStatus::Convergence,
    }
}

/// Runs `f`, recording errors and turning panics into `ZS_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> Result<(), (ZsStatus, String)>) -> ZsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            ZsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ZsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (ZsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (ZsStatus, String) {
    (ZsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ZsStatus, String)> {
    if p.is_null() {
        return Err(null_err(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (ZsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_str(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), (ZsStatus, String)> {
    let n = text.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || len < n {
        return Err((ZsStatus::BufferTooSmall, format!("need {n} bytes, have {len}")));
    }
    std::ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

/// Creates an evaluator of `psi_sigma` on `|x| <= xmax` good to `digits`
/// decimal places. `sigma` is text such as `"0.8"` or `"0.5+1e-11"`.
///
/// # Safety
/// `sigma` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zs_psi_new(sigma: *const c_char, xmax: f64, digits: u32, out: *mut *mut ZsPsi) -> ZsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        *out = std::ptr::null_mut();
        let ctx = PrecisionContext::with_digits(digits);
        let s = parse_sigma(read_str(sigma, "sigma")?, ctx.working_bits()).map_err(lib_err)?;
        let inner = PsiEvaluator::new(&s, xmax, &ctx).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ZsPsi { inner, digits }));
        Ok(())
    })
}

/// `psi_sigma(x)` rounded to double, with its error bound in `*error`
/// (may be null).
///
/// # Safety
/// `h` must come from `zs_psi_new`; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn zs_psi_eval(h: *const ZsPsi, x: f64, value: *mut f64, error: *mut f64) -> ZsStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null_err("handle"))?;
        if value.is_null() {
            return Err(null_err("value"));
        }
        let xv = rug_from(x, h.inner.ctx().working_bits());
        let v = h.inner.psi_with_budget(&xv).map_err(lib_err)?;
        *value = v.value.to_f64();
        if !error.is_null() {
            *error = v.budget.total().to_f64();
        }
        Ok(())
    })
}

/// `psi_sigma(x)` as decimal text with the handle's digit count.
///
/// # Safety
/// `h` must come from `zs_psi_new`; `buf` must hold `len` bytes; `needed`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn zs_psi_eval_text(
    h: *const ZsPsi,
    x: f64,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> ZsStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null_err("handle"))?;
        let xv = rug_from(x, h.inner.ctx().working_bits());
        let v = h.inner.psi(&xv).map_err(lib_err)?;
        write_str(&format_value(&v, h.digits), buf, len, needed)
    })
}

/// Releases an evaluator; null is ignored.
///
/// # Safety
/// `h` must come from `zs_psi_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zs_psi_free(h: *mut ZsPsi) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// A density at `sigma` to `digits` significant digits. `k` is used only
/// for `ZS_DENSITY_KIND_AK`. The value goes to `buf` as text; `*value` and
/// `*error` (either may be null) receive doubles.
///
/// # Safety
/// `sigma` must be NUL-terminated; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn zs_density(
    sigma: *const c_char,
    kind: ZsDensityKind,
    k: u32,
    digits: u32,
    value: *mut f64,
    error: *mut f64,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> ZsStatus {
    guard(|| {
        let text = read_str(sigma, "sigma")?;
        let s = parse_sigma(text, 256).map_err(lib_err)?;
        let kind = match kind {
            ZsDensityKind::D => DensityKind::D,
            ZsDensityKind::DMinus => DensityKind::DMinus,
            ZsDensityKind::DPlus => DensityKind::DPlus,
            ZsDensityKind::Ak => DensityKind::Ak(k),
            ZsDensityKind::Gap => DensityKind::Gap,
        };
        let r = density_significant(&s, kind, digits, &PrecisionContext::with_digits(30), &DensityOptions::default())
            .map_err(lib_err)?;
        if !value.is_null() {
            *value = r.value.to_f64();
        }
        if !error.is_null() {
            *error = r.budget.total().to_f64();
        }
        write_str(&format_value(&r.value, digits), buf, len, needed)
    })
}

/// The exact coefficient `q_{n,k}`, `1 <= k <= n`, in decimal.
///
/// # Safety
/// `buf` must hold `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn zs_qcoeff(n: u32, k: u32, buf: *mut c_char, len: usize, needed: *mut usize) -> ZsStatus {
    guard(|| {
        if n == 0 || k == 0 || k > n {
            return Err((ZsStatus::InvalidArgument, format!("need 1 <= k <= n, got n = {n}, k = {k}")));
        }
        let table = QTable::build(n as usize).map_err(lib_err)?;
        write_str(&table.q(n as usize, k as usize).to_string(), buf, len, needed)
    })
}

/// Message for the last failed call on this thread; empty after success.
///
/// # Safety
/// `buf` must hold `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn zs_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> ZsStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match write_str(&msg, buf, len, needed) {
        Ok(()) => ZsStatus::Ok,
        Err((s, _)) => s,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn rug_from(x: f64, bits: u32) -> Float {
    Float::with_val(bits, x)
}
