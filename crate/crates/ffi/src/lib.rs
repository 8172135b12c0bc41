//! C interface. Every fallible call returns a [`QrStatus`] and writes its
//! result through an out-pointer; the message of the most recent failure on
//! the calling thread is available from [`qr_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quadroth::arith::{compute_w, sigma_count};
use quadroth::counting::{count_ktrivial, Equation, SubspaceFamily};
use quadroth::expsum::{decay_sup, gauss_sum};
use quadroth::majorant::{wtricked_majorant, Majorant, WParams};
use quadroth::regularity::{rado_number, Budget, RadoStatus};
use quadroth::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Overflow = 3,
    BudgetExhausted = 4,
    Internal = 5,
}

/// Family of subspaces used by [`qr_count_ktrivial`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrFamily {
    /// One subspace `x_i = x_j` per pair.
    Pairs = 0,
    /// The diagonal `x_1 = ... = x_s`.
    Diagonal = 1,
}

/// Outcome of a colouring search.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrRadoStatus {
    RegularAtN = 0,
    NoWitnessUpToN = 1,
    ExhaustedBudget = 2,
}

/// Opaque W-trick parameters.
pub struct QrWParams(WParams);

/// Opaque majorant.
pub struct QrMajorant(Majorant);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QrStatus {
    match e {
        Error::Overflow(_) => QrStatus::Overflow,
        Error::BudgetExhausted(_) => QrStatus::BudgetExhausted,
        Error::Io(_) => QrStatus::Internal,
        _ => QrStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), QrStatus>) -> QrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QrStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            QrStatus::Internal
        }
    }
}

fn lift<T>(r: quadroth::Result<T>) -> Result<T, QrStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), QrStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        return Err(QrStatus::NullPointer);
    }
    Ok(())
}

unsafe fn equation_from(coeffs: *const i64, len: usize) -> Result<Equation, QrStatus> {
    non_null(coeffs, "coeffs")?;
    let c = std::slice::from_raw_parts(coeffs, len).to_vec();
    lift(Equation::new(c))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Writes `W = 8 * (product of the odd primes up to w)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qr_compute_w(w: u64, out: *mut u64) -> QrStatus {
    guard(|| {
        non_null(out, "out")?;
        let m = lift(compute_w(w))?;
        let m = u64::try_from(m).map_err(|_| {
            set_error("W does not fit in 64 bits".into());
            QrStatus::Overflow
        })?;
        *out = m;
        Ok(())
    })
}

/// Writes the number of residues `z mod modulus` with `z^2 = -b2`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qr_sigma_count(modulus: u64, b2: u64, out: *mut u64) -> QrStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(sigma_count(modulus, b2))?;
        Ok(())
    })
}

/// Allocates W-trick parameters; release with [`qr_wparams_free`].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qr_wparams_new(x: u64, w: u64, b1: u64, b2: u64, out: *mut *mut QrWParams) -> QrStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = lift(WParams::new(x, w, b1, b2))?;
        *out = Box::into_raw(Box::new(QrWParams(p)));
        Ok(())
    })
}

/// Releases parameters from [`qr_wparams_new`]. Null is ignored.
///
/// # Safety
/// `p` must come from [`qr_wparams_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qr_wparams_free(p: *mut QrWParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Writes `W`, `sigma` and the support length `N` (any out-pointer may be null).
///
/// # Safety
/// `p` must be a live handle; non-null out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qr_wparams_info(
    p: *const QrWParams,
    modulus: *mut u64,
    sigma: *mut u64,
    n: *mut u64,
) -> QrStatus {
    guard(|| {
        non_null(p, "params")?;
        let p = &(*p).0;
        if !modulus.is_null() {
            *modulus = p.modulus();
        }
        if !sigma.is_null() {
            *sigma = p.sigma();
        }
        if !n.is_null() {
            *n = p.nb();
        }
        Ok(())
    })
}

/// Builds the W-tricked majorant; release with [`qr_majorant_free`].
///
/// # Safety
/// `p` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qr_majorant_new(p: *const QrWParams, out: *mut *mut QrMajorant) -> QrStatus {
    guard(|| {
        non_null(p, "params")?;
        non_null(out, "out")?;
        let m = lift(wtricked_majorant(&(*p).0))?;
        *out = Box::into_raw(Box::new(QrMajorant(m)));
        Ok(())
    })
}

/// Releases a majorant. Null is ignored.
///
/// # Safety
/// `m` must come from [`qr_majorant_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qr_majorant_free(m: *mut QrMajorant) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Support length `N`; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qr_majorant_len(m: *const QrMajorant) -> u64 {
    if m.is_null() {
        return 0;
    }
    (*m).0.support_len()
}

/// Total mass `sum_n nu(n)`; NaN for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qr_majorant_mass(m: *const QrMajorant) -> f64 {
    if m.is_null() {
        return f64::NAN;
    }
    (*m).0.mass()
}

/// Value `nu(n)`, zero off the support; NaN for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qr_majorant_value(m: *const QrMajorant, n: i64) -> f64 {
    if m.is_null() {
        return f64::NAN;
    }
    (*m).0.value(n)
}

/// Writes the real and imaginary parts of the Gauss sum `S(q, a; z)`.
///
/// # Safety
/// `p` must be a live handle; `re` and `im` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qr_gauss_sum(
    p: *const QrWParams,
    q: u64,
    a: i64,
    z: i64,
    re: *mut f64,
    im: *mut f64,
) -> QrStatus {
    guard(|| {
        non_null(p, "params")?;
        non_null(re, "re")?;
        non_null(im, "im")?;
        let s = lift(gauss_sum(q, a, z, &(*p).0))?;
        *re = s.re;
        *im = s.im;
        Ok(())
    })
}

/// Writes `sup |nu_hat(alpha) - 1_[1,N]_hat(alpha)| / N` over a grid of
/// `grid_factor * N` points.
///
/// # Safety
/// `p` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qr_decay_sup(p: *const QrWParams, grid_factor: u64, out: *mut f64) -> QrStatus {
    guard(|| {
        non_null(p, "params")?;
        non_null(out, "out")?;
        *out = lift(decay_sup(&(*p).0, grid_factor))?.sup_ratio;
        Ok(())
    })
}

/// Counts solutions `x in [1, x_max]^s` of `c . x^2 = 0` lying in the union
/// of the chosen family. Fails with `Overflow` past 2^64.
///
/// # Safety
/// `coeffs` must point to `len` values and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qr_count_ktrivial(
    coeffs: *const i64,
    len: usize,
    family: QrFamily,
    x_max: u64,
    out: *mut u64,
) -> QrStatus {
    guard(|| {
        non_null(out, "out")?;
        let eq = equation_from(coeffs, len)?;
        let fam = match family {
            QrFamily::Pairs => SubspaceFamily::pairs_equal(eq),
            QrFamily::Diagonal => lift(SubspaceFamily::diagonal(eq))?,
        };
        let c = lift(count_ktrivial(x_max, &fam))?;
        *out = u64::try_from(c).map_err(|_| {
            set_error("count does not fit in 64 bits".into());
            QrStatus::Overflow
        })?;
        Ok(())
    })
}

/// Searches `r`-colourings of `[1, n_max]` for the least `n` forcing a
/// monochromatic distinct-entry solution. A zero budget selects the default.
/// An exhausted budget is reported through `status`, not the return value.
///
/// # Safety
/// `coeffs` must point to `len` values; `n` and `status` valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn qr_rado_number(
    coeffs: *const i64,
    len: usize,
    r: u32,
    n_max: u64,
    max_nodes: u64,
    max_millis: u64,
    n: *mut u64,
    status: *mut QrRadoStatus,
) -> QrStatus {
    guard(|| {
        non_null(n, "n")?;
        non_null(status, "status")?;
        let eq = equation_from(coeffs, len)?;
        let d = Budget::default();
        let budget = Budget {
            max_nodes: if max_nodes == 0 { d.max_nodes } else { max_nodes },
            max_millis: if max_millis == 0 { d.max_millis } else { max_millis },
        };
        let res = lift(rado_number(&eq, r, n_max, budget))?;
        *n = res.n;
        *status = match res.status {
            RadoStatus::RegularAtN => QrRadoStatus::RegularAtN,
            RadoStatus::NoWitnessUpToN => QrRadoStatus::NoWitnessUpToN,
            RadoStatus::ExhaustedBudget => QrRadoStatus::ExhaustedBudget,
        };
        Ok(())
    })
}
