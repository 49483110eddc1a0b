//! C ABI over `lyapcert`. Certificates are opaque handles owned by the
//! caller and released with the matching `_free` function. Every entry point
//! returns a [`LyapcertStatus`]; on failure the message is available from
//! [`lyapcert_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lyapcert::cert_continuous::{appendix_max_rate, certify_ode, solve_r_bar, ContinuationSettings, ContinuousCertificate};
use lyapcert::cert_discrete::{certify, optimal_params, solve_r, DiscreteCertificate};
use lyapcert::negative::infeasibility_scan;
use lyapcert::{Error, MethodParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapcertStatus {
    Ok = 0,
    InvalidArgument = 1,
    OutOfRange = 2,
    NotNesterovFamily = 3,
    Pole = 4,
    Numerical = 5,
    NullPointer = 6,
    Panic = 7,
}

pub struct LyapcertDiscrete(DiscreteCertificate);

pub struct LyapcertContinuous(ContinuousCertificate);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LyapcertDiscreteSummary {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub b: f64,
    pub r: f64,
    pub rho_sq: f64,
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
    /// Ascending.
    pub t_eigenvalues: [f64; 3],
    pub valid: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LyapcertContinuousSummary {
    pub m: f64,
    pub b_bar: f64,
    pub r_bar: f64,
    pub lambda: f64,
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
    pub t_eigenvalues: [f64; 3],
    pub conservative: bool,
    pub valid: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LyapcertAppendixPoint {
    pub kappa: f64,
    pub r_bar: f64,
    pub s_bar: f64,
    pub b_bar: f64,
    pub p11_over_m: f64,
    pub p12_over_m: f64,
    pub p22_over_m: f64,
    pub valid: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LyapcertScanSummary {
    pub kappa: f64,
    pub c: f64,
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub samples: usize,
    pub best_lambda_max: f64,
    pub contradiction: f64,
    pub feasible: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LyapcertStatus {
    match e {
        Error::InvalidProblem(_) | Error::InvalidArgument(_) => LyapcertStatus::InvalidArgument,
        Error::OutOfRange { .. } => LyapcertStatus::OutOfRange,
        Error::NotNesterovFamily { .. } => LyapcertStatus::NotNesterovFamily,
        Error::Pole(_) => LyapcertStatus::Pole,
        Error::RootNotConverged(_) | Error::ContinuationStall { .. } | Error::Divergence { .. } | Error::Io(_) => {
            LyapcertStatus::Numerical
        }
    }
}

/// Runs `f`, converting library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (LyapcertStatus, String)>) -> LyapcertStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LyapcertStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            LyapcertStatus::Panic
        }
    }
}

fn lib<T>(r: lyapcert::Result<T>) -> Result<T, (LyapcertStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (LyapcertStatus, String) {
    (LyapcertStatus::NullPointer, format!("{what} is NULL"))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length excluding the NUL.
/// Returns 0 when there is no error. `buf` may be NULL to query the length.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Static version string.
#[no_mangle]
pub extern "C" fn lyapcert_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Certifies `x_{k+1} = x_k + β(x_k − x_{k−1}) − α∇f(x_k + γ(x_k − x_{k−1}))`
/// on the class `(m, L)`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free with
/// [`lyapcert_discrete_free`].
#[no_mangle]
pub unsafe extern "C" fn lyapcert_discrete_certify(
    m: f64,
    l: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    out: *mut *mut LyapcertDiscrete,
) -> LyapcertStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let pc = lib(lyapcert::model::validate_problem(m, l))?;
        let mp = lib(MethodParams::new(alpha, beta, gamma))?;
        let c = lib(certify(&pc, &mp))?;
        write_handle(out, LyapcertDiscrete(c));
        Ok(())
    })
}

/// Certificate for `α = 1/L` and the accelerated momentum.
///
/// # Safety
/// As for [`lyapcert_discrete_certify`].
#[no_mangle]
pub unsafe extern "C" fn lyapcert_discrete_optimal(m: f64, l: f64, out: *mut *mut LyapcertDiscrete) -> LyapcertStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let pc = lib(lyapcert::model::validate_problem(m, l))?;
        let c = lib(certify(&pc, &optimal_params(&pc)))?;
        write_handle(out, LyapcertDiscrete(c));
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_discrete_summary(
    h: *const LyapcertDiscrete,
    out: *mut LyapcertDiscreteSummary,
) -> LyapcertStatus {
    guard(|| {
        let c = &h.as_ref().ok_or_else(|| null("handle"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = LyapcertDiscreteSummary {
            alpha: c.params.alpha,
            beta: c.params.beta,
            delta: c.nd.delta,
            b: c.nd.b,
            r: c.r,
            rho_sq: c.rho_sq,
            p11: c.p_hat.p11,
            p12: c.p_hat.p12,
            p22: c.p_hat.p22,
            t_eigenvalues: c.t_hat_eigenvalues,
            valid: c.valid,
        };
        Ok(())
    })
}

/// Constant `C` in `f(x_k) − f* ≤ C ρ^{2k}` for a start in dimension `dim`.
///
/// # Safety
/// `h` must be a live handle; `x0_minus_xm1` and `x0_minus_xstar` must point
/// to `dim` readable doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_discrete_bound_constant(
    h: *const LyapcertDiscrete,
    gap0: f64,
    x0_minus_xm1: *const f64,
    x0_minus_xstar: *const f64,
    dim: usize,
    out: *mut f64,
) -> LyapcertStatus {
    guard(|| {
        let c = &h.as_ref().ok_or_else(|| null("handle"))?.0;
        if x0_minus_xm1.is_null() || x0_minus_xstar.is_null() {
            return Err(null("input vector"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let a = std::slice::from_raw_parts(x0_minus_xm1, dim);
        let b = std::slice::from_raw_parts(x0_minus_xstar, dim);
        *out = c.bound_constant(gap0, a, b);
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_discrete_free(h: *mut LyapcertDiscrete) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Certifies `ẍ + b̄√m ẋ + ∇f(x) = 0`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free with
/// [`lyapcert_continuous_free`].
#[no_mangle]
pub unsafe extern "C" fn lyapcert_continuous_certify(
    m: f64,
    b_bar: f64,
    out: *mut *mut LyapcertContinuous,
) -> LyapcertStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let c = lib(certify_ode(m, b_bar))?;
        write_handle(out, LyapcertContinuous(c));
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_continuous_summary(
    h: *const LyapcertContinuous,
    out: *mut LyapcertContinuousSummary,
) -> LyapcertStatus {
    guard(|| {
        let c = &h.as_ref().ok_or_else(|| null("handle"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = LyapcertContinuousSummary {
            m: c.m,
            b_bar: c.b_bar,
            r_bar: c.r_bar,
            lambda: c.lambda,
            p11: c.p_bar_hat.p11,
            p12: c.p_bar_hat.p12,
            p22: c.p_bar_hat.p22,
            t_eigenvalues: c.t_bar_eigenvalues,
            conservative: c.conservative,
            valid: c.valid,
        };
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_continuous_free(h: *mut LyapcertContinuous) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Rate variable `r` on the discrete curve; `delta = 0` selects the ODE curve.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_solve_r(b: f64, delta: f64, out: *mut f64) -> LyapcertStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lib(if delta == 0.0 { solve_r_bar(b) } else { solve_r(b, delta) })?;
        Ok(())
    })
}

/// Best ODE rate with the smoothness multiplier at condition number `kappa`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_appendix_max_rate(kappa: f64, out: *mut LyapcertAppendixPoint) -> LyapcertStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = lib(appendix_max_rate(kappa, &ContinuationSettings::default()))?;
        *out = LyapcertAppendixPoint {
            kappa: p.kappa,
            r_bar: p.r_bar,
            s_bar: p.s_bar,
            b_bar: p.b_bar,
            p11_over_m: p.p11_over_m,
            p12_over_m: p.p12_over_m,
            p22_over_m: p.p22_over_m,
            valid: p.valid,
        };
        Ok(())
    })
}

/// Random search for a Heavy Ball certificate (`gamma_equals_beta` runs the
/// Nesterov control instead).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lyapcert_hb_scan(
    kappa: f64,
    c: f64,
    samples: usize,
    seed: u64,
    gamma_equals_beta: bool,
    out: *mut LyapcertScanSummary,
) -> LyapcertStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = lib(infeasibility_scan(kappa, c, samples, seed, gamma_equals_beta))?;
        *out = LyapcertScanSummary {
            kappa: r.kappa,
            c: r.c,
            delta: r.delta,
            beta: r.beta,
            gamma: r.gamma,
            samples: r.samples,
            best_lambda_max: r.best_lambda_max,
            contradiction: r.contradiction,
            feasible: r.feasible,
        };
        Ok(())
    })
}
