//! C ABI over the schedule toolkit: opaque schedule handles, integer status
//! codes, and a thread-local last-error message. The companion build script
//! generates `include/schedkit.h` from these declarations.
//!
//! Conventions:
//! - every fallible call returns an [`SkStatus`]; `SK_STATUS_OK` is zero;
//! - on failure, [`sk_last_error_message`] describes the error until the next
//!   failing call on the same thread;
//! - handles returned through out-parameters are owned by the caller and
//!   must be released with [`sk_schedule_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{self, AssertUnwindSafe};

use schedkit::refine::{refine, GradientNormLog, NormKind, RefinementConfig, Weighting, ZeroPolicy};
use schedkit::{apply_warmup, fit_poly, make_schedule, Error, Schedule, ScheduleKind};

/// Result of a toolkit call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Input text or structure could not be parsed.
    ParseError = 2,
    /// Mathematically invalid input (wrong length, nonpositive values,
    /// degenerate norms, and so on).
    DomainError = 3,
}

/// Base schedule families; `power` applies to `Poly`, `beta` to `InvT` and
/// `InvSqrt`, and `Stepwise` uses the conventional 30/60/90 percent
/// milestones with factor 0.1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkScheduleKind {
    Linear = 0,
    Poly = 1,
    Cosine = 2,
    Stepwise = 3,
    InvT = 4,
    InvSqrt = 5,
    Constant = 6,
}

/// Opaque sequence of per-step learning-rate multipliers.
pub struct SkSchedule(Schedule);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(e: &Error) -> SkStatus {
    set_error(&e.to_string());
    match e {
        Error::Parse { .. } | Error::Io(_) => SkStatus::ParseError,
        _ => SkStatus::DomainError,
    }
}

fn fail_null(name: &str) -> SkStatus {
    set_error(&format!("null pointer argument: {name}"));
    SkStatus::NullArgument
}

/// Run an FFI body, converting any internal panic into a domain error
/// instead of unwinding across the C boundary.
fn guarded(body: impl FnOnce() -> SkStatus) -> SkStatus {
    match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal error");
            SkStatus::DomainError
        }
    }
}

/// Message describing the most recent failure on this thread, empty if no
/// call has failed yet. The pointer stays valid until the next failing
/// toolkit call on the same thread.
#[no_mangle]
pub extern "C" fn sk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Build a peak-normalized schedule of `steps` multipliers with an optional
/// leading warmup ramp covering `warmup` of the horizon (0 disables it).
///
/// # Safety
/// `out` must be a valid pointer; on success it receives an owned handle.
#[no_mangle]
pub unsafe extern "C" fn sk_schedule_make(
    kind: SkScheduleKind,
    steps: usize,
    warmup: f64,
    power: f64,
    beta: f64,
    out: *mut *mut SkSchedule,
) -> SkStatus {
    guarded(|| {
        if out.is_null() {
            return fail_null("out");
        }
        let kind = match kind {
            SkScheduleKind::Linear => ScheduleKind::Linear,
            SkScheduleKind::Poly => ScheduleKind::Poly { power },
            SkScheduleKind::Cosine => ScheduleKind::Cosine,
            SkScheduleKind::Stepwise => ScheduleKind::stepwise_default(),
            SkScheduleKind::InvT => ScheduleKind::InvT { beta },
            SkScheduleKind::InvSqrt => ScheduleKind::InvSqrt { beta },
            SkScheduleKind::Constant => ScheduleKind::Constant,
        };
        let built = make_schedule(&kind, steps)
            .and_then(|s| s.normalize())
            .and_then(|s| apply_warmup(&s, warmup));
        match built {
            Ok(schedule) => {
                unsafe { *out = Box::into_raw(Box::new(SkSchedule(schedule))) };
                SkStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Turn a logged sequence of Euclidean gradient norms into a refined
/// schedule: median-filter the norms with a window of roughly `tau` times
/// the horizon, weight steps by inverse squared filtered norms, and convert
/// the weights into multipliers. When `clamp_zeros` is false, norms that are
/// zero after filtering are an error; when true they are clamped to a small
/// fraction of the largest norm.
///
/// # Safety
/// `norms` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sk_schedule_refine(
    norms: *const f64,
    len: usize,
    tau: f64,
    clamp_zeros: bool,
    out: *mut *mut SkSchedule,
) -> SkStatus {
    guarded(|| {
        if norms.is_null() {
            return fail_null("norms");
        }
        if out.is_null() {
            return fail_null("out");
        }
        let norms = unsafe { std::slice::from_raw_parts(norms, len) };
        let config = RefinementConfig {
            tau,
            weighting: Weighting::for_kind(NormKind::L2),
            zero_policy: if clamp_zeros {
                ZeroPolicy::Clamp {
                    epsilon_fraction: 1e-6,
                }
            } else {
                ZeroPolicy::Error
            },
        };
        let refined = GradientNormLog::from_norms(norms.to_vec(), NormKind::L2)
            .and_then(|log| refine(&log, &config));
        match refined {
            Ok(refinement) => {
                unsafe { *out = Box::into_raw(Box::new(SkSchedule(refinement.schedule))) };
                SkStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of steps in the schedule; zero when the handle is null.
///
/// # Safety
/// `schedule` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sk_schedule_len(schedule: *const SkSchedule) -> usize {
    if schedule.is_null() {
        return 0;
    }
    unsafe { &*schedule }.0.len()
}

/// Copy the schedule's multipliers into `out`, which must hold exactly
/// `len == sk_schedule_len(schedule)` doubles.
///
/// # Safety
/// `schedule` must be a live handle; `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn sk_schedule_values(
    schedule: *const SkSchedule,
    out: *mut f64,
    len: usize,
) -> SkStatus {
    guarded(|| {
        if schedule.is_null() {
            return fail_null("schedule");
        }
        if out.is_null() {
            return fail_null("out");
        }
        let values = unsafe { &*schedule }.0.values();
        if values.len() != len {
            set_error(&format!(
                "buffer length {len} does not match schedule length {}",
                values.len()
            ));
            return SkStatus::DomainError;
        }
        unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), out, len) };
        SkStatus::Ok
    })
}

/// Release a schedule handle. Null is accepted and ignored.
///
/// # Safety
/// `schedule` must be null or an owned handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sk_schedule_free(schedule: *mut SkSchedule) {
    if !schedule.is_null() {
        drop(unsafe { Box::from_raw(schedule) });
    }
}

/// Evaluate the last-iterate suboptimality bound for running SGD with the
/// multipliers `eta` against per-step gradient-norm bounds `gnorms`
/// (`gnorms_len` must equal `eta_len`) from a start at most `distance` away
/// from the comparator. Writes the bound total to `out_total`.
///
/// # Safety
/// `eta` and `gnorms` must point to `eta_len` and `gnorms_len` readable
/// doubles; `out_total` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sk_bound_total(
    eta: *const f64,
    eta_len: usize,
    gnorms: *const f64,
    gnorms_len: usize,
    distance: f64,
    out_total: *mut f64,
) -> SkStatus {
    guarded(|| {
        if eta.is_null() {
            return fail_null("eta");
        }
        if gnorms.is_null() {
            return fail_null("gnorms");
        }
        if out_total.is_null() {
            return fail_null("out_total");
        }
        let eta = unsafe { std::slice::from_raw_parts(eta, eta_len) };
        let gnorms = unsafe { std::slice::from_raw_parts(gnorms, gnorms_len) };
        let report = Schedule::new(eta.to_vec())
            .and_then(|s| schedkit::bounds::anyeta_bound(&s, gnorms, distance));
        match report {
            Ok(report) => {
                unsafe { *out_total = report.total };
                SkStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fit a warmup-plus-polynomial-decay profile to arbitrary multipliers,
/// returning the warmup fraction, decay power, and root-mean-square
/// residual of the fit.
///
/// # Safety
/// `values` must point to `len` readable doubles; the three out-pointers
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn sk_fit_poly(
    values: *const f64,
    len: usize,
    out_warmup: *mut f64,
    out_power: *mut f64,
    out_rms: *mut f64,
) -> SkStatus {
    guarded(|| {
        if values.is_null() {
            return fail_null("values");
        }
        if out_warmup.is_null() || out_power.is_null() || out_rms.is_null() {
            return fail_null("out parameters");
        }
        let values = unsafe { std::slice::from_raw_parts(values, len) };
        let fit = Schedule::new(values.to_vec()).and_then(|s| fit_poly(&s));
        match fit {
            Ok(fit) => {
                unsafe {
                    *out_warmup = fit.warmup_fraction;
                    *out_power = fit.power;
                    *out_rms = fit.rms_residual;
                }
                SkStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// The closed-form constant `c(T)` such that linear decay at the tuned
/// scale guarantees `f(x_T) - f* <= c(T) DG / sqrt(T)`; defined for
/// horizons of at least two.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_linear_decay_constant(horizon: usize, out: *mut f64) -> SkStatus {
    guarded(|| {
        if out.is_null() {
            return fail_null("out");
        }
        match schedkit::bounds::linear_decay_constant(horizon) {
            Ok(c) => {
                unsafe { *out = c };
                SkStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
