//! C ABI for the sequential monitor.
//!
//! The surface follows the usual opaque-handle pattern: `rw_monitor_new`
//! allocates a monitor behind an opaque pointer, every call returns an
//! [`RwStatus`] code, results are written through out-pointers, and
//! `rw_monitor_free` releases the handle. The generated header lands in
//! `include/ratewatch.h` at build time.
//!
//! All functions are panic-safe: a panic inside the library is caught and
//! reported as [`RwStatus::InternalError`] instead of unwinding across the
//! FFI boundary. Handles are not synchronized; callers serialize access to
//! each monitor, matching the single-writer contract of the Rust type.

use ratewatch::monitor::{Monitor, MonitorError};
use ratewatch::stats::{log_e_process, MixtureParams};
use ratewatch::{confidence::sequential_p, Arm};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Arm identifier accepted by [`rw_monitor_ingest`].
pub const RW_ARM_A: i32 = 0;
/// Arm identifier accepted by [`rw_monitor_ingest`].
pub const RW_ARM_B: i32 = 1;

/// Result code of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was outside its domain (bad α, φ, arm id or timestamp).
    InvalidArgument = 2,
    /// The event's timestamp precedes the monitor clock.
    OutOfOrder = 3,
    /// The requested confidence set came back empty (cannot happen for valid
    /// α; reported rather than asserted).
    EmptySet = 4,
    /// An unexpected internal failure; the handle is still valid.
    InternalError = 5,
}

/// Opaque monitor handle.
pub struct RwMonitor {
    inner: Monitor,
}

/// Flat report snapshot, the C view of a monitor report.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RwReport {
    /// Query time.
    pub t: f64,
    /// Events seen on arm A.
    pub n_a: u64,
    /// Events seen on arm B.
    pub n_b: u64,
    /// Confidence interval for the cumulative rate of arm A.
    pub lo_a: f64,
    pub hi_a: f64,
    /// Confidence interval for the cumulative rate of arm B.
    pub lo_b: f64,
    pub hi_b: f64,
    /// Confidence interval for the difference (B minus A); may be negative.
    pub lo_diff: f64,
    pub hi_diff: f64,
    /// Natural log of the equality e-process.
    pub log_e: f64,
    /// Sequential p-value in (0, 1].
    pub p: f64,
    /// True once the e-process has ever reached 1/α.
    pub rejected: bool,
}

fn status_of(err: &MonitorError) -> RwStatus {
    match err {
        MonitorError::OutOfOrder { .. } => RwStatus::OutOfOrder,
        MonitorError::BadTimestamp(_)
        | MonitorError::AlphaOutOfRange(_)
        | MonitorError::ReportBeforeLastEvent { .. } => RwStatus::InvalidArgument,
        MonitorError::Confidence(ratewatch::confidence::ConfidenceError::EmptyInterval {
            ..
        }) => RwStatus::EmptySet,
        _ => RwStatus::InternalError,
    }
}

/// Allocate a monitor with mixture precision `phi` and error level `alpha`.
/// Returns null when the parameters are out of domain. Free with
/// [`rw_monitor_free`].
#[no_mangle]
pub extern "C" fn rw_monitor_new(phi: f64, alpha: f64) -> *mut RwMonitor {
    let built = catch_unwind(|| {
        let params = MixtureParams::new(phi).ok()?;
        let inner = Monitor::new(params, alpha).ok()?;
        Some(Box::new(RwMonitor { inner }))
    });
    match built {
        Ok(Some(monitor)) => Box::into_raw(monitor),
        _ => std::ptr::null_mut(),
    }
}

/// Release a monitor created by [`rw_monitor_new`]. Passing null is a no-op.
///
/// # Safety
/// `monitor` must be null or a pointer obtained from [`rw_monitor_new`] that
/// has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn rw_monitor_free(monitor: *mut RwMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}

/// Feed one event. `arm` is [`RW_ARM_A`] or [`RW_ARM_B`]; timestamps must be
/// nondecreasing across calls (ties allowed).
///
/// # Safety
/// `monitor` must be a live handle from [`rw_monitor_new`], not freed, and
/// not used concurrently from other threads.
#[no_mangle]
pub unsafe extern "C" fn rw_monitor_ingest(
    monitor: *mut RwMonitor,
    arm: i32,
    ts: f64,
) -> RwStatus {
    let Some(handle) = monitor.as_mut() else {
        return RwStatus::NullPointer;
    };
    let arm = match arm {
        RW_ARM_A => Arm::A,
        RW_ARM_B => Arm::B,
        _ => return RwStatus::InvalidArgument,
    };
    match catch_unwind(AssertUnwindSafe(|| handle.inner.ingest(arm, ts))) {
        Ok(Ok(())) => RwStatus::Ok,
        Ok(Err(err)) => status_of(&err),
        Err(_) => RwStatus::InternalError,
    }
}

fn fill_report(monitor: &Monitor, t: f64, out: &mut RwReport) -> RwStatus {
    let result = catch_unwind(AssertUnwindSafe(|| monitor.report(t)));
    match result {
        Ok(Ok(report)) => {
            *out = RwReport {
                t: report.t,
                n_a: report.n_a,
                n_b: report.n_b,
                lo_a: report.interval_a.lower(),
                hi_a: report.interval_a.upper(),
                lo_b: report.interval_b.lower(),
                hi_b: report.interval_b.upper(),
                lo_diff: report.interval_diff.lower(),
                hi_diff: report.interval_diff.upper(),
                log_e: report.log_e,
                p: report.p,
                rejected: report.rejected,
            };
            RwStatus::Ok
        }
        Ok(Err(err)) => status_of(&err),
        Err(_) => RwStatus::InternalError,
    }
}

/// Write the anytime-valid snapshot at time `t` (which must not precede the
/// last ingested event) into `out`.
///
/// # Safety
/// `monitor` must be a live handle and `out` a valid, writable report struct.
#[no_mangle]
pub unsafe extern "C" fn rw_monitor_report(
    monitor: *const RwMonitor,
    t: f64,
    out: *mut RwReport,
) -> RwStatus {
    let Some(handle) = monitor.as_ref() else {
        return RwStatus::NullPointer;
    };
    let Some(out) = out.as_mut() else {
        return RwStatus::NullPointer;
    };
    fill_report(&handle.inner, t, out)
}

/// [`rw_monitor_report`] at the default clock, the last event time.
///
/// # Safety
/// Same contract as [`rw_monitor_report`].
#[no_mangle]
pub unsafe extern "C" fn rw_monitor_report_now(
    monitor: *const RwMonitor,
    out: *mut RwReport,
) -> RwStatus {
    let Some(handle) = monitor.as_ref() else {
        return RwStatus::NullPointer;
    };
    let Some(out) = out.as_mut() else {
        return RwStatus::NullPointer;
    };
    fill_report(&handle.inner, handle.inner.last_ts(), out)
}

/// Natural log of the equality e-process for the given counts, written to
/// `out`.
///
/// # Safety
/// `out` must be a valid, writable double.
#[no_mangle]
pub unsafe extern "C" fn rw_log_e_process(
    n_a: u64,
    n_b: u64,
    phi: f64,
    out: *mut f64,
) -> RwStatus {
    let Some(out) = out.as_mut() else {
        return RwStatus::NullPointer;
    };
    let Ok(params) = MixtureParams::new(phi) else {
        return RwStatus::InvalidArgument;
    };
    match catch_unwind(|| log_e_process(n_a, n_b, params)) {
        Ok(v) => {
            *out = v;
            RwStatus::Ok
        }
        Err(_) => RwStatus::InternalError,
    }
}

/// Sequential p-value `min(1, 1/E)` for the given counts, written to `out`.
///
/// # Safety
/// `out` must be a valid, writable double.
#[no_mangle]
pub unsafe extern "C" fn rw_sequential_p(n_a: u64, n_b: u64, phi: f64, out: *mut f64) -> RwStatus {
    let Some(out) = out.as_mut() else {
        return RwStatus::NullPointer;
    };
    let Ok(params) = MixtureParams::new(phi) else {
        return RwStatus::InvalidArgument;
    };
    match catch_unwind(|| sequential_p(n_a, n_b, params)) {
        Ok(v) => {
            *out = v;
            RwStatus::Ok
        }
        Err(_) => RwStatus::InternalError,
    }
}
