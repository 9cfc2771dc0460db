//! Streaming two-arm monitor with anytime-valid reports.
//!
//! [`Monitor`] consumes timestamped events from arms A and B and can be asked
//! at any time for a [`MonitorReport`]: simultaneous confidence intervals for
//! each arm's cumulative rate and for their difference, the equality
//! e-process, a sequential p-value and the stop decision. The e-process
//! depends only on the event counts, so it is piecewise constant between
//! events and checking the rejection threshold at event times captures every
//! crossing; rejection uses the running peak, which makes it a first-crossing
//! stopping rule and hence monotone in time.
//!
//! A `Monitor` is a plain value: single writer, snapshot (`Clone`) for
//! concurrent readers, freely movable across threads.

use crate::confidence::{
    arm_interval, difference_interval, sequential_p, univariate_interval, ConfidenceError,
    Interval, JointQuery,
};
use crate::stats::{log_e_process, log_mixture_m, LogValue, MixtureParams, StatsError};
use crate::Arm;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("out-of-order timestamp {ts} on arm {arm} (monitor already at {last_ts})")]
    OutOfOrder { arm: Arm, ts: f64, last_ts: f64 },
    #[error("timestamp must be nonnegative and finite, got {0}")]
    BadTimestamp(f64),
    #[error("alpha must lie strictly inside (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("report time {t} precedes the last ingested event at {last_ts}")]
    ReportBeforeLastEvent { t: f64, last_ts: f64 },
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Streaming state for the two-arm equality test.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    n_a: u64,
    n_b: u64,
    last_ts: f64,
    params: MixtureParams,
    alpha: f64,
    log_e: LogValue,
    log_e_peak: LogValue,
    rejected_at: Option<f64>,
}

/// Snapshot of everything the monitor knows at a query time.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub t: f64,
    pub n_a: u64,
    pub n_b: u64,
    /// Confidence interval for `Λ^A(t)`, projected from the joint set.
    pub interval_a: Interval,
    /// Confidence interval for `Λ^B(t)`, projected from the joint set.
    pub interval_b: Interval,
    /// Confidence interval for `Λ^B(t) − Λ^A(t)`; may extend below zero.
    pub interval_diff: Interval,
    /// Natural log of the equality e-process at `t`.
    pub log_e: f64,
    /// Sequential p-value, `min(1, 1/E)`.
    pub p: f64,
    /// Whether the e-process has ever reached `1/α` at or before `t`.
    pub rejected: bool,
}

impl Monitor {
    pub fn new(params: MixtureParams, alpha: f64) -> Result<Self, MonitorError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(MonitorError::AlphaOutOfRange(alpha));
        }
        Ok(Self {
            n_a: 0,
            n_b: 0,
            last_ts: 0.0,
            params,
            alpha,
            log_e: LogValue::ONE,
            log_e_peak: LogValue::ONE,
            rejected_at: None,
        })
    }

    /// Feed one event. Timestamps must be nondecreasing (ties allowed);
    /// simultaneous events are processed in input order — only the counts
    /// matter.
    pub fn ingest(&mut self, arm: Arm, ts: f64) -> Result<(), MonitorError> {
        if !ts.is_finite() || ts < 0.0 {
            return Err(MonitorError::BadTimestamp(ts));
        }
        if ts < self.last_ts {
            return Err(MonitorError::OutOfOrder {
                arm,
                ts,
                last_ts: self.last_ts,
            });
        }
        match arm {
            Arm::A => self.n_a += 1,
            Arm::B => self.n_b += 1,
        }
        self.last_ts = ts;
        let log_e = log_e_process(self.n_a, self.n_b, self.params);
        self.log_e = LogValue::from_log(log_e)?;
        self.log_e_peak = self.log_e_peak.max(self.log_e);
        if self.rejected_at.is_none() && self.log_e_peak.log() >= self.log_threshold() {
            self.rejected_at = Some(ts);
        }
        Ok(())
    }

    /// Assemble the anytime-valid snapshot at caller time `t ≥ last event`.
    pub fn report(&self, t: f64) -> Result<MonitorReport, MonitorError> {
        if !t.is_finite() || t < self.last_ts {
            return Err(MonitorError::ReportBeforeLastEvent {
                t,
                last_ts: self.last_ts,
            });
        }
        let q = JointQuery::new(self.n_a, self.n_b, self.params, self.alpha)?;
        Ok(MonitorReport {
            t,
            n_a: self.n_a,
            n_b: self.n_b,
            interval_a: arm_interval(&q, Arm::A)?,
            interval_b: arm_interval(&q, Arm::B)?,
            interval_diff: difference_interval(&q)?,
            log_e: self.log_e.log(),
            p: sequential_p(self.n_a, self.n_b, self.params),
            rejected: self.rejected_at.is_some(),
        })
    }

    /// [`Monitor::report`] at the default clock, the last event time.
    pub fn report_now(&self) -> Result<MonitorReport, MonitorError> {
        self.report(self.last_ts)
    }

    pub fn n_a(&self) -> u64 {
        self.n_a
    }

    pub fn n_b(&self) -> u64 {
        self.n_b
    }

    pub fn last_ts(&self) -> f64 {
        self.last_ts
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> MixtureParams {
        self.params
    }

    /// Natural log of the current e-value.
    pub fn log_e(&self) -> f64 {
        self.log_e.log()
    }

    /// Running supremum of the log e-value over all ingested events.
    pub fn log_e_peak(&self) -> f64 {
        self.log_e_peak.log()
    }

    /// Time of the first threshold crossing, if any.
    pub fn rejected_at(&self) -> Option<f64> {
        self.rejected_at
    }

    pub fn is_rejected(&self) -> bool {
        self.rejected_at.is_some()
    }

    fn log_threshold(&self) -> f64 {
        -self.alpha.ln()
    }
}

/// Single-arm mode: one stream tested against a fully specified null
/// cumulative rate, with the univariate confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleArmMonitor {
    n: u64,
    last_ts: f64,
    params: MixtureParams,
    alpha: f64,
}

impl SingleArmMonitor {
    pub fn new(params: MixtureParams, alpha: f64) -> Result<Self, MonitorError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(MonitorError::AlphaOutOfRange(alpha));
        }
        Ok(Self {
            n: 0,
            last_ts: 0.0,
            params,
            alpha,
        })
    }

    pub fn ingest(&mut self, ts: f64) -> Result<(), MonitorError> {
        if !ts.is_finite() || ts < 0.0 {
            return Err(MonitorError::BadTimestamp(ts));
        }
        if ts < self.last_ts {
            return Err(MonitorError::OutOfOrder {
                arm: Arm::A,
                ts,
                last_ts: self.last_ts,
            });
        }
        self.n += 1;
        self.last_ts = ts;
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn last_ts(&self) -> f64 {
        self.last_ts
    }

    /// Confidence interval for this arm's own `Λ(t)`.
    pub fn interval(&self) -> Result<Interval, MonitorError> {
        Ok(univariate_interval(self.n, self.params, self.alpha)?)
    }

    /// Log martingale against a hypothesized null with cumulative rate
    /// `big_lambda0` at the current time. Exceeding `ln(1/α)` rejects that
    /// null with time-uniform error `α`.
    pub fn log_martingale(&self, big_lambda0: f64) -> Result<f64, MonitorError> {
        Ok(log_mixture_m(self.n, big_lambda0, self.params)?)
    }
}
