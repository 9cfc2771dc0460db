//! Command implementations behind the `ratewatch` binary.
//!
//! Four commands over newline-delimited streams (JSON by default, CSV by
//! flag):
//!
//! * `simulate` — draw two arms from intensity specs and merge them into one
//!   ordered event stream;
//! * `monitor` — replay an event stream, emitting one report row per event
//!   and per grid tick;
//! * `compare` — trajectories of the three equality e-processes on constant
//!   arms, with their theoretical growth limits;
//! * `coverage` — Monte Carlo miscoverage of the single-arm confidence
//!   process against the true cumulative rate.
//!
//! Every command is a pure function of (config, inputs, seed); rerunning with
//! the same arguments produces byte-identical output. Timestamps are written
//! in shortest round-trip decimal, which always carries at least 9
//! significant digits when they matter.

use crate::confidence::{univariate_interval, Interval, ConfidenceError};
use crate::monitor::{Monitor, MonitorError};
use crate::simulate::{IntensitySpec, SimulateError};
use crate::stats::{
    growth_rate_equality, growth_rate_gaussian, log_asymptotic_e, log_bernoulli_e, log_e_process,
    MixtureParams, RatePair, StatsError,
};
use crate::Arm;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

/// Fixed column order of monitor report rows; frozen by golden tests.
pub const REPORT_HEADER: &str = "t,n_a,n_b,lo_a,hi_a,lo_b,hi_b,lo_diff,hi_diff,log_e,p,rejected";
/// Fixed column order of event rows.
pub const EVENT_HEADER: &str = "ts,arm";
/// Fixed column order of compare rows.
pub const COMPARE_HEADER: &str =
    "rep,t,log_e_over_t,log_bernoulli_over_t,log_gaussian_over_t,limit_equality,limit_bernoulli,limit_gaussian";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: out-of-order timestamp {ts} on arm {arm} (stream already at {last_ts})")]
    OutOfOrder {
        line: usize,
        arm: Arm,
        ts: f64,
        last_ts: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Ndjson,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ndjson" | "json" => Ok(OutputFormat::Ndjson),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected ndjson or csv)")),
        }
    }
}

/// Shared run parameters. Rates are per abstract unit of time; the seed
/// derives one independent substream per (replication, arm).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub phi: f64,
    pub alpha: f64,
    pub seed: u64,
    /// End of the observation window. `monitor` accepts 0 to mean "stop at
    /// the last event"; the sampling commands require it positive.
    pub horizon: f64,
    pub reps: u64,
    /// Report cadence. Intervals depend only on counts, so tick rows merely
    /// repeat values between events; they are kept for plotting step
    /// functions faithfully.
    pub grid_step: Option<f64>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            phi: 1.0,
            alpha: 0.05,
            seed: 0,
            horizon: 100.0,
            reps: 1,
            grid_step: None,
            format: OutputFormat::Ndjson,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(CliError::Config(format!("phi must be positive, got {}", self.phi)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!(
                "alpha must lie strictly inside (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(CliError::Config(format!(
                "horizon must be nonnegative and finite, got {}",
                self.horizon
            )));
        }
        if self.reps == 0 {
            return Err(CliError::Config("reps must be at least 1".into()));
        }
        if let Some(step) = self.grid_step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(CliError::Config(format!(
                    "grid-step must be positive, got {step}"
                )));
            }
        }
        Ok(())
    }

    fn params(&self) -> Result<MixtureParams, CliError> {
        Ok(MixtureParams::new(self.phi)?)
    }

    /// Seed for the given substream. Two arms per replication: arm A of
    /// replication `r` is stream `2r`, arm B is `2r + 1`.
    fn stream_seed(&self, stream: u64) -> u64 {
        self.seed ^ stream
    }
}

/// One timestamped event, the unit of the wire format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub ts: f64,
    pub arm: Arm,
}

/// One monitor output row: counts, the three simultaneous intervals, the log
/// e-value, the sequential p-value and the running stop decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub t: f64,
    pub n_a: u64,
    pub n_b: u64,
    pub lo_a: f64,
    pub hi_a: f64,
    pub lo_b: f64,
    pub hi_b: f64,
    pub lo_diff: f64,
    pub hi_diff: f64,
    pub log_e: f64,
    pub p: f64,
    pub rejected: bool,
}

/// Whether the monitored stream crossed the rejection threshold by the end of
/// input. The binary maps this to its exit code (2 when rejected, 0 when not).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorOutcome {
    NotRejected,
    Rejected,
}

/// Outcome of a coverage run: how often the true `Λ(t)` ever left the
/// confidence process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageSummary {
    pub reps: u64,
    pub miscovered: u64,
    pub fraction: f64,
    pub se: f64,
    pub alpha: f64,
}

/// Draw both arms on `[0, horizon]` and write the merged, time-ordered event
/// stream. Simultaneous arrivals keep arm A first; the merge is deterministic
/// per seed.
pub fn cmd_simulate(
    config: &RunConfig,
    spec_a: &IntensitySpec,
    spec_b: &IntensitySpec,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    config.validate()?;
    let a = spec_a.sample(config.horizon, config.stream_seed(0))?;
    let b = spec_b.sample(config.horizon, config.stream_seed(1))?;

    if config.format == OutputFormat::Csv {
        writeln!(out, "{EVENT_HEADER}")?;
    }
    let (mut ia, mut ib) = (a.timestamps().iter().peekable(), b.timestamps().iter().peekable());
    loop {
        let take_a = match (ia.peek(), ib.peek()) {
            (Some(ta), Some(tb)) => ta <= tb,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let record = if take_a {
            EventRecord {
                ts: *ia.next().unwrap(),
                arm: Arm::A,
            }
        } else {
            EventRecord {
                ts: *ib.next().unwrap(),
                arm: Arm::B,
            }
        };
        write_event(out, config.format, &record)?;
    }
    Ok(())
}

fn write_event(out: &mut dyn Write, format: OutputFormat, e: &EventRecord) -> Result<(), CliError> {
    match format {
        OutputFormat::Ndjson => {
            serde_json::to_writer(&mut *out, e)
                .map_err(|err| CliError::Config(err.to_string()))?;
            out.write_all(b"\n")?;
        }
        OutputFormat::Csv => writeln!(out, "{},{}", e.ts, e.arm)?,
    }
    Ok(())
}

/// Parse one event line in the given format.
fn parse_event(line: &str, format: OutputFormat, line_no: usize) -> Result<EventRecord, CliError> {
    let bad = |message: String| CliError::Parse {
        line: line_no,
        message,
    };
    match format {
        OutputFormat::Ndjson => {
            serde_json::from_str(line).map_err(|e| bad(format!("invalid event JSON: {e}")))
        }
        OutputFormat::Csv => {
            let (ts, arm) = line
                .split_once(',')
                .ok_or_else(|| bad("expected \"ts,arm\"".into()))?;
            Ok(EventRecord {
                ts: ts
                    .trim()
                    .parse()
                    .map_err(|e| bad(format!("invalid timestamp {ts:?}: {e}")))?,
                arm: arm.trim().parse().map_err(bad)?,
            })
        }
    }
}

/// Replay an event stream through the monitor. Emits one row per event, one
/// per grid tick, and a final row at `max(horizon, last event)`; exits with
/// the stop decision. Input must be sorted by timestamp.
pub fn cmd_monitor(
    config: &RunConfig,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<MonitorOutcome, CliError> {
    config.validate()?;
    let mut monitor = Monitor::new(config.params()?, config.alpha)?;

    if config.format == OutputFormat::Csv {
        writeln!(out, "{REPORT_HEADER}")?;
    }

    let mut ticks = Ticker::new(config.grid_step);
    let mut last_emitted_t: Option<f64> = None;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (line_no == 1 && trimmed == EVENT_HEADER) {
            continue;
        }
        let event = parse_event(trimmed, config.format, line_no)?;
        // Grid ticks strictly before this event, capped at the horizon. The
        // event row that follows always overwrites last_emitted_t.
        while let Some(tick) = ticks.next_before(event.ts.min(config.horizon)) {
            emit_report(out, config, &monitor, tick)?;
        }
        monitor.ingest(event.arm, event.ts).map_err(|e| match e {
            MonitorError::OutOfOrder { arm, ts, last_ts } => CliError::OutOfOrder {
                line: line_no,
                arm,
                ts,
                last_ts,
            },
            MonitorError::BadTimestamp(ts) => CliError::Parse {
                line: line_no,
                message: format!("timestamp must be nonnegative and finite, got {ts}"),
            },
            other => CliError::Monitor(other),
        })?;
        emit_report(out, config, &monitor, event.ts)?;
        last_emitted_t = Some(event.ts);
    }

    // Remaining ticks inside the horizon, then a final row at the horizon
    // (or at the last event if the stream outran it).
    while let Some(tick) = ticks.next_before(config.horizon) {
        emit_report(out, config, &monitor, tick)?;
        last_emitted_t = Some(tick);
    }
    let end = config.horizon.max(monitor.last_ts());
    if last_emitted_t != Some(end) {
        emit_report(out, config, &monitor, end)?;
    }

    Ok(if monitor.is_rejected() {
        MonitorOutcome::Rejected
    } else {
        MonitorOutcome::NotRejected
    })
}

/// Grid ticks at multiples of `step`, consumed in order.
struct Ticker {
    step: Option<f64>,
    k: u64,
}

impl Ticker {
    fn new(step: Option<f64>) -> Self {
        Self { step, k: 1 }
    }

    fn next_before(&mut self, t: f64) -> Option<f64> {
        let step = self.step?;
        let tick = self.k as f64 * step;
        if tick < t {
            self.k += 1;
            Some(tick)
        } else {
            None
        }
    }
}

fn emit_report(
    out: &mut dyn Write,
    config: &RunConfig,
    monitor: &Monitor,
    t: f64,
) -> Result<(), CliError> {
    let report = monitor.report(t.max(monitor.last_ts()))?;
    let row = ReportRow {
        t,
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
    match config.format {
        OutputFormat::Ndjson => {
            serde_json::to_writer(&mut *out, &row)
                .map_err(|err| CliError::Config(err.to_string()))?;
            out.write_all(b"\n")?;
        }
        OutputFormat::Csv => writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.t,
            row.n_a,
            row.n_b,
            row.lo_a,
            row.hi_a,
            row.lo_b,
            row.hi_b,
            row.lo_diff,
            row.hi_diff,
            row.log_e,
            row.p,
            row.rejected
        )?,
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct CompareLimits {
    kind: &'static str,
    limit_equality: f64,
    limit_bernoulli: f64,
    limit_gaussian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct CompareRow {
    kind: &'static str,
    rep: u64,
    t: f64,
    log_e_over_t: f64,
    log_bernoulli_over_t: f64,
    log_gaussian_over_t: f64,
}

/// Simulate `reps` constant-rate paths and emit, at every grid time, the
/// normalized trajectories `ln E(t)/t` of the three e-processes, together
/// with their theoretical growth limits. The beta-binomial variant uses the
/// uniform mixture (a = b = 1); its limit matches the equality e-process.
pub fn cmd_compare(
    config: &RunConfig,
    rates: RatePair,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    config.validate()?;
    let params = config.params()?;
    let limit_equality = growth_rate_equality(rates)?;
    let limits = CompareLimits {
        kind: "limits",
        limit_equality,
        limit_bernoulli: limit_equality,
        limit_gaussian: growth_rate_gaussian(rates)?,
    };
    match config.format {
        OutputFormat::Ndjson => {
            serde_json::to_writer(&mut *out, &limits)
                .map_err(|err| CliError::Config(err.to_string()))?;
            out.write_all(b"\n")?;
        }
        OutputFormat::Csv => writeln!(out, "{COMPARE_HEADER}")?,
    }

    let step = config.grid_step.unwrap_or(config.horizon / 100.0);
    let spec_a = IntensitySpec::Constant {
        rate: rates.lambda_a(),
    };
    let spec_b = IntensitySpec::Constant {
        rate: rates.lambda_b(),
    };
    for rep in 0..config.reps {
        let a = spec_a.sample(config.horizon, config.stream_seed(2 * rep))?;
        let b = spec_b.sample(config.horizon, config.stream_seed(2 * rep + 1))?;
        let mut k = 1u64;
        loop {
            let t = k as f64 * step;
            if t > config.horizon {
                break;
            }
            let n_a = a.count_at(t);
            let n_b = b.count_at(t);
            let row = CompareRow {
                kind: "path",
                rep,
                t,
                log_e_over_t: log_e_process(n_a, n_b, params) / t,
                log_bernoulli_over_t: log_bernoulli_e(n_a, n_b, 1.0, 1.0)? / t,
                log_gaussian_over_t: log_asymptotic_e(n_a, n_b, t, params)? / t,
            };
            match config.format {
                OutputFormat::Ndjson => {
                    serde_json::to_writer(&mut *out, &row)
                        .map_err(|err| CliError::Config(err.to_string()))?;
                    out.write_all(b"\n")?;
                }
                OutputFormat::Csv => writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    row.rep,
                    row.t,
                    row.log_e_over_t,
                    row.log_bernoulli_over_t,
                    row.log_gaussian_over_t,
                    limits.limit_equality,
                    limits.limit_bernoulli,
                    limits.limit_gaussian
                )?,
            }
            k += 1;
        }
    }
    Ok(())
}

/// Monte Carlo miscoverage of the single-arm confidence process: simulate
/// `reps` null paths from `spec`, and count the paths on which the true
/// `Λ(t)` ever leaves the interval.
///
/// Between consecutive events the interval is fixed and `Λ` is nondecreasing,
/// so within each inter-event window the extremes are attained at the window
/// ends; checking there captures the continuous-time supremum exactly (grid
/// ticks and event times are interior points of these windows).
pub fn cmd_coverage(
    config: &RunConfig,
    spec: &IntensitySpec,
    out: &mut dyn Write,
) -> Result<CoverageSummary, CliError> {
    config.validate()?;
    spec.validate()?;
    let params = config.params()?;

    // The interval depends only on the running count; cache per count across
    // all replications.
    let mut cache: Vec<Option<Interval>> = Vec::new();
    let mut interval_for = |n: u64| -> Result<Interval, CliError> {
        let idx = n as usize;
        if idx >= cache.len() {
            cache.resize(idx + 1, None);
        }
        if cache[idx].is_none() {
            cache[idx] = Some(univariate_interval(n, params, config.alpha)?);
        }
        Ok(cache[idx].unwrap())
    };

    let mut miscovered = 0u64;
    for rep in 0..config.reps {
        let realization = spec.sample(config.horizon, config.stream_seed(rep))?;
        let ts = realization.timestamps();
        let mut violated = false;
        for window in 0..=ts.len() {
            let start = if window == 0 { 0.0 } else { ts[window - 1] };
            let end = if window == ts.len() {
                config.horizon
            } else {
                ts[window]
            };
            let interval = interval_for(window as u64)?;
            if spec.cumulative(start)? < interval.lower()
                || spec.cumulative(end)? > interval.upper()
            {
                violated = true;
                break;
            }
        }
        if violated {
            miscovered += 1;
        }
    }

    let fraction = miscovered as f64 / config.reps as f64;
    let summary = CoverageSummary {
        reps: config.reps,
        miscovered,
        fraction,
        se: (fraction * (1.0 - fraction) / config.reps as f64).sqrt(),
        alpha: config.alpha,
    };
    match config.format {
        OutputFormat::Ndjson => {
            serde_json::to_writer(&mut *out, &summary)
                .map_err(|err| CliError::Config(err.to_string()))?;
            out.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            writeln!(out, "reps,miscovered,fraction,se,alpha")?;
            writeln!(
                out,
                "{},{},{},{},{}",
                summary.reps, summary.miscovered, summary.fraction, summary.se, summary.alpha
            )?;
        }
    }
    Ok(summary)
}

/// Parse an intensity spec given inline as JSON or as a path to a JSON file.
pub fn load_spec(arg: &str) -> Result<IntensitySpec, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    let spec: IntensitySpec = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        line: 0,
        message: format!("invalid intensity spec: {e}"),
    })?;
    spec.validate()?;
    Ok(spec)
}
