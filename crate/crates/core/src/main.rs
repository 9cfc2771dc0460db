//! The `ratewatch` binary: simulate, monitor, compare, coverage.
//!
//! Exit codes: 0 = completed (monitor: not rejected), 2 = monitor rejected by
//! end of input, 1 = error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ratewatch::cli::{
    cmd_compare, cmd_coverage, cmd_monitor, cmd_simulate, load_spec, CliError, MonitorOutcome,
    OutputFormat, RunConfig,
};
use ratewatch::stats::RatePair;
use std::io::{BufRead, BufWriter, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "ratewatch",
    version,
    about = "Anytime-valid monitoring of Poisson arrival streams",
    long_about = "Simulates, monitors and verifies one- and two-arm Poisson arrival streams.\n\
                  All rates are per abstract unit of time. Streams are newline-delimited\n\
                  JSON by default; pass --format csv for comma-separated rows."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Ndjson,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ndjson => OutputFormat::Ndjson,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Mixture precision φ of the test statistic.
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
    /// Time-uniform error level α.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Base seed; substreams are derived per replication and arm.
    #[arg(long, env = "RATEWATCH_SEED", default_value_t = 0)]
    seed: u64,
    /// Emit an extra report row every this many time units.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Stream format for input and output.
    #[arg(long, value_enum, default_value_t = FormatArg::Ndjson)]
    format: FormatArg,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw two arms from intensity specs and emit one merged event stream.
    Simulate {
        /// Arm-A intensity: inline JSON like {"kind":"constant","rate":2.0},
        /// or a path to a JSON file.
        #[arg(long)]
        spec_a: String,
        /// Arm-B intensity (same forms as --spec-a).
        #[arg(long)]
        spec_b: String,
        /// Observation window length.
        #[arg(long)]
        horizon: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Replay an event stream and emit anytime-valid report rows.
    ///
    /// Exits 2 if the equality e-process ever reached 1/α, else 0.
    Monitor {
        /// Event stream path, or "-" for stdin.
        #[arg(default_value = "-")]
        input: String,
        /// Report through this time even if events stop earlier.
        #[arg(long, default_value_t = 0.0)]
        horizon: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Growth trajectories of the three equality e-processes on constant arms.
    Compare {
        /// Arm-A average rate.
        #[arg(long)]
        rate_a: f64,
        /// Arm-B average rate.
        #[arg(long)]
        rate_b: f64,
        #[arg(long)]
        horizon: f64,
        /// Number of simulated paths.
        #[arg(long, default_value_t = 20)]
        reps: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo miscoverage of the single-arm confidence process.
    Coverage {
        /// Intensity spec (inline JSON or a file path).
        #[arg(long)]
        spec: String,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn build_config(common: &CommonArgs, horizon: f64, reps: u64) -> RunConfig {
    RunConfig {
        phi: common.phi,
        alpha: common.alpha,
        seed: common.seed,
        horizon,
        reps,
        grid_step: common.grid_step,
        format: common.format.into(),
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn open_input(path: &str) -> Result<Box<dyn BufRead>, CliError> {
    Ok(if path == "-" {
        Box::new(std::io::BufReader::new(std::io::stdin().lock()))
    } else {
        Box::new(std::io::BufReader::new(std::fs::File::open(path)?))
    })
}

fn run() -> Result<i32, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            spec_a,
            spec_b,
            horizon,
            common,
        } => {
            let config = build_config(&common, horizon, 1);
            let spec_a = load_spec(&spec_a)?;
            let spec_b = load_spec(&spec_b)?;
            let mut out = open_output(&common.out)?;
            cmd_simulate(&config, &spec_a, &spec_b, &mut out)?;
            out.flush()?;
            Ok(0)
        }
        Command::Monitor {
            input,
            horizon,
            common,
        } => {
            let config = build_config(&common, horizon, 1);
            let mut reader = open_input(&input)?;
            let mut out = open_output(&common.out)?;
            let outcome = cmd_monitor(&config, &mut reader, &mut out)?;
            out.flush()?;
            Ok(match outcome {
                MonitorOutcome::Rejected => 2,
                MonitorOutcome::NotRejected => 0,
            })
        }
        Command::Compare {
            rate_a,
            rate_b,
            horizon,
            reps,
            common,
        } => {
            let config = build_config(&common, horizon, reps);
            let rates = RatePair::new(rate_a, rate_b)?;
            let mut out = open_output(&common.out)?;
            cmd_compare(&config, rates, &mut out)?;
            out.flush()?;
            Ok(0)
        }
        Command::Coverage {
            spec,
            horizon,
            reps,
            common,
        } => {
            let config = build_config(&common, horizon, reps);
            let spec = load_spec(&spec)?;
            let mut out = open_output(&common.out)?;
            cmd_coverage(&config, &spec, &mut out)?;
            out.flush()?;
            Ok(0)
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("ratewatch: {err}");
            std::process::exit(1);
        }
    }
}
