use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod bench;
mod config;
mod failure;
mod metrics;
mod oracle;
mod output;
mod report;
mod trace;

use failure::Failure;

/// Geometric room-acoustics simulator.
#[derive(Debug, Parser)]
#[command(name = "sonotrace", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace a scene and write image-sources, impulse response and metrics.
    Trace(TraceArgs),
    /// Analytical image-sources of a rectangular room, optionally compared
    /// with a traced run.
    Oracle(OracleArgs),
    /// Time one tracing iteration with and without the tree.
    Bench(BenchArgs),
    /// Recompute room-acoustic parameters from band trains or a WAV file.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Run configuration (JSON).
    pub config: PathBuf,
    /// Number of rays.
    #[arg(long)]
    pub rays: Option<usize>,
    /// Receiver radius in meters.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Maximum unfolded distance in meters.
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    /// Output directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Disable air absorption.
    #[arg(long)]
    pub no_air: bool,
    /// Sequential tracing and fixed output order.
    #[arg(long)]
    pub deterministic: bool,
    /// Also write every receiver capture as JSON lines.
    #[arg(long)]
    pub export_captures: bool,
    /// Also write tree statistics.
    #[arg(long)]
    pub tree_stats: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Room configuration (JSON).
    pub config: PathBuf,
    /// Traced image_sources.json to compare against.
    #[arg(long)]
    pub traced: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Exponents k (M = N = 2^k), as a list `10,12,14` or a range `10-18`.
    #[arg(long, default_value = "10-18")]
    pub sizes: String,
    /// Largest k timed with brute force.
    #[arg(long, default_value_t = 14)]
    pub brute_max_k: u32,
    /// Time brute force on this many rays and scale to all rays.
    #[arg(long)]
    pub brute_sample: Option<usize>,
    /// Minimum time spent repeating each measurement, seconds.
    #[arg(long, default_value_t = 0.2)]
    pub min_time: f64,
    /// CSV output; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// JSON slope summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// band_trains.csv from a previous run.
    #[arg(long, conflicts_with = "wav", required_unless_present = "wav")]
    pub band_trains: Option<PathBuf>,
    /// Broadband impulse response.
    #[arg(long)]
    pub wav: Option<PathBuf>,
    /// Sample rate used to bin band trains.
    #[arg(long, default_value_t = sonotrace::rir::DEFAULT_SAMPLE_RATE)]
    pub sample_rate: u32,
    /// JSON output; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("SONOTRACE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().map_err(|_| {
        Failure::config(anyhow::anyhow!(
            "SONOTRACE_THREADS must be a positive integer, got `{value}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::runtime(e.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Trace(args) => trace::run(&args),
        Command::Oracle(args) => oracle::run(&args),
        Command::Bench(args) => bench::run(&args),
        Command::Metrics(args) => metrics::run(&args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.exit_code())
        }
    }
}
