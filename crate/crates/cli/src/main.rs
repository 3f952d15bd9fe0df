//! `startrack` — mine GitHub star histories into snapshot datasets and turn
//! them into popularity reports.
//!
//! Subcommands walk the pipeline in order: `fetch` crawls repository
//! metadata and star events into a snapshot directory, `analyze` computes
//! tiers, rank trajectories, and growth-pattern labels into a report
//! bundle, `correlate` relates star counts to forks and npm dependents,
//! and `report` prints a human-readable digest of an existing bundle.
//!
//! Exit codes: 0 success, 1 partial failure (some repositories or packages
//! failed but artifacts were written), 2 hard failure.

mod commands;
mod http;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "startrack", version, about = "GitHub star-history analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Crawl repositories into a snapshot directory
    Fetch(FetchArgs),
    /// Compute tiers, trajectories, and growth labels for a snapshot
    Analyze(AnalyzeArgs),
    /// Correlate stars with forks and npm dependents
    Correlate(CorrelateArgs),
    /// Print a digest of an analyzed snapshot
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// File listing one owner/name per line (# comments allowed)
    #[arg(long, value_name = "FILE")]
    pub repos: PathBuf,

    /// Directory to write the snapshot into
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Snapshot directory produced by `fetch`
    #[arg(long, value_name = "DIR")]
    pub snapshot: PathBuf,

    /// Length of the trailing analysis window, in weeks
    #[arg(long, default_value_t = 52, value_name = "N")]
    pub weeks: usize,

    /// Fraction of the corpus counted popular (default 0.10)
    #[arg(long, value_name = "FRAC")]
    pub popular_frac: Option<f64>,

    /// Fraction counted very popular (default 0.001)
    #[arg(long, value_name = "FRAC")]
    pub very_popular_frac: Option<f64>,

    /// Max rank variation counted as flat (default 0.25)
    #[arg(long, value_name = "RANKS")]
    pub sustainable_band: Option<f64>,

    /// Min rank shift counted as fast/slow movement (default 1.0)
    #[arg(long, value_name = "RANKS")]
    pub shift_threshold: Option<f64>,

    /// Min fraction of non-reverting week transitions (default 0.90)
    #[arg(long, value_name = "FRAC")]
    pub monotone_frac: Option<f64>,

    /// Single-week star share that counts as viral (default 0.5)
    #[arg(long, value_name = "FRAC")]
    pub viral_frac: Option<f64>,

    /// Also emit gnuplot scripts next to the report CSVs
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Snapshot directory produced by `fetch`
    #[arg(long, value_name = "DIR")]
    pub snapshot: PathBuf,

    /// Repo-to-npm-package CSV, or `builtin` for the bundled list;
    /// fetches dependent counts and refreshes the usage cache
    #[arg(long, value_name = "CSV|builtin")]
    pub mapping: Option<String>,

    /// Also emit gnuplot scripts next to the report CSVs
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Snapshot directory previously analyzed
    #[arg(long, value_name = "DIR")]
    pub snapshot: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fetch(args) => commands::cmd_fetch(args),
        Command::Analyze(args) => commands::cmd_analyze(args),
        Command::Correlate(args) => commands::cmd_correlate(args),
        Command::Report(args) => commands::cmd_report(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}
