//! `hydroindex` — standardized hydro-climatic indices from precipitation
//! CSV files.
//!
//! Subcommands: `fit` (seasonal model to JSON), `index` (SPI / MBSI-1 /
//! MBSI-2 series), `events` (flood/drought detection), `diagnose`
//! (model checking, optional SVG plots).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
//! failure. Errors print as one machine-parseable line on stderr:
//! `error[usage|data|numeric]: message`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hydroindex::ErrorCategory;

mod commands;
mod plot;

#[derive(Parser)]
#[command(name = "hydroindex", version, about = "Standardized hydro-climatic indices (SPI, MBSI-1, MBSI-2)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the seasonal zero-augmented gamma model and save it as JSON
    Fit(FitArgs),
    /// Compute a standardized index series from a precipitation CSV
    Index(IndexArgs),
    /// Detect flood and drought events in an index CSV
    Events(EventsArgs),
    /// Model-checking diagnostics (and plots) for an index CSV
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input precipitation CSV (`date,precip`)
    #[arg(short, long)]
    input: PathBuf,
    /// Output model JSON path
    #[arg(short, long)]
    output: PathBuf,
    /// Moving-average scale the model is fitted on
    #[arg(long, default_value_t = 1)]
    scale: usize,
    /// Basis dimensions for the pi, mu, sigma curves, e.g. `10,10,10`
    #[arg(long, default_value = "10,10,10")]
    dims: String,
    /// Smoothing selection: `edf:<target>`, `aic`, or fixed `l1,l2,l3`
    #[arg(long, default_value = "edf:4")]
    lambda: String,
    /// Fit without zero augmentation (rejects data containing zeros)
    #[arg(long)]
    pi_zero: bool,
}

#[derive(Args)]
struct IndexArgs {
    /// Input precipitation CSV (`date,precip`)
    #[arg(short, long)]
    input: PathBuf,
    /// Output directory for index.csv and meta.json
    #[arg(short, long)]
    output: PathBuf,
    /// Index method: spi, mbsi1 or mbsi2
    #[arg(long)]
    method: String,
    /// Moving-average time-scale k (in series steps)
    #[arg(long)]
    scale: usize,
    /// Seasonal bins (SPI only; 12 for monthly, 52 for weekly data)
    #[arg(long)]
    bins: Option<usize>,
    /// Basis dimensions (MBSI only), e.g. `10,10,10`
    #[arg(long)]
    dims: Option<String>,
    /// Smoothing selection (MBSI only): `edf:<target>`, `aic` or `l1,l2,l3`
    #[arg(long)]
    lambda: Option<String>,
    /// Monte Carlo replicates (MBSI-2 only)
    #[arg(long)]
    m: Option<usize>,
    /// Monte Carlo seed (MBSI-2 only; env HYDROINDEX_SEED, flag wins)
    #[arg(long)]
    seed: Option<u64>,
    /// Reuse a fitted model JSON instead of refitting (MBSI only)
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct EventsArgs {
    /// Input index CSV (from `hydroindex index`)
    #[arg(short, long)]
    input: PathBuf,
    /// Output events CSV path
    #[arg(short, long)]
    output: PathBuf,
    /// Detection threshold on |z| (must be positive)
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Input index CSV (from `hydroindex index`)
    #[arg(short, long)]
    input: PathBuf,
    /// Output directory
    #[arg(short, long)]
    output: PathBuf,
    /// Significance level for the KS uniformity check
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// PIT histogram bins
    #[arg(long, default_value_t = 20)]
    hist_bins: usize,
    /// Also emit timeline, PIT, QQ and event SVG plots
    #[arg(long)]
    plot: bool,
    /// Event threshold used for the event-shaded plot
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
}

/// CLI-level error: usage problems plus library errors with their
/// category-driven exit codes.
enum CliError {
    Usage(String),
    Core(hydroindex::Error),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Data => 2,
                ErrorCategory::Numeric => 3,
            },
        }
    }

    fn render_line(&self) -> String {
        let (tag, msg) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Core(e) => (
                match e.category() {
                    ErrorCategory::Data => "data",
                    ErrorCategory::Numeric => "numeric",
                },
                e.to_string(),
            ),
        };
        format!("error[{tag}]: {}", msg.replace('\n', " "))
    }
}

impl From<hydroindex::Error> for CliError {
    fn from(e: hydroindex::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e
                .to_string()
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim()
                .to_string();
            eprintln!("error[usage]: {first}");
            return ExitCode::from(1);
        }
    };

    let result = match cli.command {
        Command::Fit(args) => commands::cmd_fit(&args),
        Command::Index(args) => commands::cmd_index(&args),
        Command::Events(args) => commands::cmd_events(&args),
        Command::Diagnose(args) => commands::cmd_diagnose(&args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.render_line());
            ExitCode::from(e.exit_code())
        }
    }
}
