//! `dyncal`: generate synthetic datasets, calibrate candidate models and
//! compare them by evidence.
//!
//! Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
//! configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Format;

#[derive(Parser, Debug)]
#[command(name = "dyncal", version, about = "Stochastic oscillator calibration and model selection")]
struct Cli {
    /// Seed for data generation and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Root for relative output directories.
    #[arg(long, global = true, env = "DYNCAL_OUTPUT_ROOT")]
    output_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a case and write its dataset.
    Generate(GenerateArgs),
    /// Calibrate one model on a dataset.
    Calibrate(CalibrateArgs),
    /// Calibrate several models and compare their evidence.
    Compare(CompareArgs),
    /// Re-render the comparison table and plot data of a compare run.
    Report(ReportArgs),
    /// Replay a run from its echoed config.json.
    Rerun(RerunArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Degradation scenario.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    case: u8,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truth integration step (s).
    #[arg(long)]
    sim_dt: Option<f64>,
    /// Sensor noise standard deviation (mm).
    #[arg(long)]
    noise_std: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct SamplerArgs {
    /// Samples per stage.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Proposal scale factor.
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    /// Target coefficient of variation of the weights.
    #[arg(long, default_value_t = 1.0)]
    target_cov: f64,
    #[arg(long, default_value_t = 100)]
    max_stages: usize,
    /// Metropolis-Hastings steps per sample per stage.
    #[arg(long, default_value_t = 1)]
    mh_steps: usize,
    /// Filter grid step (s).
    #[arg(long, default_value_t = dyncal_core::filtering::DEFAULT_GRID_DT)]
    grid_dt: f64,
    /// Also estimate the evidence by Chib-Jeliazkov with this many proposal draws.
    #[arg(long)]
    cj: Option<usize>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Model id (M1, M2, M3, M4a, M4b, M5, M6).
    #[arg(long)]
    model: String,
    /// Initial stiffness mean for M4a, M4b or M5.
    #[arg(long)]
    init_k: Option<f64>,
    /// Dataset directory written by `generate`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Generate this case's dataset.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), conflicts_with = "data", required_unless_present = "data")]
    case: Option<u8>,
    /// Use an existing dataset directory instead.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Every model, plus the erroneous-initial-stiffness variants.
    #[arg(long, conflicts_with = "models", required_unless_present = "models")]
    all: bool,
    /// Comma-separated variants, e.g. M1,M4a,M5@60.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    /// Erroneous initial stiffness used by --all.
    #[arg(long, default_value_t = 60.0)]
    erroneous_k: f64,
    /// Models to drop for a renormalized subset row; repeat for more rows.
    #[arg(long)]
    exclude: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Output directory of a compare run.
    #[arg(long)]
    run: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Constant added to log evidence and data fit for display.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    offset: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RerunArgs {
    /// A config.json, or the directory holding one.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
