//! `parapc`: constraint-based causal discovery from the command line.
//!
//! Subcommands: `skeleton` (edge list + sepsets + per-level stats), `cpdag`
//! (adds DOT orientation output), `ida` (ranked intervention effects),
//! `bench` (runtime/speedup table over worker counts), and `synth`
//! (synthetic SEM datasets). Every command writes a `manifest.json` that
//! pins the inputs, configuration, and seeds needed to reproduce its
//! outputs.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "parapc",
    version,
    about = "Constraint-based causal discovery toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn the undirected skeleton of a dataset
    Skeleton(SkeletonArgs),
    /// Learn the skeleton and orient it into a CPDAG
    Cpdag(SkeletonArgs),
    /// Full pipeline plus IDA causal-effect ranking
    Ida(IdaArgs),
    /// Synthetic benchmark over a list of worker counts
    Bench(BenchArgs),
    /// Generate a random linear-Gaussian SEM dataset
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Delimited numeric matrix, rows = samples, columns = variables
    input: PathBuf,
    /// Field delimiter (single character; "\t" or "tab" for TSV)
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// Treat the first row as data instead of column names
    #[arg(long)]
    no_header: bool,
}

#[derive(Args, Clone)]
struct LearnArgs {
    /// Significance level for the Fisher-z CI test
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Skeleton learner: original | stable | parallel
    #[arg(long, default_value = "parallel")]
    mode: String,
    /// Worker count (default: detected logical cores; PARAPC_WORKERS
    /// overrides the default)
    #[arg(long)]
    workers: Option<usize>,
    /// Bound coordinator memory by processing edges in batches
    #[arg(long)]
    mem_efficient: bool,
    /// Edges per batch when --mem-efficient is set: a number or "auto"
    #[arg(long, default_value = "auto")]
    batch_size: String,
    /// Memory budget in MiB backing --batch-size auto
    #[arg(long, default_value_t = 512)]
    mem_budget_mb: usize,
    /// Stop after conditioning sets of this size
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output directory (created if missing)
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SkeletonArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    learn: LearnArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct IdaArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    learn: LearnArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Newline-separated treatment variable names (default: all variables)
    #[arg(long)]
    treatments: Option<PathBuf>,
    /// Newline-separated target variable names (default: all variables)
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Standardize columns to zero mean and unit variance before the
    /// effect regressions
    #[arg(long)]
    zscore: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Number of variables in the synthetic model
    #[arg(long)]
    p: usize,
    /// Expected degree of the random DAG
    #[arg(long)]
    degree: f64,
    /// Samples per dataset
    #[arg(long)]
    n: usize,
    /// Number of datasets (seeds base..base+K-1)
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated worker counts to benchmark
    #[arg(long, default_value = "1,2,4,8")]
    workers_list: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bound coordinator memory by processing edges in batches
    #[arg(long)]
    mem_efficient: bool,
    /// Edges per batch when --mem-efficient is set: a number or "auto"
    #[arg(long, default_value = "auto")]
    batch_size: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of variables
    #[arg(long)]
    p: usize,
    /// Expected degree of the random DAG
    #[arg(long)]
    degree: f64,
    /// Samples to draw
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

/// Exit code 1 for argument/input validation problems, 2 for failures while
/// computing or writing results.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Skeleton(args) => commands::skeleton(args),
        Command::Cpdag(args) => commands::cpdag(args),
        Command::Ida(args) => commands::ida(args),
        Command::Bench(args) => commands::bench(args),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
