//! `dradapt`: structural complexity metrics and dataset-adaptive DR
//! optimization from the command line.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime error.
//! Structured output goes to stdout; logs go to stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "dradapt", version, about = "Structural complexity metrics and dataset-adaptive DR optimization")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Emit JSON (the default).
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit flat CSV tables instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Include wall-clock timings in structured output.
    #[arg(long, global = true)]
    pub timings: bool,
    /// JSON file whose keys mirror command-line flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// PDS and MNC feature vector of a dataset.
    Complexity(commands::ComplexityArgs),
    /// Score a projection against its source data.
    Evaluate(commands::EvaluateArgs),
    /// Project a dataset with one technique and fixed hyperparameters.
    Project(commands::ProjectArgs),
    /// Optimize one technique's hyperparameters.
    Optimize(commands::OptimizeArgs),
    /// Build a model store from a corpus.
    Pretrain(commands::PretrainArgs),
    /// Predict each technique's maximum achievable score.
    Predict(commands::PredictArgs),
    /// Adaptive workflow: optimize the top-ranked techniques with early stopping.
    AdaptiveRun(commands::AdaptiveArgs),
    /// Conventional workflow: full-budget optimization of every technique.
    ConventionalRun(commands::ConventionalArgs),
    /// Compare adaptive and conventional workflows over a corpus.
    Benchmark(commands::BenchmarkArgs),
    /// List available techniques and their hyperparameter spaces.
    Techniques(commands::TechniquesArgs),
    /// Write a synthetic dataset.
    Generate(commands::GenerateArgs),
    /// Write a synthetic corpus and its manifest.
    GenerateCorpus(commands::GenerateCorpusArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RUST_LOG")
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    let names: Vec<String> = Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let argv = match config::expand(std::env::args_os().collect(), &names) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.global.verbose);
    if let Some(n) = cli.global.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
