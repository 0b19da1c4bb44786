//! `rml-sampler`: command-line runner for HD-BO-RML experiments.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for failures
//! during a run.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Experiment;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "rml-sampler", version, about = "Posterior sampling by randomized maximum likelihood with high-dimensional Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one problem; writes trace.jsonl, instances.json and report.json.
    Run(CommonArgs),
    /// Budget curves for several methods over seeded trials; writes curves.csv, summary.csv and report.json.
    Compare(CommonArgs),
    /// Active-subspace projections of prior draws and RML samples.
    ExportLandscape(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides one configuration key; dotted keys reach into objects and `null` removes a key. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RML_SAMPLER_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("RML_SAMPLER_THREADS: expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

type Action = fn(&Experiment, &std::path::Path) -> Result<(), CliError>;

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (args, action): (&CommonArgs, Action) = match &cli.command {
        Command::Run(a) => (a, commands::run),
        Command::Compare(a) => (a, commands::compare),
        Command::ExportLandscape(a) => (a, commands::export_landscape),
    };
    let experiment = Experiment::load(&args.config, args.seed, &args.set)?;
    action(&experiment, &args.out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
