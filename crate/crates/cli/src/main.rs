use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::{ExperimentConfig, Unit};
use error::CliError;

#[derive(Parser)]
#[command(name = "qdarwin", version, about = "Redundancy, decoherence and mixing in a qubit-plus-spin-environment model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutual-information profiles, redundancy and ranked eigenvalues over time.
    Simulate(RunArgs),
    /// The decoherence factor over the time grid.
    Decoherence(RunArgs),
    /// Long-time moments of the decoherence and mixing factors.
    Stats(RunArgs),
    /// Haar-random baseline profile and the critical fragment fraction.
    Baseline(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; omitted sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `model.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Entropy unit of the output (overrides `output.unit`).
    #[arg(long, value_enum)]
    unit: Option<Unit>,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.model.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output.dir = out.clone();
        }
        if let Some(unit) = self.unit {
            config.output.unit = unit;
        }
        if let Some(threads) = self.threads {
            if threads == 0 {
                return Err(CliError::Config("--threads must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (args, command): (&RunArgs, fn(&ExperimentConfig, &std::path::Path) -> Result<(), CliError>) =
        match &cli.command {
            Command::Simulate(a) => (a, commands::simulate),
            Command::Decoherence(a) => (a, commands::decoherence),
            Command::Stats(a) => (a, commands::stats),
            Command::Baseline(a) => (a, commands::baseline),
        };
    let config = args.resolve()?;
    command(&config, &config.output.dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
