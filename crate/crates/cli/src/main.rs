//! `pillar-gp`: synthesize data, train expert collections, fuse their
//! predictions along a fusion tree and evaluate.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! runtime failures.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Loaded;
use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "pillar-gp", version, about = "Distributed GP classification with product-of-experts fusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// JSON fusion tree (overrides the config's `fusion_tree`).
    #[arg(long, global = true)]
    tree: Option<PathBuf>,

    /// Output directory (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Maximum number of worker threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,

    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic feature streams and labels.
    Synth,
    /// Fit hyperparameters and train the experts of every stream.
    Train,
    /// Predict, fuse along the tree and write the report.
    Predict,
    /// Score predictions against labels.
    Evaluate {
        /// Label CSV, or a posterior CSV as written by `predict`.
        #[arg(long)]
        predictions: PathBuf,
        /// True label CSV.
        #[arg(long)]
        labels: PathBuf,
    },
}

fn load(cli: &Cli) -> CliResult<Loaded> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
    Loaded::read(path, cli.seed)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(usize::from(jobs))
            .build_global()
            .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Synth => {
            commands::synth::run(&load(&cli)?)?;
        }
        Command::Train => {
            let cfg = load(&cli)?;
            commands::train::run(&cfg, &cfg.output_dir(cli.out.as_deref()))?;
        }
        Command::Predict => {
            let cfg = load(&cli)?;
            commands::predict::run(&cfg, &cfg.output_dir(cli.out.as_deref()), cli.tree.as_deref())?;
        }
        Command::Evaluate { predictions, labels } => {
            let cfg = cli.config.as_ref().map(|_| load(&cli)).transpose()?;
            let num_classes = cfg.as_ref().and_then(|c| c.config.num_classes);
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            commands::evaluate::run(predictions, labels, num_classes, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
