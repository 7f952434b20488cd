//! Command-line front end: parses arguments, loads the experiment config,
//! runs one command inside a sized thread pool and writes its outputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{CommandOutput, RunOptions};
pub use config::ExperimentConfig;
pub use error::CliError;
pub use output::Artifact;

#[derive(Debug, Parser)]
#[command(name = "desklab", version, about = "Decentralized Adam experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Gossip-only consensus error per round.
    Consensus,
    /// Runtime sweep over communication cost, slowdown and noise.
    Runtime,
    /// Decentralized training run.
    Train,
    /// Evaluate or check the convergence bound.
    Bound,
    /// Per-task schedules of the runtime simulators.
    Timeline,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Consensus => "consensus",
            Command::Runtime => "runtime",
            Command::Train => "train",
            Command::Bound => "bound",
            Command::Timeline => "timeline",
        }
    }
}

/// Runs `command` and returns its artifacts with the manifest appended.
/// A failure recorded by the command is returned alongside.
pub fn execute(
    command: Command,
    cfg: &ExperimentConfig,
    opts: RunOptions,
) -> Result<(Vec<Artifact>, Option<CliError>), CliError> {
    if opts.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} threads: {e}", opts.jobs)))?;
    let result = pool.install(|| match command {
        Command::Consensus => commands::cmd_consensus(cfg, opts),
        Command::Runtime => commands::cmd_runtime(cfg, opts),
        Command::Train => commands::cmd_train(cfg, opts),
        Command::Bound => commands::cmd_bound(cfg, opts),
        Command::Timeline => commands::cmd_timeline(cfg, opts),
    })?;
    let mut entries = vec![
        ("command".to_string(), command.as_str().to_string()),
        ("seed".to_string(), opts.seed.to_string()),
    ];
    entries.extend(
        cfg.flattened()
            .into_iter()
            .filter(|(k, _)| k != "seed" && k != "out"),
    );
    entries.extend(result.summary);
    let mut artifacts = result.artifacts;
    artifacts.push(output::manifest(&entries));
    Ok((artifacts, result.failure))
}

/// Full CLI flow; returns the written paths.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let opts = RunOptions {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        jobs: cli.jobs,
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let (artifacts, failure) = execute(cli.command, &cfg, opts)?;
    let written = output::write_all(&out, &artifacts)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(written),
    }
}
