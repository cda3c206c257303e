//! Command-line runner for the `sparsehw` library: reads a TOML experiment
//! file, runs one pipeline and writes its artifacts together with the
//! resolved configuration.

pub mod commands;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};

pub use commands::{Artifact, Outcome};
pub use config::{ConfigError, ExperimentConfig, Overrides};

/// Name of the resolved configuration written next to every run.
pub const RESOLVED_CONFIG: &str = "resolved-config.toml";

#[derive(Debug, Parser)]
#[command(name = "sparsehw", version, about = "Sparse bilinear Hanson-Wright bounds and cross-covariance experiments")]
pub struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed; overrides SPARSEHW_SEED and the file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replicate count; overrides the file.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Output directory; overrides the file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads. Affects speed only, never results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Empirical tail of one entry's deviation against its bound.
    Tail,
    /// Fit the threshold constant and write it as a constants file.
    Calibrate,
    /// Family-wise error rate and power of the threshold rule.
    Fwer,
    /// Norms of the scenario's coefficient matrices.
    Norms,
    /// Moment generating function and Hoeffding checks.
    CheckMgf,
}

/// Runs a parsed command line. `Ok(true)` means every check passed.
pub fn run(cli: &Cli) -> anyhow::Result<bool> {
    let path = cli
        .config
        .as_deref()
        .context("--config <path> is required")?;
    let overrides = Overrides {
        seed: cli.seed,
        reps: cli.reps,
        out: cli.out.clone(),
    };
    let cfg = config::load(path, &overrides)?;
    let workers = cli.workers.unwrap_or(0);
    if cli.workers == Some(0) {
        anyhow::bail!("--workers must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building the worker pool")?;
    let outcome = pool.install(|| execute(&cfg, cli.command))?;
    write_artifacts(cfg.out_dir(), &cfg, &outcome)?;
    println!("{}", outcome.summary);
    Ok(outcome.passed)
}

/// Runs one command on a validated configuration, in the current pool.
pub fn execute(cfg: &ExperimentConfig, command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Tail => commands::tail(cfg),
        Command::Calibrate => commands::calibrate(cfg),
        Command::Fwer => commands::fwer(cfg),
        Command::Norms => commands::norms(cfg),
        Command::CheckMgf => commands::check_mgf(cfg),
    }
}

/// Writes the resolved configuration and every artifact into `dir`. If any
/// write fails, the files written so far are removed again.
pub fn write_artifacts(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = vec![(RESOLVED_CONFIG.to_string(), cfg.resolved_toml().into_bytes())];
    files.extend(outcome.artifacts.iter().map(|a| (a.name.clone(), a.contents.clone())));
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, contents) in files {
        let target = dir.join(&name);
        if let Err(e) = fs::write(&target, contents) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e).with_context(|| format!("writing {}", target.display()));
        }
        written.push(target);
    }
    Ok(())
}
