//! Batch front end: TOML run configs, subcommands, CSV/JSON/SVG output.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};

pub use commands::Context;
pub use config::RunConfig;
pub use output::{Check, FailureRecord, RunSummary, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "nelson-ibc", version, about = "IBC Hamiltonian experiments")]
pub struct Cli {
    /// TOML run configuration; missing blocks take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for the eigensolver start vectors and sampled checks.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Admissible-pair curves, CSV and SVG.
    Region,
    /// Tabulate I_mu and E_Lambda.
    Integral,
    /// Lowest eigenvalues of the IBC or cutoff Hamiltonian.
    Spectrum,
    /// Renormalised cutoff energies against the IBC ground energy.
    Convergence,
    /// Norm of G_mu over a mu sweep.
    Gnorm,
    /// Growth exponents of ||L^kappa G phi|| and ||Omega^eta G phi||.
    Threshold,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Region => "region",
            Command::Integral => "integral",
            Command::Spectrum => "spectrum",
            Command::Convergence => "convergence",
            Command::Gnorm => "gnorm",
            Command::Threshold => "threshold",
        }
    }
}

/// Runs one subcommand and writes its CSV files and `<command>.json`.
pub fn run(command: Command, cfg: &RunConfig, out_dir: &Path, seed: u64) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let ctx = Context {
        out_dir: out_dir.to_path_buf(),
        seed,
    };
    let summary = match command {
        Command::Region => commands::region(cfg, &ctx),
        Command::Integral => commands::integral(cfg, &ctx),
        Command::Spectrum => commands::spectrum(cfg, &ctx),
        Command::Convergence => commands::convergence(cfg, &ctx),
        Command::Gnorm => commands::gnorm(cfg, &ctx),
        Command::Threshold => commands::threshold(cfg, &ctx),
    }?;
    commands::write_summary(&summary, out_dir)?;
    Ok(summary)
}

/// Machine-readable record of a failed run, written to `failure.json`.
pub fn write_failure(
    out_dir: &Path,
    command: Command,
    error: Option<&anyhow::Error>,
    checks: &[Check],
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let record = FailureRecord {
        schema_version: SCHEMA_VERSION,
        command: command.name().into(),
        error: error.map(|e| format!("{e:#}")),
        failed_checks: checks.iter().filter(|c| !c.passed).cloned().collect(),
    };
    let path = out_dir.join("failure.json");
    output::write_json(&path, &record)?;
    Ok(path)
}
