//! `vague-measures`: distances, convergence diagnostics, simulation, Laplace
//! tests and the self-test suite, driven by JSON configs.
//!
//! Exit codes: 0 pass, 1 fail, 2 config or schema error, 3 size cap,
//! 4 space mismatch, 5 inconclusive.

mod commands;
mod config;
mod formula;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vague_core::convergence::Tri;
use vague_core::Error;

use commands::{Outcome, RunOptions};

/// Invalid configuration, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SIZE_CAP: u8 = 3;
pub const EXIT_SPACE_MISMATCH: u8 = 4;
pub const EXIT_INCONCLUSIVE: u8 = 5;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "VAGUE_MEASURES_THREADS";

#[derive(Parser)]
#[command(name = "vague-measures", version, about = "Vague convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Print progress details to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct WithConfig {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Distances between two measure files.
    Dist(WithConfig),
    /// Convergence diagnostics for a measure sequence.
    Converge(WithConfig),
    /// Sample a random measure model.
    Simulate(WithConfig),
    /// Laplace-functional test of convergence in distribution.
    Laplace(WithConfig),
    /// Run the acceptance suite.
    Selftest {
        #[command(flatten)]
        common: Common,
        /// Shrink the bump function to check that the suite catches it.
        #[arg(long)]
        corrupt_bump: bool,
    },
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::SizeCap { .. } => EXIT_SIZE_CAP,
            Error::SpaceMismatch { .. } => EXIT_SPACE_MISMATCH,
            _ => EXIT_CONFIG,
        };
    }
    EXIT_CONFIG
}

fn verdict_code(v: Option<Tri>) -> u8 {
    match v {
        None | Some(Tri::Pass) => EXIT_PASS,
        Some(Tri::Fail) => EXIT_FAIL,
        Some(Tri::Inconclusive) => EXIT_INCONCLUSIVE,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn write_outputs(dir: &PathBuf, outcome: &Outcome) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in &outcome.files {
        std::fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<(Outcome, PathBuf)> {
    configure_threads()?;
    let opts = |c: &Common| RunOptions {
        seed: c.seed,
        verbose: c.verbose,
    };
    Ok(match cli.command {
        Command::Dist(a) => (commands::dist(&a.config, &opts(&a.common))?, a.common.out),
        Command::Converge(a) => (commands::converge(&a.config, &opts(&a.common))?, a.common.out),
        Command::Simulate(a) => (commands::simulate(&a.config, &opts(&a.common))?, a.common.out),
        Command::Laplace(a) => (commands::laplace(&a.config, &opts(&a.common))?, a.common.out),
        Command::Selftest { common, corrupt_bump } => (commands::selftest(corrupt_bump, &opts(&common))?, common.out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(outcome, out)| {
        write_outputs(&out, &outcome)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            ExitCode::from(verdict_code(outcome.verdict))
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
