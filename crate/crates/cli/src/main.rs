//! Batch driver for the bulk-energy experiments.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage or configuration
//! error, 3 numerical non-convergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glbulk::GlError;

use crate::commands::Sink;
use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    PropertyFailure = 1,
    Usage = 2,
    NonConvergence = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Core(#[from] GlError),
}

impl CliError {
    fn status(&self) -> Status {
        match self {
            CliError::Core(GlError::NonConvergence { .. }) => Status::NonConvergence,
            _ => Status::Usage,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "glbulk",
    version,
    about = "Ginzburg-Landau bulk-energy experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; overrides the section's `out`, stdout when neither is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Tabulate the limiting bulk energy g(b).
    GTable,
    /// Minimize the full functional and append one result row.
    Minimize,
    /// Compare minimizers with bulk predictions over a kappa sweep.
    Verify,
    /// Error of the local quadratic gauge phase over cell sizes.
    PhaseCheck,
    /// Convergence order of the reference potential.
    PoissonCheck,
}

fn section<T: Clone>(s: &Option<T>, name: &str) -> Result<T, CliError> {
    s.clone()
        .ok_or_else(|| CliError::Usage(format!("config has no [{name}] section")))
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let pick = |own: &Option<PathBuf>| cli.out.clone().or_else(|| own.clone());
    match cli.command {
        Command::GTable => {
            let s = cfg.g_table.clone().unwrap_or_default();
            let out = pick(&s.out);
            commands::g_table(
                &s,
                seed,
                &Sink {
                    out: out.as_deref(),
                },
            )
        }
        Command::Minimize => {
            let s = section(&cfg.minimize, "minimize")?;
            let out = pick(&s.out);
            commands::minimize(
                &s,
                seed,
                &Sink {
                    out: out.as_deref(),
                },
            )
        }
        Command::Verify => {
            let s = section(&cfg.verify, "verify")?;
            let out = pick(&s.out);
            commands::verify(
                &s,
                seed,
                &Sink {
                    out: out.as_deref(),
                },
            )
        }
        Command::PhaseCheck => {
            let s = section(&cfg.phase_check, "phase_check")?;
            let out = pick(&s.out);
            commands::phase_check(
                &s,
                seed,
                &Sink {
                    out: out.as_deref(),
                },
            )
        }
        Command::PoissonCheck => {
            let s = cfg.poisson_check.clone().unwrap_or_default();
            let out = pick(&s.out);
            commands::poisson_check(
                &s,
                seed,
                &Sink {
                    out: out.as_deref(),
                },
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = run(&cli).unwrap_or_else(|e| {
        eprintln!("glbulk: {e}");
        e.status()
    });
    if status == Status::PropertyFailure {
        eprintln!("glbulk: property check failed");
    }
    ExitCode::from(status as u8)
}
