//! Scenario runner behind the `strutlab` binary.

pub mod commands;
pub mod config;
pub mod output;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{
    run_equilibria, run_simulate, run_spectrum, run_sweep, run_validate, InvariantCheck,
    InvariantReport, RunSummary, SweepRow,
};
pub use config::{InitialCurvature, ScenarioConfig, SweepRange};

use crate::error::{ConfigError, DynamicsError};
use crate::exec::Exec;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("integration failed: {0}")]
    Integration(#[from] DynamicsError),
    #[error("inadmissible: {0}")]
    Inadmissible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("validation failed: {}", .0.join(", "))]
    Validation(Vec<&'static str>),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Integration(_) | CliError::Numerical(_) => 3,
            CliError::Inadmissible(_) => 4,
            CliError::Validation(_) => 5,
            CliError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate,
    Equilibria { alpha_range: Option<SweepRange> },
    Spectrum { alpha: Option<f64> },
    Sweep { gamma_range: Option<SweepRange> },
    Validate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    /// Overrides `[output] directory`.
    pub out: Option<PathBuf>,
    pub exec: Exec,
}

/// Runs one subcommand and returns the text to print on success.
pub fn run(inv: &Invocation) -> Result<String, CliError> {
    let config = ScenarioConfig::load(&inv.config)?;
    let out = inv
        .out
        .clone()
        .unwrap_or_else(|| config.output.directory.clone());
    match &inv.command {
        Command::Simulate => Ok(run_simulate(&config, &out)?.to_text()),
        Command::Equilibria { alpha_range } => {
            let range = alpha_range.unwrap_or(config.alpha_range);
            let curve = run_equilibria(&config, range, &out, inv.exec)?;
            let admissible = curve.points.iter().filter(|p| p.admissible).count();
            Ok(format!(
                "{} equilibria, {} admissible, {} boundary points\n",
                curve.points.len(),
                admissible,
                curve.boundaries.len()
            ))
        }
        Command::Spectrum { alpha } => {
            let alpha = alpha.unwrap_or(config.spectrum_alpha);
            if !alpha.is_finite() {
                return Err(CliError::Config(format!("alpha = {alpha} must be finite")));
            }
            let r = run_spectrum(&config, alpha, &out)?;
            Ok(format!(
                "largest eigenvalue {:.12e}, n_unstable {}, zero residual {:.3e}\n",
                r.largest(),
                r.n_unstable,
                r.zero_residual
            ))
        }
        Command::Sweep { gamma_range } => {
            let range = gamma_range.unwrap_or(config.gamma_range);
            let rows = run_sweep(&config, range, &out, inv.exec)?;
            let converged = rows.iter().filter(|r| r.summary.converged).count();
            Ok(format!("{} runs, {} converged\n", rows.len(), converged))
        }
        Command::Validate => {
            let report = run_validate(&config, &out)?;
            let text = report.to_text();
            if report.passed() {
                Ok(text)
            } else {
                eprint!("{text}");
                Err(CliError::Validation(report.failing()))
            }
        }
    }
}
