use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use strutlab::cli::{self, Command, Invocation, SweepRange};
use strutlab::Exec;

#[derive(Parser)]
#[command(
    name = "strutlab",
    version,
    about = "Strut with evolving natural curvature: dynamics, equilibria and spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Scenario file (INI)
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overrides [output] directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run batches on one thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate the evolution law from the configured initial state
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the equilibrium branch over alpha = mu(0)
    Equilibria {
        #[command(flatten)]
        common: Common,
        /// a,b,n
        #[arg(long, allow_hyphen_values = true)]
        alpha_range: Option<SweepRange>,
    },
    /// Spectrum of the linearization at the equilibrium with mu(0) = alpha
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
    },
    /// Simulate over a range of loads in parallel
    Sweep {
        #[command(flatten)]
        common: Common,
        /// a,b,n
        #[arg(long, allow_hyphen_values = true)]
        gamma_range: Option<SweepRange>,
    },
    /// Run the invariant checks on the configured scenario
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let (command, common) = match Cli::parse().command {
        Sub::Simulate { common } => (Command::Simulate, common),
        Sub::Equilibria {
            common,
            alpha_range,
        } => (Command::Equilibria { alpha_range }, common),
        Sub::Spectrum { common, alpha } => (Command::Spectrum { alpha }, common),
        Sub::Sweep {
            common,
            gamma_range,
        } => (Command::Sweep { gamma_range }, common),
        Sub::Validate { common } => (Command::Validate, common),
    };
    let inv = Invocation {
        command,
        config: common.config,
        out: common.out,
        exec: if common.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        },
    };
    match cli::run(&inv) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("strutlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
