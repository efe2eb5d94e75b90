//! `eddikit` — batch identification of nonlinear oscillator equations of
//! motion from free-response records.

mod commands;
mod config;
mod csvio;
mod errors;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Method;
use crate::errors::{CliError, Result};

#[derive(Parser)]
#[command(name = "eddikit", version, about = "Energy-based identification of nonlinear equations of motion")]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured model and write a trajectory CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Identify damping and stiffness from a trajectory or acceleration CSV.
    Identify {
        #[arg(long)]
        config: PathBuf,
        /// Trajectory CSV (`t,x,v,a,f_ext`) or acceleration CSV (`t,a`).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the method in the config.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Re-simulate an identified model at validation ICs and score it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Identification report JSON.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fourier spectrum and Morlet scalogram of a record.
    Spectra {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an identification report as text.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Also write `report.txt` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Caps the rayon pool when `EDDIKIT_THREADS` is set.
fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("EDDIKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("EDDIKIT_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("thread pool init failed: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::Simulate { config, out } => commands::cmd_simulate(config, out, cli.quiet),
        Command::Identify { config, input, out, method } => {
            commands::cmd_identify(config, input, out, *method, cli.quiet)
        }
        Command::Validate { config, input, out } => {
            commands::cmd_validate(config, input, out, cli.quiet)
        }
        Command::Spectra { input, out } => commands::cmd_spectra(input, out, cli.quiet),
        Command::Report { input, out } => commands::cmd_report(input, out.as_deref(), cli.quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
