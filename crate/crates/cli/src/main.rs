//! `jc-probe`: simulate qubit tomography series for a qubit coupled to a
//! cavity and recover the Hamiltonian and cavity moments from them.

mod commands;
mod report;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jc_probe::{Error, ErrorClass};

use settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "jc-probe", version, about)]
struct Cli {
    /// TOML file with the same keys as the flags; its values override flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a tomography record
    Simulate(#[command(flatten)] Settings),
    /// Recover parameters from a record
    Estimate {
        /// Record file (CSV or JSON)
        record: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run the estimator over several step sizes and write a CSV table
    Sweep(#[command(flatten)] Settings),
    /// Compare finite-difference derivatives with the commutator oracle
    OracleCheck(#[command(flatten)] Settings),
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Parse => 2,
        ErrorClass::Precondition => 3,
        ErrorClass::Estimation => 4,
        ErrorClass::Io => 5,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let file = cli.config.as_deref().map(Settings::load).transpose()?;
    let merge = |flags: Settings| match &file {
        Some(f) => flags.overlaid_with(f.clone()),
        None => flags,
    };
    match cli.command {
        Command::Simulate(s) => commands::simulate(&merge(s)),
        Command::Estimate { record, mut settings } => {
            settings.input = record;
            commands::estimate(&merge(settings))
        }
        Command::Sweep(s) => commands::sweep(&merge(s)),
        Command::OracleCheck(s) => commands::oracle_check(&merge(s)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(exit_code(&e))
        }
    }
}
