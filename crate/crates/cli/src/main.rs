//! `fkqc`: Frenkel-Kontorova equilibria and minimal configurations on the
//! Fibonacci chain.

mod equilibrium;
mod failure;
mod manifest;
mod minimal;
mod output;
mod replay;
mod verify;
mod word;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "fkqc",
    version,
    about = "Frenkel-Kontorova model on the Fibonacci quasicrystal"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a finite Fibonacci word or a window of the two-sided word.
    Word(word::WordArgs),
    /// Solve for the equilibrium near an anchor in the anti-integrable regime.
    Equilibrium(equilibrium::EquilibriumArgs),
    /// Build a level-l minimal configuration on the branched manifold.
    Minimal(minimal::MinimalArgs),
    /// Run the invariant suites.
    Verify(verify::VerifyArgs),
    /// Re-run a recorded manifest and compare outputs byte for byte.
    Replay(replay::ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Output directory shared by the commands that write files.
#[derive(Clone, Debug, clap::Args)]
pub struct OutArgs {
    /// Directory for data files and `manifest.json`; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parameter sweeps.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

fn run(argv: Vec<OsString>) -> Result<(), Failure> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(()),
                _ => Err(Failure::Reported(failure::VALIDATION)),
            };
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match cli.command {
        Command::Word(args) => word::run(&args),
        Command::Equilibrium(args) => equilibrium::run(&args, &recorded),
        Command::Minimal(args) => minimal::run(&args, &recorded),
        Command::Verify(args) => verify::run(&args),
        Command::Replay(args) => replay::run(&args),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(msg) = f.message() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(f.code())
        }
    }
}
