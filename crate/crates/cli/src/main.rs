//! `hbloch`: band structures of honeycomb lattice potentials from the command line.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use honeycomb_bloch::Error;

use args::Cli;

/// Exit status for argument, configuration and file errors.
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Io(_) | Error::Json(_) => EXIT_USAGE,
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::SingularLattice { .. }
        | Error::InconsistentCoefficients { .. }
        | Error::NumericalFailure { .. }
        | Error::DegenerateMode(_) => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        // Prints help/version to stdout (status 0) or usage to stderr (status 2).
        Err(e) => e.exit(),
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hbloch: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
