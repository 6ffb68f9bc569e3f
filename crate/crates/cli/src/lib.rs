//! Command-line front end for `losscal-core`.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod svg;

use std::io::Write;

pub use args::{Cli, Command};
pub use error::CliError;

/// Runs a parsed command, returning the process exit code on success.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Correct(a) => commands::cmd_correct(a, stdout, stderr),
        Command::Curve(a) => commands::cmd_curve(a, stdout, stderr),
        Command::Diagnose(a) => commands::cmd_diagnose(a, stdout, stderr),
        Command::Simulate(a) => commands::cmd_simulate(a, stdout, stderr),
        Command::Compare(a) => commands::cmd_compare(a, stdout, stderr),
    }
}
