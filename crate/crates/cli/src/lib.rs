//! Command-line front end. Every subcommand is also callable as a function
//! so the acceptance suite can drive it without spawning processes.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

pub use args::Cli;
pub use commands::{cmd_bounds, cmd_predict, cmd_simulate, cmd_verify, SimulateOutcome};
pub use output::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
/// Unreadable, malformed or invalid input, or a refused overwrite.
pub const EXIT_INVALID: i32 = 2;
/// The run recorded at least one collision.
pub const EXIT_COLLISION: i32 = 3;
/// Strict mode and the solver found no safe velocity at some tick.
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
    Core(npvo_core::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<npvo_core::Error> for CliError {
    fn from(e: npvo_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use npvo_core::Error as E;
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) => EXIT_FAILURE,
            CliError::Core(
                E::InvalidArgument(_)
                | E::Shape(_)
                | E::Format(_)
                | E::InsufficientHistory { .. }
                | E::InsufficientSamples { .. },
            ) => EXIT_INVALID,
            CliError::Core(_) => EXIT_FAILURE,
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand, returning
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let result = match &cli.command {
        args::Command::Simulate(a) => cmd_simulate(a).map(|o| o.exit_code),
        args::Command::Verify(a) => cmd_verify(a).map(|_| EXIT_OK),
        args::Command::Bounds(a) => cmd_bounds(a).map(|_| EXIT_OK),
        args::Command::Predict(a) => cmd_predict(a).map(|_| EXIT_OK),
        args::Command::Scenarios => {
            for (name, _) in config::BUNDLED {
                println!("{name}");
            }
            Ok(EXIT_OK)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}
