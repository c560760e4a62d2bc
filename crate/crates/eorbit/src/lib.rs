//! Front end for the elliptic-orbits library: validated run configurations,
//! trace generation for each experiment, verification suites and
//! deterministic CSV/JSON output.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::fmt;

use elliptic_orbits::Error;

pub use commands::{run, Artifacts};
pub use config::{CommandKind, Format, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, keys or parameter values (exit code 2).
    Validation(String),
    /// A computation failed or a verification check did not pass (exit code 3).
    Numerical(String),
    /// Files could not be written (exit code 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }

    /// Library error in the context of the construct being computed.
    pub fn from_lib(context: &str, e: Error) -> Self {
        let text = match &e {
            Error::DegenerateCubic(_) => format!("{context}: degenerate quartic: repeated factors ({e})"),
            _ => format!("{context}: {e}"),
        };
        match e {
            Error::InvalidParameter(_) | Error::RangeError(_) => CliError::Validation(text),
            _ => CliError::Numerical(text),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}
