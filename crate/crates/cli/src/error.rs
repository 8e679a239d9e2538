use std::fmt;

use twochoice_core::Error;

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable input or unwritable output (exit 2).
    Usage(String),
    /// A validator or verification check failed (exit 1).
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation { .. }
            | Error::StructureViolation { .. }
            | Error::TraceRejected(_)
            | Error::DualInfeasible { .. }
            | Error::InfeasibleInput(_) => CliError::Failed(e.to_string()),
            Error::Parse { .. }
            | Error::InvalidInstance(_)
            | Error::OutOfRange(_)
            | Error::TooLarge(_)
            | Error::Randomness(_)
            | Error::Json(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
