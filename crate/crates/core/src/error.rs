use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("arrival {arrival}: {message}")]
    InvariantViolation { arrival: usize, message: String },

    #[error("arrival {arrival}: step does not fit the level structure: {message}")]
    StructureViolation { arrival: usize, message: String },

    #[error("infeasible program input: {0}")]
    InfeasibleInput(String),

    #[error("trace rejected: {0}")]
    TraceRejected(String),

    #[error("dual constraint violated on edge (node {node}, arrival {arrival})")]
    DualInfeasible { node: usize, arrival: usize },

    #[error("too large for exact tracking: {0}")]
    TooLarge(String),

    #[error("randomness source: {0}")]
    Randomness(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn violation(arrival: usize, message: impl Into<String>) -> Self {
        Error::InvariantViolation {
            arrival,
            message: message.into(),
        }
    }
}
