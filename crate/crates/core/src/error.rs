use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid network: {0}")]
    Invalid(ValidationReport),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },

    #[error("assignment is missing a value for `{0}`")]
    IncompleteAssignment(String),

    #[error("{what} needs {required} table entries, cap is {cap}")]
    CapExceeded { what: &'static str, required: u128, cap: usize },

    #[error("invalid elimination order: {0}")]
    InvalidOrder(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("proposal does not dominate P(h, e): {0}")]
    DominationFailure(String),

    #[error("zero importance ratio in batch")]
    ZeroRatio,

    #[error("non-positive input to power mean")]
    NonPositive,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapExceeded { .. } => 3,
            Error::DominationFailure(_) | Error::ZeroRatio => 4,
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}
