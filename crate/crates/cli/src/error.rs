//! Error taxonomy mapped to process exit codes.
//!
//! 0 success, 1 I/O failure, 2 malformed configuration, 3 infeasible
//! parameters, 4 internal assertion.

use cvcert_core::protocols::ProtocolError;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Structurally invalid configuration (bad JSON, unknown keys, missing
    /// fields, bad axis names). Exit code 2.
    Config(String),
    /// Well-formed configuration with parameter values outside the model's
    /// domain. Exit code 3.
    Infeasible(String),
    /// Filesystem trouble. Exit code 1.
    Io(std::io::Error),
    /// Violated internal invariant. Exit code 4.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Infeasible(msg) => write!(f, "infeasible parameters: {msg}"),
            CliError::Io(err) => write!(f, "i/o error: {err}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

impl From<ProtocolError> for CliError {
    fn from(err: ProtocolError) -> Self {
        CliError::Infeasible(err.to_string())
    }
}

impl From<cvcert_core::bounds::BoundsError> for CliError {
    fn from(err: cvcert_core::bounds::BoundsError) -> Self {
        CliError::Infeasible(err.to_string())
    }
}

impl From<cvcert_core::gaussian::GaussianError> for CliError {
    fn from(err: cvcert_core::gaussian::GaussianError) -> Self {
        CliError::Infeasible(err.to_string())
    }
}
