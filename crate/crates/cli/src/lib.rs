//! Batch front end: catalog inspection, classification, solving,
//! verification and parameter sweeps.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

use henon_core::Error;

/// Error with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_REFUSED: i32 = 4;

impl Failure {
    pub fn config(m: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: m.into() }
    }

    pub fn numerical(m: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: m.into() }
    }

    pub fn refused(m: impl Into<String>) -> Self {
        Self { code: EXIT_REFUSED, message: m.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InvalidInput(_)
            | Error::NotAdmissible(_)
            | Error::IndexEstimation(_)
            | Error::NotStrictlyIncreasing { .. }
            | Error::HypothesisViolated(_) => Failure::config(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}
