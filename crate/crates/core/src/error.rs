use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by evaluators, solvers and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the domain: {0}")]
    OutsideDomain(String),

    #[error("quadrature did not converge (last estimate {last:e}, previous {previous:e})")]
    NoConvergence { last: f64, previous: f64 },

    #[error("iteration did not converge: {0}")]
    IterationLimit(String),

    #[error("expected a positive quantity, got {0:e}")]
    NonPositive(f64),

    #[error("geometry is degenerate: {0}")]
    Degenerate(String),

    #[error("empty table")]
    EmptyTable,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConvergence { .. } | Error::IterationLimit(_) => 3,
            Error::Io { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
