use std::fmt;

/// Errors raised by estimation, interval construction and simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("degrees of freedom: {0}")]
    DegreesOfFreedom(String),

    /// REML iteration ran out of budget. `last` is the final iterate so the
    /// caller can decide whether to fall back to another estimator.
    #[error("REML did not converge after {iterations} iterations (last iterate {last})")]
    NonConvergence { iterations: usize, last: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(
        "scenario {scenario}: {method} failed in {failures} of {attempted} replicates ({reasons})"
    )]
    FailureThreshold {
        scenario: String,
        method: String,
        failures: usize,
        attempted: usize,
        reasons: String,
    },

    #[error("input error at row {row}: {message}")]
    Input { row: usize, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(msg: impl fmt::Display) -> Self {
        Error::Parameter(msg.to_string())
    }

    pub(crate) fn dataset(msg: impl fmt::Display) -> Self {
        Error::Dataset(msg.to_string())
    }

    pub(crate) fn numeric(msg: impl fmt::Display) -> Self {
        Error::Numeric(msg.to_string())
    }

    pub(crate) fn io(context: impl fmt::Display, source: std::io::Error) -> Self {
        Error::Io {
            context: context.to_string(),
            source,
        }
    }
}
