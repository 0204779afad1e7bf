//! Error type shared across the crate.

use chrono::NaiveDate;
use thiserror::Error;

/// Errors produced by model construction, integration, filtering, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Compartment values violate nonnegativity or conservation.
    #[error("invalid compartments: {0}")]
    InvalidCompartments(String),

    /// A medical parameter is outside its admissible range.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A log-transformed state cannot be decoded into a valid population split.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A formula was evaluated outside its domain (zero denominator etc).
    #[error("domain error: {0}")]
    Domain(String),

    /// Removal-rate estimation hit a day with no hospitalized individuals.
    #[error("removal rate undefined on {date}: hospitalized count is zero")]
    ZeroHospitalized { date: NaiveDate },

    /// Integration produced a physically impossible state.
    #[error("state collapse ({0})")]
    StateCollapse(String),

    /// The ensemble-space analysis system could not be inverted.
    #[error("ensemble-space system is numerically singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularSystem { min_eigenvalue: f64 },

    /// The innovation covariance of the reference Kalman update is not SPD.
    #[error("singular innovation covariance")]
    SingularInnovation,

    /// Spin-up could not produce a usable initial ensemble.
    #[error("spin-up initialization failed: {0}")]
    SpinupFailed(String),

    /// A text input could not be parsed; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// A run configuration key or value is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A parameter schedule was queried outside its date range.
    #[error("schedule does not cover {date}")]
    ScheduleOutOfRange { date: NaiveDate },

    /// The observation series does not cover a requested date.
    #[error("observations do not cover {date}")]
    ObsOutOfRange { date: NaiveDate },

    /// Two per-day sequences disagree on dates or lengths.
    #[error("date mismatch: {0}")]
    DateMismatch(String),

    /// A required CSV column is absent.
    #[error("missing column: {0}")]
    MissingColumn(String),

    /// Underlying I/O failure, annotated with the path by the caller.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
