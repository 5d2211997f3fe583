use thiserror::Error;

use crate::types::PolarizationBasis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "negative emission delay {0} ps: the exciton photon cannot precede the biexciton photon"
    )]
    NegativeDelay(f64),

    #[error(
        "quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}"
    )]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("gate retains no coincidences; the gated state is undefined")]
    EmptyGate,

    #[error("insufficient counts: no gated events in the {0} basis")]
    InsufficientCounts(PolarizationBasis),

    #[error("grid too narrow: spectrum still above half maximum at {bound} µeV")]
    GridTooNarrow { bound: f64 },

    #[error("spectrum has no interior maximum")]
    NoInteriorPeak,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input (configuration or parameters)
    /// rather than by the data being processed.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidParameter { .. })
    }
}
