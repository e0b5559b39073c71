use thiserror::Error;

/// Errors raised by the analytic kernels and the Monte Carlo engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: argument out of domain ({detail})")]
    Domain { op: &'static str, detail: String },

    #[error("{op}: no convergence after {iterations} iterations")]
    NonConvergence { op: &'static str, iterations: usize },

    #[error("{op}: degenerate input ({detail})")]
    Degenerate { op: &'static str, detail: String },

    #[error("slope fit needs at least 3 eligible points, found {found}")]
    InsufficientPoints { found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// True for errors caused by bad inputs rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
