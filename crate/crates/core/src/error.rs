use thiserror::Error;

/// Failure categories, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument {value} outside the domain ({detail})")]
    Domain { func: &'static str, value: f64, detail: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid sigma: {0}")]
    InvalidSigma(String),
    #[error("cannot parse sigma spec: {0}")]
    SigmaParse(#[from] serde_json::Error),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("factorization breakdown at pivot {index} (value {pivot:e}); resolution too coarse or sigma invalid")]
    Factorization { index: usize, pivot: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("Newton iteration failed: {0}")]
    NoConvergence(String),
    #[error(
        "operator needs {nodes} nodes, above the limit {limit}; the point is too deep in the tail for this resolution"
    )]
    TooLarge { nodes: usize, limit: usize },
    #[error("point outside the asymptotic regime: {0}")]
    RegimeViolated(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_)
            | Error::InvalidSigma(_)
            | Error::SigmaParse(_)
            | Error::RegimeViolated(_)
            | Error::Domain { .. } => ErrorKind::Config,
            Error::Divergent(_)
            | Error::Factorization { .. }
            | Error::NonFinite(_)
            | Error::NoConvergence(_)
            | Error::TooLarge { .. } => ErrorKind::Numerical,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
