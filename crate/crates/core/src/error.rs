use thiserror::Error;

/// Failure modes shared by every numeric operation in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision overflow: {needed} digits required, cap is {cap}")]
    PrecisionOverflow { needed: u32, cap: u32 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("quadrature did not converge (last estimate {estimate}, error estimate {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("no sign change on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::Domain(_) | Error::Bracket { .. } => 3,
            Error::PrecisionOverflow { .. } | Error::Capacity(_) => 4,
            Error::Invariant(_) => 5,
            Error::Quadrature { .. } | Error::Convergence(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
