use thiserror::Error;

/// Errors produced by the estimation protocols, the accountant and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("value {value} at index {index} exceeds magnitude bound {bound}")]
    OutOfRange {
        index: usize,
        value: f64,
        bound: f64,
    },

    #[error(
        "kashin iteration did not converge: residual norm {residual:e} after {iters} iterations"
    )]
    NonConvergence { residual: f64, iters: usize },

    #[error("kashin coefficients reach {achieved} x C/sqrt(D), above the frame level {level}")]
    LevelExceeded { achieved: f64, level: f64 },

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
