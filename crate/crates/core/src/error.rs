use thiserror::Error;

/// Errors produced by the analysis, simulation, and CLI layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its domain (non-positive rate, NaN SNR, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vectors that must agree in length do not.
    #[error("dimension mismatch: expected {expected} relays, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The buffer configuration admits no state.
    #[error("infeasible buffer configuration: N={n}, L_b={lb}, N_e={ne} (need 0 <= N_e <= {max})")]
    Infeasible {
        n: usize,
        lb: u32,
        ne: u64,
        max: u64,
    },

    /// The request is well formed but outside what the analysis or engine supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A configuration document failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A self-check failed; indicates a bug in a construction.
    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
