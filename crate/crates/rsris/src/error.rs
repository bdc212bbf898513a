use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration file or parameter is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Matrix or vector dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Channel statistics violate a structural invariant (Hermitian/PSD/size).
    #[error("invalid statistics: {0}")]
    Stats(String),

    /// The precoder solve degenerated (all right-hand sides vanished); the
    /// caller must reinitialize.
    #[error("degenerate optimizer state: {0}")]
    Degenerate(String),

    /// Power iteration failed to reach the requested residual.
    #[error("power iteration did not converge: residual {residual:.3e} after {iters} iterations")]
    NonConvergence { residual: f64, iters: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Structured-file (TOML) parse failure.
    #[error("parse error: {0}")]
    Parse(String),

    /// Binary matrix container is malformed.
    #[error("malformed matrix container: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, Error>;
