use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller violated a precondition (wrong length, zero field, bad argument).
    #[error("usage error: {0}")]
    Usage(String),

    /// A multiplier or weight evaluated to a non-finite value.
    #[error("overflow evaluating symbol at k = {k}")]
    Overflow { k: f64 },

    /// The integrated solution became non-finite or exceeded the sup-norm ceiling.
    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    /// Configuration could not be satisfied (e.g. no stable time step found).
    #[error("configuration error: {0}")]
    Config(String),

    /// The initial field carries too much mass near the box edges.
    #[error("boundary mass fraction {fraction:e} exceeds {limit:e}")]
    BoundaryMass { fraction: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
