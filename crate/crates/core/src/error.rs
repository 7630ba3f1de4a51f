//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by system construction, parsing, and the deflation engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed inconsistently sized vectors, matrices, or shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Invalid argument outside of dimension problems (bad shape, bad flag).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Text input (polynomial grammar, point syntax) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// A file parsed as JSON but violates the documented schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// The supplied point does not satisfy the system to the required residual.
    #[error("not a solution: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotASolution { residual: f64, tolerance: f64 },

    /// Border drawing kept producing rank-deficient stacks; the nullity
    /// estimate that sized the border is probably wrong.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A numerical routine (SVD, QR, residual check) failed or missed its
    /// tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The structured (block-recursive) path only carries systems of degree
    /// at most 3; higher degrees must go through the symbolic oracle.
    #[error("unsupported degree {degree} on the structured path: {hint}")]
    UnsupportedDegree { degree: usize, hint: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
