//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown builtin algebra `{0}` (expected sl2, sol, euc, or sol_euc)")]
    UnknownBuiltin(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bilinear form is degenerate")]
    DegenerateForm,

    #[error("matrix realization is not a Lie algebra homomorphism: {0}")]
    InvalidRealization(String),

    #[error("singular matrix")]
    SingularMatrix,

    #[error("quartic rejected: {0}")]
    QuarticRejected(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
