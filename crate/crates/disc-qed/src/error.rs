//! Crate-wide error type and result alias.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration document (wrong shape, missing/unknown keys).
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    /// A structurally valid document that violates a model invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A model whose assembled dynamics are unusable (unstable homogeneous part).
    #[error("model error: {0}")]
    Model(String),

    /// Numerical failure (singular matrix, NaN residual, non-convergent oracle).
    #[error("numerical error: {0}")]
    Numerics(String),

    /// Fit did not converge within the iteration budget.
    #[error("fit did not converge: {message} (last residual norm {last_residual_norm:.6e})")]
    FitNonConvergence {
        message: String,
        last_residual_norm: f64,
    },

    /// Bad request at a public interface (unknown port name, grid mismatch, ...).
    #[error("interface error: {0}")]
    Interface(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 validation, 3 fit non-convergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } | Error::Validation(_) | Error::Model(_) | Error::Interface(_) => 2,
            Error::FitNonConvergence { .. } => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 4,
            Error::Numerics(_) => 1,
        }
    }
}
