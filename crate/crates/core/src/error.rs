use thiserror::Error;

/// Errors produced by the shape, potential and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular boundary integral system (condition number {condition_number:.3e})")]
    SingularSystem { condition_number: f64 },

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    Divergence { iterations: usize, residual: f64 },

    #[error("singular jacobian at We = {we} (reciprocal condition {rcond:.3e}); a branch switch is required")]
    SingularJacobian { we: f64, rcond: f64 },

    #[error("tolerance check failed: {0}")]
    Tolerance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
