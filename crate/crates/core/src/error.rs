use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the parameter domain of a formula (wrong regime, etc.).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Target points outside the extent of the source grid.
    #[error("out of range: {0}")]
    Range(String),

    /// The grid is too coarse for the requested operation.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// Inconsistent problem set-up (boundary condition vs. regime, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solver did not converge in {iterations} iterations (best relative residual {best_residual:.3e})")]
    NonConvergence { iterations: usize, best_residual: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
