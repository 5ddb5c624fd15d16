use thiserror::Error;

/// Errors produced by the numerical library.
#[derive(Debug, Error)]
pub enum GlError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("{what} did not converge after {iters} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iters: usize,
        residual: f64,
    },
    #[error("malformed table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, GlError>;
