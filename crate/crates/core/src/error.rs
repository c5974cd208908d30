use thiserror::Error;

/// Failure modes shared by every module of the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("singular coefficient operator {what}: smallest pivot magnitude {pivot:.3e}")]
    Singular { what: String, pivot: f64 },

    #[error("{0}")]
    Domain(String),

    #[error(
        "quadrature on [{lo}, {hi}] did not reach tolerance: estimate {estimate:.6e}, \
         error {error:.3e} after {intervals} intervals"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("numerical tolerance exceeded: {what} = {value:.3e} > {limit:.3e}")]
    Tolerance { what: String, value: f64, limit: f64 },

    #[error("ill-formed term: {0}")]
    IllFormed(String),

    #[error("unresolvable distribution product: {0}")]
    KernelProduct(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
