use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid truncation order {got}: need at least {min}")]
    InvalidTruncation { got: usize, min: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("logarithmic case: {0}")]
    Logarithmic(String),

    #[error("no sign change of the growth indicator on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("integrator failure at y = {at}: {reason}")]
    Stiffness { at: f64, reason: String },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("degenerate sign: |<phi, P phi>| = {value:e} for mode {index}")]
    DegenerateSign { index: usize, value: f64 },

    #[error("Perron check failed: {0}")]
    Perron(String),

    #[error("lower bound violated: {0}")]
    LowerBound(String),

    #[error("domain truncation too small: {0}")]
    DomainTruncation(String),

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("divergence detected: {0}")]
    Divergence(String),
}
