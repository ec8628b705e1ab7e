use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(
        "truncation too coarse at n={n}: tail bound {tail_bound:.3e} exceeds {tolerance} x retained {retained:.3e}; try l_max >= {suggested_l_max}"
    )]
    Truncation {
        n: u64,
        retained: f64,
        tail_bound: f64,
        tolerance: f64,
        suggested_l_max: usize,
    },

    #[error("quadrature did not converge after {doublings} doublings (last estimate {estimate:e})")]
    NonConvergence { estimate: f64, doublings: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
