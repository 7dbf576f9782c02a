use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of the model (y <= 0, f <= 0, r outside the annulus, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// First fundamental form is not positive definite.
    #[error("degenerate immersion: {0}")]
    Degenerate(String),

    #[error("assembly failed at node (i={i}, j={j}): {reason}")]
    Assembly { i: usize, j: usize, reason: String },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("diagnostic unavailable: {0}")]
    Precondition(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
