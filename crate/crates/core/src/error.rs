use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// No multiplier on the search grid puts `nu` reference points around every query.
    #[error(
        "no radius multiplier up to {max_multiplier} covers {nu} points around query {worst_query} \
         (only {found} found at the largest radius)"
    )]
    RadiusNotFound {
        nu: usize,
        max_multiplier: f64,
        worst_query: usize,
        found: usize,
    },

    #[error("sketch matrix has numerical rank {rank} < {requested}; use a smaller sketch dimension")]
    SketchRankDeficient { rank: usize, requested: usize },

    #[error("points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),

    #[error("linear system is numerically singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("iteration {iteration} diverged: |coordinate| {magnitude:e} exceeds limit {limit:e}")]
    Diverged {
        iteration: usize,
        magnitude: f64,
        limit: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
