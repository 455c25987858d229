use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank-deficient input: numerical rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("operator norm {source_space} -> {target_space} has no closed form; pass allow_estimates to accept a lower-bound estimate")]
    EstimateOnly {
        source_space: String,
        target_space: String,
    },

    #[error("blocks do not sum to the operator: max entry residual {residual:e} exceeds {tolerance:e}")]
    BlockResidual { residual: f64, tolerance: f64 },

    #[error("zero block cannot be split")]
    ZeroBlock,

    #[error("infeasible at rank {rank}: max deviation {deviation:e} exceeds eps {eps:e}")]
    Infeasible { rank: usize, deviation: f64, eps: f64 },

    #[error("enumeration too large: {count} candidates (limit {limit})")]
    TooLarge { count: u128, limit: u128 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
