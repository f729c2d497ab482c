use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("element count mismatch: cannot reshape {from} elements into {to}")]
    ElementCountMismatch { from: usize, to: usize },

    #[error("bond mismatch: last extent {left} != first extent {right}")]
    BondMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero norm: {0}")]
    ZeroNorm(String),

    #[error("rank {rank} too large: {reason}")]
    RankTooLarge { rank: usize, reason: String },

    #[error("degenerate eigenpairs: {0}")]
    DegenerateEig(String),

    #[error("degenerate bond ranks: {0}")]
    DegenerateRanks(String),

    #[error("conversion failed: {0}")]
    ConversionFailed(String),

    #[error("column count {count} exceeds safety cap {cap}")]
    ColumnCapExceeded { count: usize, cap: usize },

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
