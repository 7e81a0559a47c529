use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilError {
    #[error("empty bag")]
    EmptyBag,

    #[error("no bags")]
    NoBags,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("bag {bag_id}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        bag_id: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid label {0}: labels must be -1 or 1")]
    InvalidLabel(i64),

    #[error("duplicate bag id {0}")]
    DuplicateBagId(String),

    #[error("bag {bag_id}: {size} instances exceeds max bag size {max}")]
    BagTooLarge {
        bag_id: String,
        size: usize,
        max: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("feature index {index} out of range for dimension {dimension}")]
    FeatureOutOfRange { index: usize, dimension: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: {bags} bags but {weights} weights")]
    LengthMismatch { bags: usize, weights: usize },

    #[error("zero total weight")]
    ZeroWeight,

    #[error("rate unreachable")]
    RateUnreachable,

    #[error("untrained")]
    Untrained,

    #[error("exceeds brute-force budget: {0}")]
    BudgetExceeded(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported model format_version {0}")]
    FormatVersion(u64),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, MilError>;

impl MilError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MilError::InvalidArgument(msg.into())
    }
}
