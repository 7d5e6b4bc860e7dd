use thiserror::Error;

pub type Result<T> = std::result::Result<T, UpliftError>;

#[derive(Debug, Error)]
pub enum UpliftError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error at row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("degenerate column `{column}`: {message}")]
    DegenerateColumn { column: String, message: String },

    #[error("rank-deficient design: column `{column}` is collinear with earlier columns")]
    RankDeficient { column: String },

    #[error("column mismatch: missing {missing:?}, extra {extra:?}")]
    ColumnMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl UpliftError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        UpliftError::InvalidArgument(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        UpliftError::Schema(msg.into())
    }
}
