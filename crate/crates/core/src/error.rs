use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no data rows")]
    NoData,
    #[error("column `{0}` not found")]
    UnknownColumn(String),
    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },
    #[error("invalid column specification: {0}")]
    ColumnSpec(String),
    #[error("column `{column}`: unmapped level `{level}`")]
    UnmappedLevel { column: String, level: String },
    #[error("invalid learner specification: {0}")]
    LearnerSpec(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("folds: {0}")]
    Folds(String),
    #[error("every learner in the library failed")]
    AllLearnersFailed,
    #[error("positivity: {0}")]
    Positivity(String),
    #[error("truncation bound {bound:.4} for n = {n} is not below 0.5; supply an explicit bound")]
    BoundRequiresOverride { n: usize, bound: f64 },
    #[error("invalid simulation spec: {0}")]
    Dgp(String),
    #[error("replicate with seed {seed} failed: {message}")]
    Replicate { seed: u64, message: String },
}
