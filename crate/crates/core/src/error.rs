use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ClanError>;

#[derive(Debug, Error)]
pub enum ClanError {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("degenerate input in {op}: {detail}")]
    Degenerate { op: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is not finite")]
    Divergence { epoch: usize, batch: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("csv file {path}: missing label column `{column}`")]
    MissingLabelColumn { path: PathBuf, column: String },

    #[error("csv file {path}: no data rows")]
    EmptyFile { path: PathBuf },

    #[error("csv file {path}: no usable rows ({dropped} rejected)")]
    NoUsableRows { path: PathBuf, dropped: usize },

    #[error("benign label value `{value}` does not occur in the label column")]
    BenignLabelMissing { value: String },

    #[error("unknown class name `{0}`")]
    UnknownClass(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ClanError {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        ClanError::Dimension { op, detail: detail.into() }
    }

    pub(crate) fn degenerate(op: &'static str, detail: impl Into<String>) -> Self {
        ClanError::Degenerate { op, detail: detail.into() }
    }
}
