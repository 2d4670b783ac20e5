use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input file not found: {0}")]
    MissingFile(PathBuf),

    #[error("required column `{column}` not found in header of {path}")]
    MissingColumn { column: String, path: String },

    #[error("no valid rows in {path} ({rejected} rejected)")]
    NoValidRows { path: String, rejected: usize },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{0}` is categorical; summary statistics need a numeric or dummy column")]
    CategoricalColumn(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("all columns of the design matrix are degenerate")]
    AllColumnsDegenerate,

    #[error("not enough observations: n = {n}, parameters = {p}")]
    Underdetermined { n: usize, p: usize },

    #[error("partition `{0}` has no rows")]
    EmptyPartition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("clear-sky series required for smart persistence")]
    MissingClearSky,

    #[error("reference error is zero; skill score is undefined")]
    UndefinedSkill,

    #[error("cross-validation fold {0} has no rows")]
    EmptyFold(usize),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
