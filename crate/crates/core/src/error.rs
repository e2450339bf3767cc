use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // data
    #[error("cannot open {path}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("{path}: file is empty or has no data rows")]
    EmptyFile { path: PathBuf },
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("non-numeric cell at row {row}, column {col}: `{value}`")]
    NonNumericCell { row: usize, col: usize, value: String },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dataset needs at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("split would leave an empty side (train {train}, test {test})")]
    DegenerateSplit { train: usize, test: usize },
    #[error("presplit pair mismatch: {0}")]
    PresplitMismatch(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    // preprocess
    #[error("class {class} has {count} samples; SMOTE needs at least 2")]
    TooFewMinority { class: usize, count: usize },
    #[error("fuzzy sampling needs both classes populated")]
    NoMinority,
    #[error("fuzzy sampling expects a binary task, found {0} observed classes")]
    NotBinary(usize),
    #[error("label engineering needs at least 4 samples, got {0}")]
    TooFewSamples(usize),

    // learners
    #[error("loss became non-finite at epoch {epoch}")]
    NumericOverflow { epoch: usize },
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("covariance matrix stayed singular after ridge")]
    SingularCovariance,
    #[error("feature width mismatch: model expects {expected}, data has {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),

    // smoothness
    #[error("last-layer weight norm is zero")]
    ZeroWeightNorm,
    #[error("finite-difference probe returned a non-finite value")]
    NonFiniteProbe,

    // hpo
    #[error("requested {requested} configurations from a space of {available}")]
    SpaceTooSmall { requested: usize, available: usize },
    #[error("every smoothness probe failed")]
    AllProbesFailed,
    #[error("every full training run failed")]
    AllRunsFailed,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("coverage of exactly 1 is unreachable with finitely many samples")]
    ExactCoverageImpossible,
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),

    // stats
    #[error("statistics input invalid: {0}")]
    InvalidStatsInput(String),

    // experiment
    #[error("config error: {0}")]
    Config(String),
}
