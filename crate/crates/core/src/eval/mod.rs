//! Continuous prediction, relabelling, balanced accuracy and the study harness.

pub mod export;
pub mod metrics;
pub mod relabel;
pub mod study;

use thiserror::Error;

use crate::channels::RegistryError;
use crate::domain::{MovementCondition, RecordingError};
use crate::model::ModelError;
use crate::preprocess::PreprocessError;

pub use export::{cell_svg, csv_bytes, export_report, read_csv, write_csv, CSV_HEADER};
pub use metrics::{balanced_accuracy, Confusion, Metrics};
pub use relabel::{change_point, relabel, RelabelScan, N_WINDOWS, RANGE_END, RANGE_LEN, RANGE_START};
pub use study::{
    channel_union, permutations, prepare_subject, run_condition, run_subject, score_trials, CellSummary, EvalConfig,
    SplitResult, StudyReport, SubjectTrials, IMBALANCE_LIMIT, N_SETS,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("expected {expected} window predictions, found {found}")]
    IncompletePredictions { expected: usize, found: usize },
    #[error("{predicted} predictions but {truth} ground-truth labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("undefined rate: {0}")]
    UndefinedRate(&'static str),
    #[error("subject {subject} has no valid {task} trials in set {set}")]
    MissingSet {
        subject: String,
        task: MovementCondition,
        set: usize,
    },
    #[error("subject {subject}: channel {channel} was not prepared")]
    MissingChannel { subject: String, channel: String },
    #[error("train/test overlap: {0}")]
    Leakage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("CSV: {0}")]
    Csv(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
