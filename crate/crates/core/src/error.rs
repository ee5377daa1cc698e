use thiserror::Error;

use crate::channels::RegistryError;
use crate::domain::RecordingError;
use crate::eval::EvalError;
use crate::ingest::IngestError;
use crate::model::ModelError;
use crate::onset::OnsetError;
use crate::preprocess::PreprocessError;
use crate::synth::SynthError;

/// Crate-wide error: one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Onset(#[from] OnsetError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl Error {
    /// Short machine-readable category, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Registry(_) => "registry",
            Error::Recording(_) => "recording",
            Error::Ingest(_) => "ingest",
            Error::Onset(_) => "onset",
            Error::Preprocess(_) => "preprocess",
            Error::Model(_) => "model",
            Error::Eval(_) => "eval",
            Error::Synth(_) => "synth",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
