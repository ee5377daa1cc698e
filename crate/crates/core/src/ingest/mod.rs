//! Acquisition file formats, stream synchronisation and the dataset cache.

mod brainvision;
mod cache;
mod motion;
mod sync;
mod trials;

use std::path::PathBuf;

use ndarray::{s, Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{MovementCondition, RawRecording, RecordingError, Trial};

pub use brainvision::{read_brainvision, write_brainvision, BinaryFormat};
pub use cache::{
    cache_dataset, load_dataset, read_container, session_from_container, session_to_container,
    write_container, Block, Container, Dtype, CACHE_MAGIC, SCHEMA_VERSION,
};
pub use motion::{parse_motion_csv, read_motion_csv, write_motion_csv, MAX_INTERPOLATED_GAP};
pub use sync::{synchronize, SessionInfo};
pub use trials::build_trial_table;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: unsupported binary format `{format}`")]
    UnsupportedFormat { path: String, format: String },
    #[error("{path}: truncated data file: {bytes} bytes is not a multiple of {frame} bytes per sample frame")]
    Truncated {
        path: String,
        bytes: usize,
        frame: usize,
    },
    #[error("{path}:{line}: marker position {position} outside the recording (0..{samples})")]
    MarkerOutOfRange {
        path: String,
        line: usize,
        position: usize,
        samples: usize,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: sampling rate not declared (add `# rate = <Hz>` or pass it explicitly)")]
    MissingRate { path: String },
    #[error("start code `{code}` not found among EEG markers")]
    StartCodeMissing { code: String },
    #[error("start code `{code}` is ambiguous: found at samples {positions:?}")]
    StartCodeAmbiguous { code: String, positions: Vec<usize> },
    #[error("motion stream ({motion} samples at {motion_rate} Hz) does not fit the EEG clock: {message}")]
    SyncMismatch {
        motion: usize,
        motion_rate: f64,
        message: String,
    },
    #[error("{path}: not a dataset container (bad magic bytes)")]
    BadMagic { path: String },
    #[error("{path}: unsupported schema version {found} (this build reads up to {supported})")]
    UnsupportedVersion {
        path: String,
        found: u32,
        supported: u32,
    },
    #[error("{path}: checksum mismatch in {section}")]
    Checksum { path: String, section: String },
    #[error("{path}: malformed container: {message}")]
    Container { path: String, message: String },
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into().display().to_string(),
            source,
        }
    }
}

/// A motion-capture span that was not observed directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedSpan {
    pub marker: usize,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
}

impl FlaggedSpan {
    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

/// Marker positions in millimetres: `markers × samples × 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTrace {
    pub positions: Array3<f64>,
    pub rate: f64,
    pub marker_names: Vec<String>,
    /// Spans filled by interpolation or padding that are too long to trust.
    pub flagged: Vec<FlaggedSpan>,
}

impl MotionTrace {
    pub fn samples(&self) -> usize {
        self.positions.shape()[1]
    }

    pub fn marker_index(&self, name: &str) -> Option<usize> {
        self.marker_names
            .iter()
            .position(|m| m.eq_ignore_ascii_case(name))
    }

    /// `samples × 3` view of one marker.
    pub fn marker(&self, index: usize) -> ArrayView2<'_, f64> {
        self.positions.slice(s![index, .., ..])
    }

    /// Copy of one marker over `[start, end)`.
    pub fn marker_segment(&self, index: usize, start: usize, end: usize) -> Array2<f64> {
        self.positions.slice(s![index, start..end, ..]).to_owned()
    }

    pub fn is_flagged(&self, marker: usize, start: usize, end: usize) -> bool {
        self.flagged
            .iter()
            .any(|f| f.marker == marker && f.overlaps(start, end))
    }
}

/// Trigger codes written by the experiment control into the EEG marker stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventCodes {
    pub motion_start: String,
    pub motion_stop: String,
    pub switch_press: String,
    pub switch_release: String,
    pub button_press: String,
    pub error_symbol: String,
}

impl Default for EventCodes {
    fn default() -> Self {
        Self {
            motion_start: "S 16".into(),
            motion_stop: "S 17".into(),
            switch_press: "S  1".into(),
            switch_release: "S  2".into(),
            button_press: "S  3".into(),
            error_symbol: "S  4".into(),
        }
    }
}

/// Opaque payload carried through the cache untouched (e.g. EMG files).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub name: String,
    #[serde(skip)]
    pub bytes: Vec<u8>,
}

/// One recording set of one subject, with EEG and motion on a common clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionData {
    pub subject_id: String,
    pub task: MovementCondition,
    pub set_index: usize,
    pub eeg: RawRecording,
    pub motion: MotionTrace,
    pub trials: Vec<Trial>,
    pub attachments: Vec<Attachment>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionInvariant {
    #[error("motion rate {motion} Hz differs from EEG rate {eeg} Hz")]
    RateMismatch { eeg: f64, motion: f64 },
    #[error("EEG has {eeg} samples but motion has {motion}")]
    LengthMismatch { eeg: usize, motion: usize },
    #[error("trial {trial}: sample {sample} outside the streams")]
    TrialOutOfRange { trial: usize, sample: usize },
    #[error("trial {0}: marked valid with a resting period under the minimum")]
    ShortRestValid(usize),
    #[error("motion contains non-finite values")]
    NonFiniteMotion,
}

impl SessionData {
    /// Checks the shared invariants of ingested and synthetic sessions.
    pub fn validate(&self) -> Result<(), SessionInvariant> {
        if self.motion.rate != self.eeg.rate() {
            return Err(SessionInvariant::RateMismatch {
                eeg: self.eeg.rate(),
                motion: self.motion.rate,
            });
        }
        let (n_eeg, n_motion) = (self.eeg.samples(), self.motion.samples());
        if n_eeg.abs_diff(n_motion) > 2 {
            return Err(SessionInvariant::LengthMismatch {
                eeg: n_eeg,
                motion: n_motion,
            });
        }
        let n = n_eeg.min(n_motion);
        for t in &self.trials {
            for sample in [Some(t.release_sample), t.onset_sample].into_iter().flatten() {
                if sample >= n {
                    return Err(SessionInvariant::TrialOutOfRange {
                        trial: t.index,
                        sample,
                    });
                }
            }
            if t.valid && t.rest_duration < crate::domain::MIN_REST_SECONDS {
                return Err(SessionInvariant::ShortRestValid(t.index));
            }
        }
        if self.motion.positions.iter().any(|v| !v.is_finite()) {
            return Err(SessionInvariant::NonFiniteMotion);
        }
        Ok(())
    }
}
