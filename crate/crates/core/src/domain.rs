//! Shared data model: recordings, trials, labels and the train/test conditions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::ChannelSet;

/// Minimum resting period before a movement for the trial to count.
pub const MIN_REST_SECONDS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MovementCondition {
    Unilateral,
    Bilateral,
}

impl MovementCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            MovementCondition::Unilateral => "unilateral",
            MovementCondition::Bilateral => "bilateral",
        }
    }
}

impl fmt::Display for MovementCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown value `{0}`")]
pub struct ParseEnumError(pub String);

impl FromStr for MovementCondition {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unilateral" | "uni" => Ok(MovementCondition::Unilateral),
            "bilateral" | "bi" => Ok(MovementCondition::Bilateral),
            other => Err(ParseEnumError(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    A,
    B,
    C,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionId::A => "A",
            ConditionId::B => "B",
            ConditionId::C => "C",
        })
    }
}

impl FromStr for ConditionId {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(ConditionId::A),
            "B" | "b" => Ok(ConditionId::B),
            "C" | "c" => Ok(ConditionId::C),
            other => Err(ParseEnumError(other.to_string())),
        }
    }
}

/// Which movement task a classifier is trained on and which it is tested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StudyCondition {
    pub id: ConditionId,
    pub train: MovementCondition,
    pub test: MovementCondition,
}

impl StudyCondition {
    /// A: no transfer (unilateral), B: no transfer (bilateral), C: transfer.
    pub const fn table() -> [StudyCondition; 3] {
        use MovementCondition::*;
        [
            StudyCondition {
                id: ConditionId::A,
                train: Unilateral,
                test: Unilateral,
            },
            StudyCondition {
                id: ConditionId::B,
                train: Bilateral,
                test: Bilateral,
            },
            StudyCondition {
                id: ConditionId::C,
                train: Bilateral,
                test: Unilateral,
            },
        ]
    }

    pub fn get(id: ConditionId) -> StudyCondition {
        Self::table()[id as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    NoLrp,
    Lrp,
}

impl Label {
    pub fn is_lrp(self) -> bool {
        self == Label::Lrp
    }

    /// `+1` for LRP, `-1` for NoLRP.
    pub fn sign(self) -> f64 {
        match self {
            Label::Lrp => 1.0,
            Label::NoLrp => -1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Lrp => "LRP",
            Label::NoLrp => "NoLRP",
        })
    }
}

/// Event marker on the EEG sample clock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub sample: usize,
    /// Marker description, e.g. `S 16`.
    pub code: String,
    /// Marker type, e.g. `Stimulus`.
    pub kind: String,
}

impl Marker {
    pub fn stimulus(sample: usize, code: impl Into<String>) -> Self {
        Self {
            sample,
            code: code.into(),
            kind: "Stimulus".into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordingError {
    #[error("sampling rate must be positive, got {0}")]
    BadRate(f64),
    #[error("data has {rows} rows but {names} channel names")]
    ShapeMismatch { rows: usize, names: usize },
    #[error("marker `{code}` at sample {sample} lies outside [0, {samples})")]
    MarkerOutOfRange {
        code: String,
        sample: usize,
        samples: usize,
    },
    #[error("channel `{0}` not present in the recording")]
    MissingChannel(String),
}

/// Multichannel EEG: `channels × samples` in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    data: Array2<f64>,
    rate: f64,
    channel_names: Vec<String>,
    markers: Vec<Marker>,
}

impl RawRecording {
    pub fn new(
        data: Array2<f64>,
        rate: f64,
        channel_names: Vec<String>,
        mut markers: Vec<Marker>,
    ) -> Result<Self, RecordingError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(RecordingError::BadRate(rate));
        }
        if data.nrows() != channel_names.len() {
            return Err(RecordingError::ShapeMismatch {
                rows: data.nrows(),
                names: channel_names.len(),
            });
        }
        let samples = data.ncols();
        if let Some(m) = markers.iter().find(|m| m.sample >= samples) {
            return Err(RecordingError::MarkerOutOfRange {
                code: m.code.clone(),
                sample: m.sample,
                samples,
            });
        }
        markers.sort_by_key(|m| m.sample);
        Ok(Self {
            data,
            rate,
            channel_names,
            markers,
        })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
    }

    /// Row indices of `channels` in this recording, in the given order.
    pub fn channel_indices<S: AsRef<str>>(&self, channels: &[S]) -> Result<Vec<usize>, RecordingError> {
        channels
            .iter()
            .map(|c| {
                self.channel_index(c.as_ref())
                    .ok_or_else(|| RecordingError::MissingChannel(c.as_ref().to_string()))
            })
            .collect()
    }

    /// Projects onto the channels of `set`, rows in set order.
    pub fn select_channels(&self, set: &ChannelSet) -> Result<RawRecording, RecordingError> {
        let idx = self.channel_indices(set.channels())?;
        Ok(RawRecording {
            data: self.data.select(Axis(0), &idx),
            rate: self.rate,
            channel_names: set.channels().to_vec(),
            markers: self.markers.clone(),
        })
    }

    pub fn into_parts(self) -> (Array2<f64>, f64, Vec<String>, Vec<Marker>) {
        (self.data, self.rate, self.channel_names, self.markers)
    }
}

/// One reaching movement within a recording set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub condition: MovementCondition,
    pub set_index: usize,
    /// Sample where the resting period began (hand-switch pressed).
    pub rest_start_sample: usize,
    /// Sample where the hand-switch was released.
    pub release_sample: usize,
    /// Exclusive end of the trial's motion segment.
    pub segment_end: usize,
    pub rest_duration: f64,
    /// Physical movement onset on the EEG clock, once estimated.
    pub onset_sample: Option<usize>,
    pub valid: bool,
    pub reason: Option<String>,
}

impl Trial {
    pub fn invalidate(&mut self, reason: impl Into<String>) {
        if self.valid {
            self.valid = false;
            self.reason = Some(reason.into());
        }
    }
}

/// Marks a trial invalid when its resting period is shorter than `min_rest`
/// seconds. The boundary is inclusive. Other invalidity reasons are kept.
pub fn validate_trial(mut trial: Trial, min_rest: f64) -> Trial {
    if trial.rest_duration < min_rest {
        trial.invalidate(format!("rest<{min_rest}s"));
    }
    trial
}

/// Provenance of a window: which subject, task, set and trial it came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrialRef {
    pub subject: Arc<str>,
    pub task: MovementCondition,
    pub set_index: usize,
    pub trial_index: usize,
}
