//! Physical movement onset from motion-capture hand positions.
//!
//! Per trial the hand marker is re-zeroed to its resting position, the
//! distance from rest is multiplied by the normalised, low-passed velocity,
//! and the onset is the first sample below a threshold found by walking
//! backwards from the hand-switch release.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{MovementCondition, Trial};
use crate::filter::Butterworth;
use crate::ingest::{MotionTrace, SessionData};

pub const LEFT_HAND: &str = "LHand";
pub const RIGHT_HAND: &str = "RHand";

/// Hand marker whose trajectory labels a trial: the left hand for bilateral
/// movements, the right (moving) hand for unilateral ones.
pub fn reference_hand(task: MovementCondition) -> &'static str {
    match task {
        MovementCondition::Bilateral => LEFT_HAND,
        MovementCondition::Unilateral => RIGHT_HAND,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OnsetError {
    #[error("trial has {samples} samples but re-zeroing needs {needed} (1 s of rest)")]
    TooShort { samples: usize, needed: usize },
    #[error("hand never moves away from rest (maximum velocity {max_velocity})")]
    Degenerate { max_velocity: f64 },
    #[error("no sample below {threshold} mm between trial start and sample {release}")]
    NoOnset { release: usize, threshold: f64 },
    #[error("release sample {release} outside the trial (length {len})")]
    ReleaseOutOfRange { release: usize, len: usize },
    #[error("threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("motion has no `{0}` marker")]
    MissingMarker(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnsetParams {
    /// Score threshold in millimetres.
    pub threshold: f64,
    /// Seconds subtracted from the release before searching backwards.
    pub mechanical_delay: f64,
    pub cutoff_hz: f64,
    pub filter_order: usize,
}

impl Default for OnsetParams {
    fn default() -> Self {
        Self {
            threshold: 0.6,
            mechanical_delay: 0.0,
            cutoff_hz: 4.0,
            filter_order: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnsetEstimate {
    /// Onset on the shared sample clock.
    pub onset_sample: usize,
    /// Score per sample of the trial segment, starting at `segment_start`.
    pub score_trace: Vec<f64>,
    pub segment_start: usize,
    pub threshold: f64,
    pub switch_release_sample: usize,
}

impl OnsetEstimate {
    pub fn score_at(&self, sample: usize) -> f64 {
        self.score_trace[sample - self.segment_start]
    }
}

/// Subtracts the per-axis mean of the first second from a `samples × 3` segment.
pub fn rezero_segment(segment: ArrayView2<'_, f64>, rate: f64) -> Result<Array2<f64>, OnsetError> {
    let needed = rate.round() as usize;
    if segment.nrows() < needed || needed == 0 {
        return Err(OnsetError::TooShort {
            samples: segment.nrows(),
            needed,
        });
    }
    let rest = segment
        .slice(ndarray::s![..needed, ..])
        .mean_axis(Axis(0))
        .expect("non-empty rest");
    Ok(&segment - &rest)
}

/// Re-zeroes every marker of the trial segment `[rest_start, segment_end)`.
pub fn rezero(trace: &MotionTrace, trial: &Trial) -> Result<MotionTrace, OnsetError> {
    let (start, end) = (trial.rest_start_sample, trial.segment_end.min(trace.samples()));
    let n = end.saturating_sub(start);
    let mut positions = ndarray::Array3::zeros((trace.marker_names.len(), n, 3));
    for m in 0..trace.marker_names.len() {
        let seg = trace.positions.slice(ndarray::s![m, start..end, ..]);
        positions
            .index_axis_mut(Axis(0), m)
            .assign(&rezero_segment(seg, trace.rate)?);
    }
    Ok(MotionTrace {
        positions,
        rate: trace.rate,
        marker_names: trace.marker_names.clone(),
        flagged: trace
            .flagged
            .iter()
            .filter(|f| f.overlaps(start, end))
            .map(|f| crate::ingest::FlaggedSpan {
                marker: f.marker,
                start: f.start.max(start) - start,
                end: f.end.min(end) - start,
            })
            .collect(),
    })
}

/// Distance × normalised low-passed velocity, in millimetres, for a re-zeroed
/// `samples × 3` hand trajectory.
pub fn movement_score(hand: ArrayView2<'_, f64>, rate: f64, params: &OnsetParams) -> Result<Vec<f64>, OnsetError> {
    let d: Vec<f64> = hand
        .outer_iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
        .collect();
    let n = d.len();
    if n < 2 {
        return Err(OnsetError::TooShort { samples: n, needed: 2 });
    }
    let mut v = Vec::with_capacity(n);
    v.push(d[1] - d[0]);
    v.extend(d.windows(2).map(|w| w[1] - w[0]));
    let v = Butterworth::lowpass(params.filter_order, params.cutoff_hz, rate).filtfilt(&v);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(OnsetError::Degenerate { max_velocity: max });
    }
    Ok(d.iter().zip(&v).map(|(d, v)| d * (v / max)).collect())
}

/// Walks backwards from `release` (inclusive) to the first score below `threshold`.
/// Indices are relative to `score`.
pub fn detect_onset(score: &[f64], release: usize, threshold: f64) -> Result<usize, OnsetError> {
    if !(threshold > 0.0) {
        return Err(OnsetError::BadThreshold(threshold));
    }
    if release >= score.len() {
        return Err(OnsetError::ReleaseOutOfRange {
            release,
            len: score.len(),
        });
    }
    (0..=release)
        .rev()
        .find(|&t| score[t] < threshold)
        .ok_or(OnsetError::NoOnset { release, threshold })
}

/// Full per-trial estimate on the shared clock.
pub fn estimate_onset(trace: &MotionTrace, trial: &Trial, params: &OnsetParams) -> Result<OnsetEstimate, OnsetError> {
    let name = reference_hand(trial.condition);
    let hand = trace
        .marker_index(name)
        .ok_or_else(|| OnsetError::MissingMarker(name.to_string()))?;
    let start = trial.rest_start_sample;
    let end = trial.segment_end.min(trace.samples());
    let seg = trace.positions.slice(ndarray::s![hand, start..end.max(start), ..]);
    let zeroed = rezero_segment(seg, trace.rate)?;
    let score = movement_score(zeroed.view(), trace.rate, params)?;
    let delay = (params.mechanical_delay * trace.rate).round() as usize;
    let release = trial.release_sample.checked_sub(start + delay).ok_or(OnsetError::ReleaseOutOfRange {
        release: trial.release_sample,
        len: score.len(),
    })?;
    let onset = detect_onset(&score, release, params.threshold)?;
    Ok(OnsetEstimate {
        onset_sample: start + onset,
        score_trace: score,
        segment_start: start,
        threshold: params.threshold,
        switch_release_sample: trial.release_sample,
    })
}

fn reason(err: &OnsetError) -> &'static str {
    match err {
        OnsetError::TooShort { .. } => "too-short",
        OnsetError::Degenerate { .. } => "no-movement",
        OnsetError::NoOnset { .. } => "no-onset",
        OnsetError::ReleaseOutOfRange { .. } => "release-out-of-range",
        OnsetError::BadThreshold(_) => "bad-threshold",
        OnsetError::MissingMarker(_) => "no-hand-marker",
    }
}

/// Fills `onset_sample` of every trial; failures invalidate the trial.
pub fn label_onsets(session: &mut SessionData, params: &OnsetParams) -> Vec<Result<OnsetEstimate, OnsetError>> {
    let motion = &session.motion;
    session
        .trials
        .iter_mut()
        .map(|trial| {
            let est = estimate_onset(motion, trial, params);
            match &est {
                Ok(e) => trial.onset_sample = Some(e.onset_sample),
                Err(err) => {
                    trial.onset_sample = None;
                    trial.invalidate(reason(err));
                }
            }
            est
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    #[test]
    fn rezero_examples() {
        let seg = Array2::from_elem((600, 3), 7.0);
        assert!(rezero_segment(seg.view(), 500.0).unwrap().iter().all(|&v| v == 0.0));

        let seg = Array2::from_shape_fn((800, 3), |(t, a)| match a {
            0 if t < 500 => 10.0,
            0 => 40.0,
            _ => 0.0,
        });
        let z = rezero_segment(seg.view(), 500.0).unwrap();
        assert_eq!(z[[0, 0]], 0.0);
        assert_eq!(z[[700, 0]], 30.0);

        let short = Array2::zeros((400, 3));
        assert_eq!(
            rezero_segment(short.view(), 500.0),
            Err(OnsetError::TooShort { samples: 400, needed: 500 })
        );
    }

    #[test]
    fn stationary_hand_is_degenerate() {
        let hand = Array2::zeros((1000, 3));
        assert!(matches!(
            movement_score(hand.view(), 500.0, &OnsetParams::default()),
            Err(OnsetError::Degenerate { .. })
        ));
    }

    #[test]
    fn ramp_score_tracks_distance() {
        let c = 0.3;
        let hand = Array2::from_shape_fn((2000, 3), |(t, a)| if a == 1 { c * t as f64 } else { 0.0 });
        let score = movement_score(hand.view(), 500.0, &OnsetParams::default()).unwrap();
        for t in 200..1800 {
            let d = c * t as f64;
            assert!((score[t] - d).abs() < 1e-6 * d, "t={t}");
        }
    }

    #[test]
    fn backward_search_examples() {
        let score = [0.0, 0.0, 0.0, 0.5, 0.7, 1.2, 2.0];
        assert_eq!(detect_onset(&score, 6, 0.6), Ok(3));
        assert_eq!(detect_onset(&[0.1; 10], 9, 0.6), Ok(9));
        assert_eq!(
            detect_onset(&[1.0; 10], 9, 0.6),
            Err(OnsetError::NoOnset { release: 9, threshold: 0.6 })
        );
        assert!(matches!(detect_onset(&[0.0; 3], 3, 0.6), Err(OnsetError::ReleaseOutOfRange { .. })));
        assert_eq!(detect_onset(&[0.0; 3], 2, 0.0), Err(OnsetError::BadThreshold(0.0)));
    }

    proptest! {
        #[test]
        fn higher_threshold_never_moves_onset_earlier(
            score in prop::collection::vec(0.0f64..5.0, 2..200),
            t1 in 0.01f64..5.0,
            dt in 0.0f64..3.0,
        ) {
            let release = score.len() - 1;
            let low = detect_onset(&score, release, t1);
            let high = detect_onset(&score, release, t1 + dt);
            if let Ok(low) = low {
                prop_assert!(high.unwrap() >= low);
            }
        }

        #[test]
        fn onset_scores_below_threshold(score in prop::collection::vec(0.0f64..2.0, 1..100), th in 0.01f64..2.0) {
            let release = score.len() - 1;
            if let Ok(t) = detect_onset(&score, release, th) {
                prop_assert!(t <= release);
                prop_assert!(score[t] < th);
                prop_assert!(score[t + 1..=release].iter().all(|&s| s >= th));
            }
        }

        #[test]
        fn scaling_scores_with_threshold_is_invariant(score in prop::collection::vec(0.0f64..2.0, 1..100), k in 0.1f64..10.0) {
            let release = score.len() - 1;
            let scaled: Vec<f64> = score.iter().map(|s| s * k).collect();
            prop_assert_eq!(detect_onset(&score, release, 0.6).ok(), detect_onset(&scaled, release, 0.6 * k).ok());
        }
    }
}
