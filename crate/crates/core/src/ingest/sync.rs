//! Places the motion stream on the EEG sample clock using trigger markers.

use ndarray::{s, Array3};

use super::{build_trial_table, EventCodes, FlaggedSpan, IngestError, MotionTrace, SessionData};
use crate::domain::{MovementCondition, RawRecording, MIN_REST_SECONDS};

/// Marker codes compare equal regardless of internal padding (`S 16` = `S16`).
pub(crate) fn code_matches(code: &str, wanted: &str) -> bool {
    code.chars()
        .filter(|c| !c.is_whitespace())
        .eq(wanted.chars().filter(|c| !c.is_whitespace()))
}

/// Identity of a recording set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionInfo {
    pub subject_id: String,
    pub task: MovementCondition,
    pub set_index: usize,
}

/// Shifts `motion` so its sample 0 lands on the EEG motion-start marker.
///
/// Samples of the EEG clock not covered by the motion stream hold the
/// nearest motion sample and are flagged. Rates must match: the streams are
/// only offset, never resampled.
pub fn synchronize(
    eeg: RawRecording,
    motion: MotionTrace,
    codes: &EventCodes,
    info: SessionInfo,
) -> Result<SessionData, IngestError> {
    let starts: Vec<usize> = eeg
        .markers()
        .iter()
        .filter(|m| code_matches(&m.code, &codes.motion_start))
        .map(|m| m.sample)
        .collect();
    let offset = match starts.as_slice() {
        [] => {
            return Err(IngestError::StartCodeMissing {
                code: codes.motion_start.clone(),
            })
        }
        [one] => *one,
        _ => {
            return Err(IngestError::StartCodeAmbiguous {
                code: codes.motion_start.clone(),
                positions: starts,
            })
        }
    };
    let len = motion.samples();
    let mismatch = |message: String| IngestError::SyncMismatch {
        motion: len,
        motion_rate: motion.rate,
        message,
    };
    if motion.rate != eeg.rate() {
        return Err(mismatch(format!("EEG runs at {} Hz", eeg.rate())));
    }
    if len == 0 {
        return Err(mismatch("motion stream is empty".into()));
    }
    let n = eeg.samples();
    if offset + len > n + 2 {
        return Err(mismatch(format!(
            "it would end at sample {} but the EEG has {n} samples",
            offset + len
        )));
    }
    if let Some(stop) = eeg
        .markers()
        .iter()
        .find(|m| m.sample > offset && code_matches(&m.code, &codes.motion_stop))
    {
        let expected = offset + len - 1;
        if stop.sample.abs_diff(expected) > 2 {
            return Err(mismatch(format!(
                "stop code at sample {} but the stream ends at {expected}",
                stop.sample
            )));
        }
    }

    let n_markers = motion.marker_names.len();
    let covered = len.min(n - offset);
    let mut positions = Array3::<f64>::zeros((n_markers, n, 3));
    positions
        .slice_mut(s![.., offset..offset + covered, ..])
        .assign(&motion.positions.slice(s![.., ..covered, ..]));
    for m in 0..n_markers {
        for t in 0..offset {
            for a in 0..3 {
                positions[[m, t, a]] = motion.positions[[m, 0, a]];
            }
        }
        for t in offset + covered..n {
            for a in 0..3 {
                positions[[m, t, a]] = motion.positions[[m, covered - 1, a]];
            }
        }
    }
    let mut flagged: Vec<FlaggedSpan> = motion
        .flagged
        .iter()
        .filter(|f| f.start < covered)
        .map(|f| FlaggedSpan {
            marker: f.marker,
            start: f.start + offset,
            end: (f.end.min(covered)) + offset,
        })
        .collect();
    for m in 0..n_markers {
        if offset > 0 {
            flagged.push(FlaggedSpan { marker: m, start: 0, end: offset });
        }
        if offset + covered < n {
            flagged.push(FlaggedSpan {
                marker: m,
                start: offset + covered,
                end: n,
            });
        }
    }
    flagged.sort_by_key(|f| (f.marker, f.start));

    let motion = MotionTrace {
        positions,
        rate: motion.rate,
        marker_names: motion.marker_names,
        flagged,
    };
    let trials = build_trial_table(&eeg, &motion, codes, info.task, info.set_index, MIN_REST_SECONDS);
    Ok(SessionData {
        subject_id: info.subject_id,
        task: info.task,
        set_index: info.set_index,
        eeg,
        motion,
        trials,
        attachments: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Marker;
    use ndarray::Array2;

    fn eeg(n: usize, markers: Vec<Marker>) -> RawRecording {
        RawRecording::new(Array2::zeros((1, n)), 500.0, vec!["C1".into()], markers).unwrap()
    }

    fn motion(len: usize) -> MotionTrace {
        MotionTrace {
            positions: Array3::from_shape_fn((1, len, 3), |(_, s, a)| (s * 3 + a) as f64),
            rate: 500.0,
            marker_names: vec!["RHand".into()],
            flagged: vec![],
        }
    }

    fn info() -> SessionInfo {
        SessionInfo {
            subject_id: "s".into(),
            task: MovementCondition::Unilateral,
            set_index: 0,
        }
    }

    #[test]
    fn pure_offset() {
        let codes = EventCodes::default();
        let rec = eeg(5000, vec![Marker::stimulus(1000, "S 16")]);
        let session = synchronize(rec, motion(3000), &codes, info()).unwrap();
        let m = &session.motion;
        assert_eq!(m.samples(), 5000);
        for s in 0..3000 {
            assert_eq!(m.positions[[0, 1000 + s, 1]], (s * 3 + 1) as f64);
        }
        assert!(m.is_flagged(0, 0, 1000));
        assert!(!m.is_flagged(0, 1000, 4000));
        assert!(m.is_flagged(0, 4000, 4001));
        assert!(session.validate().is_ok());
    }

    #[test]
    fn start_code_errors() {
        let codes = EventCodes::default();
        let err = synchronize(eeg(100, vec![]), motion(10), &codes, info()).unwrap_err();
        assert!(matches!(err, IngestError::StartCodeMissing { .. }));
        let rec = eeg(100, vec![Marker::stimulus(5, "S 16"), Marker::stimulus(50, "S16")]);
        match synchronize(rec, motion(10), &codes, info()).unwrap_err() {
            IngestError::StartCodeAmbiguous { positions, .. } => assert_eq!(positions, vec![5, 50]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rate_and_length_checks() {
        let codes = EventCodes::default();
        let mut m = motion(10);
        m.rate = 100.0;
        let rec = eeg(100, vec![Marker::stimulus(5, "S 16")]);
        assert!(matches!(synchronize(rec.clone(), m, &codes, info()), Err(IngestError::SyncMismatch { .. })));
        assert!(matches!(synchronize(rec, motion(200), &codes, info()), Err(IngestError::SyncMismatch { .. })));
        let rec = eeg(100, vec![Marker::stimulus(5, "S 16"), Marker::stimulus(60, "S 17")]);
        assert!(matches!(synchronize(rec, motion(20), &codes, info()), Err(IngestError::SyncMismatch { .. })));
        let rec = eeg(100, vec![Marker::stimulus(5, "S 16"), Marker::stimulus(24, "S 17")]);
        assert!(synchronize(rec, motion(20), &codes, info()).is_ok());
    }
}
