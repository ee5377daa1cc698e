//! Trial table assembled from the hand-switch and error markers.

use super::sync::code_matches;
use super::{EventCodes, MotionTrace};
use crate::domain::{validate_trial, MovementCondition, RawRecording, Trial};
use crate::onset::reference_hand;

enum Event {
    Press,
    Release,
    Error,
}

/// One trial per hand-switch release.
///
/// The resting period runs from the preceding press to the release; the
/// trial segment runs from that press to the next press (or the end of the
/// recording). A trial is invalid when no press precedes its release, when
/// an error symbol appears within its segment, when the reference hand's
/// motion is flagged during the segment, or when the rest is too short.
pub fn build_trial_table(
    eeg: &RawRecording,
    motion: &MotionTrace,
    codes: &EventCodes,
    task: MovementCondition,
    set_index: usize,
    min_rest: f64,
) -> Vec<Trial> {
    let events: Vec<(usize, Event)> = eeg
        .markers()
        .iter()
        .filter_map(|m| {
            let ev = if code_matches(&m.code, &codes.switch_press) {
                Event::Press
            } else if code_matches(&m.code, &codes.switch_release) {
                Event::Release
            } else if code_matches(&m.code, &codes.error_symbol) {
                Event::Error
            } else {
                return None;
            };
            Some((m.sample, ev))
        })
        .collect();
    let presses: Vec<usize> = events
        .iter()
        .filter(|(_, e)| matches!(e, Event::Press))
        .map(|(s, _)| *s)
        .collect();
    let errors: Vec<usize> = events
        .iter()
        .filter(|(_, e)| matches!(e, Event::Error))
        .map(|(s, _)| *s)
        .collect();
    let hand = motion.marker_index(reference_hand(task));
    let n = eeg.samples().min(motion.samples());

    let mut trials = Vec::new();
    for (release, _) in events.iter().filter(|(_, e)| matches!(e, Event::Release)) {
        let release = *release;
        let press = presses.iter().rev().find(|&&p| p < release).copied();
        let rest_start = press.unwrap_or(0);
        let segment_end = presses
            .iter()
            .find(|&&p| p > release)
            .copied()
            .unwrap_or(n)
            .min(n);
        let mut trial = Trial {
            index: trials.len(),
            condition: task,
            set_index,
            rest_start_sample: rest_start,
            release_sample: release,
            segment_end,
            rest_duration: (release - rest_start) as f64 / eeg.rate(),
            onset_sample: None,
            valid: true,
            reason: None,
        };
        if press.is_none() {
            trial.invalidate("no-press");
        }
        if errors.iter().any(|&e| e >= rest_start && e < segment_end) {
            trial.invalidate("error-symbol");
        }
        match hand {
            None => trial.invalidate("no-hand-marker"),
            Some(h) if motion.is_flagged(h, rest_start, segment_end) => trial.invalidate("motion-gap"),
            Some(_) => {}
        }
        trials.push(validate_trial(trial, min_rest));
    }
    trials
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Marker, MIN_REST_SECONDS};
    use crate::ingest::FlaggedSpan;
    use ndarray::{Array2, Array3};

    fn motion(n: usize, flagged: Vec<FlaggedSpan>) -> MotionTrace {
        MotionTrace {
            positions: Array3::zeros((2, n, 3)),
            rate: 500.0,
            marker_names: vec!["LHand".into(), "RHand".into()],
            flagged,
        }
    }

    fn eeg(n: usize, markers: Vec<Marker>) -> RawRecording {
        RawRecording::new(Array2::zeros((1, n)), 500.0, vec!["C1".into()], markers).unwrap()
    }

    #[test]
    fn table_from_markers() {
        let markers = vec![
            Marker::stimulus(100, "S  1"),
            Marker::stimulus(3600, "S  2"), // 7 s rest
            Marker::stimulus(4000, "S  3"),
            Marker::stimulus(4500, "S  1"),
            Marker::stimulus(6500, "S  2"), // 4 s rest
            Marker::stimulus(7000, "S  1"),
            Marker::stimulus(10000, "S  4"),
            Marker::stimulus(10500, "S  2"),
        ];
        let trials = build_trial_table(
            &eeg(12000, markers),
            &motion(12000, vec![FlaggedSpan { marker: 0, start: 0, end: 12000 }]),
            &EventCodes::default(),
            MovementCondition::Unilateral,
            2,
            MIN_REST_SECONDS,
        );
        assert_eq!(trials.len(), 3);
        assert!(trials[0].valid, "{:?}", trials[0].reason);
        assert_eq!(trials[0].rest_duration, 7.0);
        assert_eq!((trials[0].rest_start_sample, trials[0].segment_end), (100, 4500));
        assert_eq!(trials[1].reason.as_deref(), Some("rest<5s"));
        assert_eq!(trials[2].reason.as_deref(), Some("error-symbol"));
        assert!(trials.iter().all(|t| t.set_index == 2));
    }

    #[test]
    fn flagged_reference_hand_invalidates() {
        let markers = vec![Marker::stimulus(100, "S  1"), Marker::stimulus(3600, "S  2")];
        let flag = vec![FlaggedSpan { marker: 0, start: 2000, end: 2100 }];
        let bi = build_trial_table(
            &eeg(5000, markers.clone()),
            &motion(5000, flag.clone()),
            &EventCodes::default(),
            MovementCondition::Bilateral,
            0,
            MIN_REST_SECONDS,
        );
        assert_eq!(bi[0].reason.as_deref(), Some("motion-gap"));
        let uni = build_trial_table(
            &eeg(5000, markers),
            &motion(5000, flag),
            &EventCodes::default(),
            MovementCondition::Unilateral,
            0,
            MIN_REST_SECONDS,
        );
        assert!(uni[0].valid);
    }
}
