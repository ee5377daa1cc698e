//! Seeded synthetic sessions with planted lateralized readiness potentials.
//!
//! A session is one recording set: trials of hand-switch rest, a
//! minimum-jerk reach, a button press and a return to the switch. EEG is
//! spatially correlated white + 1/f noise with a negative ramp added over
//! the motor cortex before each movement onset. Motion and EEG are written
//! on separate clocks and joined through the regular synchronisation path.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{electrode_position, vocabulary};
use crate::domain::{Marker, MovementCondition, RawRecording};
use crate::ingest::{synchronize, EventCodes, IngestError, MotionTrace, SessionData, SessionInfo};
use crate::onset::{LEFT_HAND, RIGHT_HAND};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Background EEG noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Share of the noise variance that is 1/f; the rest is white.
    pub pink_fraction: f64,
    /// Correlation between electrodes one grid step apart.
    pub neighbour_correlation: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            pink_fraction: 0.4,
            neighbour_correlation: 0.5,
        }
    }
}

/// Gaussian scalp weights of the planted LRP, in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Topography {
    /// Centre over the left motor cortex, between C3 and C1.
    pub centre_x: f64,
    pub centre_y: f64,
    pub width: f64,
}

impl Default for Topography {
    fn default() -> Self {
        Self {
            centre_x: -1.25,
            centre_y: 0.0,
            width: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Virtual subject number; part of the random stream selection.
    pub subject: usize,
    pub condition: MovementCondition,
    pub set_index: usize,
    pub sets: usize,
    pub trials_per_set: usize,
    /// LRP peak amplitude over noise SD.
    pub snr: f64,
    /// Seconds between LRP start and movement onset.
    pub lrp_onset_lead: f64,
    /// Peak amplitude in µV (negative).
    pub lrp_peak: f64,
    /// Seconds for the potential to return to zero after onset.
    pub lrp_decay: f64,
    pub noise: NoiseModel,
    pub topography: Topography,
    pub rate: f64,
    pub reach_distance: f64,
    pub reach_duration: f64,
    pub hold_duration: f64,
    /// Seconds from onset to the hand-switch release.
    pub release_delay: f64,
    pub rest_min: f64,
    pub rest_max: f64,
    /// SD of the resting position jitter in mm.
    pub rest_jitter: f64,
    pub onset_threshold: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            subject: 0,
            condition: MovementCondition::Unilateral,
            set_index: 0,
            sets: 3,
            trials_per_set: 40,
            snr: 1.0,
            lrp_onset_lead: 1.2,
            lrp_peak: -5.0,
            lrp_decay: 0.5,
            noise: NoiseModel::default(),
            topography: Topography::default(),
            rate: 500.0,
            reach_distance: 300.0,
            reach_duration: 0.6,
            hold_duration: 0.4,
            release_delay: 0.02,
            rest_min: 5.5,
            rest_max: 8.0,
            rest_jitter: 0.02,
            onset_threshold: 0.6,
        }
    }
}

/// Sample where the motion stream starts on the EEG clock.
pub const MOTION_START_SAMPLE: usize = 250;
/// Seconds of data before the first press and after the last return.
const LEAD_IN: f64 = 1.5;
const TAIL: f64 = 2.0;

pub const MOTION_MARKERS: [&str; 6] = [LEFT_HAND, "LElbow", "LShoulder", RIGHT_HAND, "RElbow", "RShoulder"];

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return bad(format!("snr must be positive, got {}", self.snr));
        }
        if !(self.lrp_onset_lead > 0.0 && self.lrp_onset_lead < 2.0) {
            return bad(format!("lrp_onset_lead must lie in (0, 2) s, got {}", self.lrp_onset_lead));
        }
        if self.trials_per_set == 0 || self.sets == 0 {
            return bad("trials_per_set and sets must be at least 1".into());
        }
        if self.set_index >= self.sets {
            return bad(format!("set_index {} out of range for {} sets", self.set_index, self.sets));
        }
        if !(self.rate > 0.0) || !(self.reach_distance > 0.0) || !(self.reach_duration > 0.0) {
            return bad("rate, reach distance and duration must be positive".into());
        }
        if !(self.rest_min >= 5.0 && self.rest_max >= self.rest_min) {
            return bad(format!("rest range [{}, {}] s must start at 5 s or later", self.rest_min, self.rest_max));
        }
        if !(0.0..=1.0).contains(&self.noise.pink_fraction) || !(0.0..1.0).contains(&self.noise.neighbour_correlation) {
            return bad("pink_fraction must lie in [0, 1] and neighbour_correlation in [0, 1)".into());
        }
        if !(self.topography.width > 0.0) || !(self.onset_threshold > 0.0) || self.lrp_peak == 0.0 {
            return bad("topography width, onset threshold and LRP peak must be non-zero".into());
        }
        Ok(())
    }

    /// Subject identifier used in reports.
    pub fn subject_id(&self) -> String {
        format!("seed{}-sub{:02}", self.seed, self.subject)
    }

    fn stream(&self) -> u64 {
        let task = match self.condition {
            MovementCondition::Unilateral => 0,
            MovementCondition::Bilateral => 1,
        };
        ((self.subject as u64) << 16) | (task << 8) | self.set_index as u64
    }
}

/// `distance · (10τ³ − 15τ⁴ + 6τ⁵)` sampled at `rate` over `[0, duration]`.
pub fn minimum_jerk(distance: f64, duration: f64, rate: f64) -> Vec<f64> {
    let n = (duration * rate).round() as usize;
    (0..=n)
        .map(|i| {
            let tau = (i as f64 / n as f64).min(1.0);
            distance * tau.powi(3) * (10.0 - 15.0 * tau + 6.0 * tau * tau)
        })
        .collect()
}

fn min_jerk_at(distance: f64, tau: f64) -> f64 {
    let tau = tau.clamp(0.0, 1.0);
    distance * tau.powi(3) * (10.0 - 15.0 * tau + 6.0 * tau * tau)
}

/// Time after reach start at which distance × normalised velocity of an
/// ideal minimum-jerk reach first reaches `threshold` mm.
pub fn threshold_crossing(distance: f64, duration: f64, threshold: f64) -> f64 {
    // score(τ) = D s(τ) s'(τ) / max s', max s' = 15/8 at τ = 1/2.
    let score = |tau: f64| {
        let s = tau.powi(3) * (10.0 - 15.0 * tau + 6.0 * tau * tau);
        let ds = 30.0 * tau * tau * (1.0 - tau).powi(2);
        distance * s * ds / 1.875
    };
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if score(mid) < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) * duration
}

/// LRP weight per electrode of the 64-channel cap, in amplifier order.
///
/// Unilateral (right arm): a Gaussian around the left motor cortex, zero on
/// the right hemisphere. Bilateral: that map plus its mirror image.
pub fn topography(condition: MovementCondition, topo: &Topography) -> Vec<f64> {
    let g = |x: f64, y: f64| {
        let d2 = (x - topo.centre_x).powi(2) + (y - topo.centre_y).powi(2);
        (-d2 / (2.0 * topo.width * topo.width)).exp()
    };
    vocabulary()
        .map(|name| {
            let (x, y) = electrode_position(name).expect("vocabulary has positions");
            let left = if x > 0.0 { 0.0 } else { g(x, y) };
            match condition {
                MovementCondition::Unilateral => left,
                MovementCondition::Bilateral => {
                    let right = if x < 0.0 { 0.0 } else { g(-x, y) };
                    left + right
                }
            }
        })
        .collect()
}

/// Truth for one generated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    /// Movement onset per trial on the EEG clock.
    pub onset_samples: Vec<usize>,
    /// First sample of each planted LRP ramp.
    pub lrp_start_samples: Vec<usize>,
    /// Reach start per trial on the EEG clock.
    pub reach_start_samples: Vec<usize>,
    /// Weight of the planted LRP per channel, in channel order.
    pub topography: Vec<f64>,
    pub noise_sd: f64,
}

/// Unit-variance 1/f noise: a six-pole filter bank driven by white noise
/// (accurate to about ±0.05 dB above 0.1 Hz at 500 Hz).
fn pink_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    let warm = 5000;
    let mut out = Vec::with_capacity(n);
    for i in 0..n + warm {
        let w: f64 = rng.sample(StandardNormal);
        b[0] = 0.99886 * b[0] + w * 0.0555179;
        b[1] = 0.99332 * b[1] + w * 0.0750759;
        b[2] = 0.96900 * b[2] + w * 0.1538520;
        b[3] = 0.86650 * b[3] + w * 0.3104856;
        b[4] = 0.55000 * b[4] + w * 0.5329522;
        b[5] = -0.7616 * b[5] - w * 0.0168980;
        let p = b.iter().sum::<f64>() + w * 0.5362;
        b[6] = w * 0.115926;
        if i >= warm {
            out.push(p);
        }
    }
    let mean = out.iter().sum::<f64>() / n as f64;
    let sd = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    out.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    out
}

/// Lower Cholesky factor of the Gaussian electrode-distance kernel.
fn spatial_mixer(correlation: f64) -> Array2<f64> {
    let pos: Vec<(f64, f64)> = vocabulary().map(|n| electrode_position(n).expect("position")).collect();
    let n = pos.len();
    if correlation <= 0.0 {
        return Array2::eye(n);
    }
    // exp(−d² / (2ℓ²)) = correlation at d = 1.
    let two_l2 = -1.0 / correlation.ln();
    let mut jitter = 0.0;
    loop {
        let k = DMatrix::from_fn(n, n, |i, j| {
            let d2 = (pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2);
            (-d2 / two_l2).exp() + if i == j { jitter } else { 0.0 }
        });
        if let Some(ch) = k.cholesky() {
            let l = ch.l();
            let scale = (1.0 + jitter).sqrt();
            return Array2::from_shape_fn((n, n), |(i, j)| l[(i, j)] / scale);
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
    }
}

struct Timeline {
    presses: Vec<usize>,
    releases: Vec<usize>,
    buttons: Vec<usize>,
    reach_starts: Vec<usize>,
    onsets: Vec<usize>,
    samples: usize,
}

fn timeline(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Timeline {
    let r = cfg.rate;
    let reach = (cfg.reach_duration * r).round() as usize;
    let hold = (cfg.hold_duration * r).round() as usize;
    let cross = (threshold_crossing(cfg.reach_distance, cfg.reach_duration, cfg.onset_threshold) * r).floor() as usize;
    let release_delay = (cfg.release_delay * r).round() as usize;
    let mut t = MOTION_START_SAMPLE + (LEAD_IN * r).round() as usize;
    let mut tl = Timeline {
        presses: vec![],
        releases: vec![],
        buttons: vec![],
        reach_starts: vec![],
        onsets: vec![],
        samples: 0,
    };
    for _ in 0..cfg.trials_per_set {
        tl.presses.push(t);
        let rest = rng.random_range(cfg.rest_min..=cfg.rest_max);
        let start = t + (rest * r).round() as usize;
        tl.reach_starts.push(start);
        tl.onsets.push(start + cross);
        tl.releases.push(start + cross + release_delay);
        tl.buttons.push(start + reach);
        t = start + 2 * reach + hold;
    }
    tl.presses.push(t);
    tl.samples = t + (TAIL * r).round() as usize;
    tl
}

/// Raw EEG, raw motion (own clock, starting at the motion-start marker) and truth.
pub fn generate_raw(cfg: &SynthConfig) -> Result<(RawRecording, MotionTrace, GroundTruthRecord), SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream());
    let tl = timeline(cfg, &mut rng);
    let n = tl.samples;
    let names: Vec<String> = vocabulary().map(String::from).collect();
    let n_chan = names.len();

    // Background noise.
    let noise_sd = cfg.lrp_peak.abs() / cfg.snr;
    let (wp, ww) = (cfg.noise.pink_fraction.sqrt(), (1.0 - cfg.noise.pink_fraction).sqrt());
    let mut sources = Array2::<f64>::zeros((n_chan, n));
    for mut row in sources.outer_iter_mut() {
        let pink = pink_noise(&mut rng, n);
        for (v, p) in row.iter_mut().zip(&pink) {
            let w: f64 = rng.sample(StandardNormal);
            *v = wp * p + ww * w;
        }
    }
    let mut eeg = spatial_mixer(cfg.noise.neighbour_correlation).dot(&sources);
    drop(sources);
    eeg.mapv_inplace(|v| v * noise_sd);

    // Planted potentials.
    let weights = topography(cfg.condition, &cfg.topography);
    let lead = (cfg.lrp_onset_lead * cfg.rate).round() as usize;
    let decay = (cfg.lrp_decay * cfg.rate).round() as usize;
    let mut lrp_starts = Vec::with_capacity(tl.onsets.len());
    for &onset in &tl.onsets {
        let start = onset - lead;
        lrp_starts.push(start);
        for t in start..(onset + decay).min(n) {
            let a = if t <= onset {
                cfg.lrp_peak * (t - start) as f64 / lead as f64
            } else {
                cfg.lrp_peak * (1.0 - (t - onset) as f64 / decay.max(1) as f64)
            };
            for (c, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    eeg[[c, t]] += w * a;
                }
            }
        }
    }

    let codes = EventCodes::default();
    let motion_len = n - MOTION_START_SAMPLE;
    let mut markers = vec![
        Marker::stimulus(MOTION_START_SAMPLE, &codes.motion_start),
        Marker::stimulus(n - 1, &codes.motion_stop),
    ];
    markers.extend(tl.presses.iter().map(|&s| Marker::stimulus(s, &codes.switch_press)));
    markers.extend(tl.releases.iter().map(|&s| Marker::stimulus(s, &codes.switch_release)));
    markers.extend(tl.buttons.iter().map(|&s| Marker::stimulus(s, &codes.button_press)));
    let eeg = RawRecording::new(eeg, cfg.rate, names, markers).map_err(IngestError::from)?;

    // Motion on its own clock.
    let rest_pos: [[f64; 3]; 6] = [
        [250.0, 150.0, 0.0],
        [50.0, 200.0, 150.0],
        [-100.0, 200.0, 400.0],
        [250.0, -150.0, 0.0],
        [50.0, -200.0, 150.0],
        [-100.0, -200.0, 400.0],
    ];
    // Fraction of the hand displacement carried by each marker.
    let share = [1.0, 0.5, 0.1, 1.0, 0.5, 0.1];
    let moving = |m: usize| match cfg.condition {
        MovementCondition::Unilateral => m >= 3,
        MovementCondition::Bilateral => true,
    };
    let reach = (cfg.reach_duration * cfg.rate).round() as usize;
    let hold = (cfg.hold_duration * cfg.rate).round() as usize;
    let mut disp = vec![0.0f64; motion_len];
    for &s in &tl.reach_starts {
        for i in 0..=2 * reach + hold {
            let t = s + i;
            if t < MOTION_START_SAMPLE || t - MOTION_START_SAMPLE >= motion_len {
                continue;
            }
            let tau = if i <= reach {
                i as f64 / reach as f64
            } else if i <= reach + hold {
                1.0
            } else {
                1.0 - (i - reach - hold) as f64 / reach as f64
            };
            disp[t - MOTION_START_SAMPLE] = min_jerk_at(cfg.reach_distance, tau);
        }
    }
    let mut positions = Array3::<f64>::zeros((MOTION_MARKERS.len(), motion_len, 3));
    for m in 0..MOTION_MARKERS.len() {
        for t in 0..motion_len {
            let d = if moving(m) { disp[t] * share[m] } else { 0.0 };
            for a in 0..3 {
                let jitter: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.rest_jitter;
                let forward = if a == 0 { d } else { 0.0 };
                positions[[m, t, a]] = rest_pos[m][a] + forward + jitter;
            }
        }
    }
    let motion = MotionTrace {
        positions,
        rate: cfg.rate,
        marker_names: MOTION_MARKERS.iter().map(|s| s.to_string()).collect(),
        flagged: vec![],
    };
    let truth = GroundTruthRecord {
        onset_samples: tl.onsets,
        lrp_start_samples: lrp_starts,
        reach_start_samples: tl.reach_starts,
        topography: weights,
        noise_sd,
    };
    Ok((eeg, motion, truth))
}

/// One synchronised session and its truth.
pub fn generate_session(cfg: &SynthConfig) -> Result<(SessionData, GroundTruthRecord), SynthError> {
    let (eeg, motion, truth) = generate_raw(cfg)?;
    let info = SessionInfo {
        subject_id: cfg.subject_id(),
        task: cfg.condition,
        set_index: cfg.set_index,
    };
    let session = synchronize(eeg, motion, &EventCodes::default(), info)?;
    Ok((session, truth))
}

/// Configs for every task and set of one virtual subject, unilateral first.
pub fn subject_configs(base: &SynthConfig) -> Vec<SynthConfig> {
    [MovementCondition::Unilateral, MovementCondition::Bilateral]
        .into_iter()
        .flat_map(|condition| {
            (0..base.sets).map(move |set_index| SynthConfig {
                condition,
                set_index,
                ..base.clone()
            })
        })
        .collect()
}

/// Generates, onset-labels and windows every session of one virtual
/// subject, keeping only the prepared windows of `channels`.
pub fn prepare_synthetic_subject(
    base: &SynthConfig,
    channels: &crate::channels::ChannelSet,
    grid: &crate::preprocess::WindowGrid,
    params: &crate::preprocess::PreprocessParams,
    onset: &crate::onset::OnsetParams,
) -> crate::Result<crate::eval::SubjectTrials> {
    let mut out: Option<crate::eval::SubjectTrials> = None;
    for cfg in subject_configs(base) {
        let (mut session, _) = generate_session(&cfg)?;
        crate::onset::label_onsets(&mut session, onset);
        let part = crate::eval::prepare_subject(&cfg.subject_id(), std::slice::from_ref(&session), channels, grid, params)?;
        match out.as_mut() {
            None => out = Some(part),
            Some(acc) => {
                acc.trials.extend(part.trials);
                acc.skipped.extend(part.skipped);
            }
        }
    }
    Ok(out.expect("at least one session"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(condition: MovementCondition) -> SynthConfig {
        SynthConfig {
            trials_per_set: 3,
            condition,
            seed: 11,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn minimum_jerk_boundaries() {
        let x = minimum_jerk(300.0, 0.6, 500.0);
        assert_eq!(x.len(), 301);
        assert_eq!(x[0], 0.0);
        assert!((x[300] - 300.0).abs() < 1e-12);
        assert!((x[150] - 150.0).abs() < 1e-12);
        let peak = x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(x[1] - x[0] < 1e-4 * peak && x[300] - x[299] < 1e-4 * peak);
        // Analytic velocity 30τ²(1−τ)² vanishes at both ends.
        for tau in [0.0f64, 1.0] {
            assert!((30.0 * tau * tau * (1.0 - tau).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn crossing_matches_closed_form() {
        // Near τ = 0 the score grows like 48000 τ⁵ for a 300 mm reach, a
        // lower bound on the crossing time.
        let t = threshold_crossing(300.0, 0.6, 0.6);
        let lower = (0.6f64 / 48000.0).powf(0.2) * 0.6;
        assert!(t > lower && t < lower + 0.01, "{t} vs {lower}");
        let tau = t / 0.6;
        let d = 300.0 * (10.0 * tau.powi(3) - 15.0 * tau.powi(4) + 6.0 * tau.powi(5));
        let v = (30.0 * tau.powi(2) - 60.0 * tau.powi(3) + 30.0 * tau.powi(4)) / 1.875;
        assert!((d * v - 0.6).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let a = generate_raw(&small(MovementCondition::Bilateral)).unwrap();
        let b = generate_raw(&small(MovementCondition::Bilateral)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.positions, b.1.positions);
        assert_eq!(a.2, b.2);
        let mut other = small(MovementCondition::Bilateral);
        other.subject = 1;
        assert_ne!(generate_raw(&other).unwrap().0.data(), a.0.data());
    }

    #[test]
    fn unilateral_topography_is_left_only() {
        let w = topography(MovementCondition::Unilateral, &Topography::default());
        let idx = |n: &str| vocabulary().position(|v| v == n).unwrap();
        assert!(w[idx("C2")] <= 0.05 * w[idx("C1")]);
        assert!(w[idx("C1")] > 0.8 && w[idx("C3")] > 0.8);
        for name in vocabulary() {
            if electrode_position(name).unwrap().0 > 0.0 {
                assert_eq!(w[idx(name)], 0.0);
            }
        }
    }

    #[test]
    fn bilateral_topography_is_mirror_symmetric() {
        let w = topography(MovementCondition::Bilateral, &Topography::default());
        let idx = |n: &str| vocabulary().position(|v| v == n).unwrap();
        for name in vocabulary() {
            let m = crate::channels::mirror_name(name).unwrap();
            assert!((w[idx(name)] - w[idx(m)]).abs() <= 1e-12, "{name}/{m}");
        }
    }

    #[test]
    fn sessions_pass_the_shared_validator() {
        for c in [MovementCondition::Unilateral, MovementCondition::Bilateral] {
            let (s, truth) = generate_session(&small(c)).unwrap();
            s.validate().unwrap();
            assert_eq!(s.trials.len(), 3);
            assert!(s.trials.iter().all(|t| t.valid), "{:?}", s.trials);
            for (t, &onset) in s.trials.iter().zip(&truth.onset_samples) {
                assert!(t.rest_duration >= 5.0);
                assert_eq!(t.release_sample, onset + 10);
            }
            for (l, o) in truth.lrp_start_samples.iter().zip(&truth.onset_samples) {
                assert!(l < o);
            }
        }
    }

    #[test]
    fn planted_signal_spares_the_right_hemisphere() {
        let mut cfg = small(MovementCondition::Unilateral);
        cfg.snr = 1e9;
        let (rec, _, _) = generate_raw(&cfg).unwrap();
        let rms = |name: &str| {
            let row = rec.data().row(rec.channel_index(name).unwrap());
            (row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64).sqrt()
        };
        assert!(rms("C2") <= 0.05 * rms("C1"));
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            SynthConfig { snr: 0.0, ..SynthConfig::default() },
            SynthConfig { lrp_onset_lead: 2.0, ..SynthConfig::default() },
            SynthConfig { trials_per_set: 0, ..SynthConfig::default() },
        ] {
            assert!(matches!(generate_raw(&cfg), Err(SynthError::Config(_))));
        }
    }
}
