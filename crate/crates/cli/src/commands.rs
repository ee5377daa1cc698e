//! One function per subcommand. Each returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lrp_transfer::domain::StudyCondition;
use lrp_transfer::eval::{csv_bytes, prepare_subject, score_trials, EvalError, RelabelScan, SplitResult};
use lrp_transfer::ingest::{
    cache_dataset, read_brainvision, read_motion_csv, synchronize, write_brainvision, write_motion_csv, Attachment, EventCodes,
    SessionInfo,
};
use lrp_transfer::model::TrainConfig;
use lrp_transfer::onset::OnsetParams;
use lrp_transfer::preprocess::{PreprocessParams, WindowGrid};
use lrp_transfer::synth::{generate_raw, generate_session, subject_configs, SynthConfig};
use lrp_transfer::{MovementCondition, PipelineModel};
use serde::{Deserialize, Serialize};

use crate::config::{registry, SESSION_EXT};
use crate::output::{sidecar, write_file, write_manifest};
use crate::study::load_subjects;
use crate::AtPath;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestArgs {
    pub eeg: PathBuf,
    pub motion: PathBuf,
    pub subject: String,
    pub task: MovementCondition,
    pub set: usize,
    pub motion_rate: Option<f64>,
    pub codes: EventCodes,
    pub attachments: Vec<PathBuf>,
    pub out: PathBuf,
}

/// BrainVision triplet + motion CSV → one session cache.
pub fn ingest(args: &IngestArgs) -> anyhow::Result<Vec<PathBuf>> {
    let eeg = read_brainvision(&args.eeg).with_context(|| AtPath(args.eeg.clone()))?;
    let motion = read_motion_csv(&args.motion, args.motion_rate).with_context(|| AtPath(args.motion.clone()))?;
    let info = SessionInfo {
        subject_id: args.subject.clone(),
        task: args.task,
        set_index: args.set,
    };
    let mut session = synchronize(eeg, motion, &args.codes, info)?;
    for p in &args.attachments {
        session.attachments.push(Attachment {
            name: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            bytes: fs::read(p).with_context(|| AtPath(p.clone()))?,
        });
    }
    cache_dataset(&session, &args.out).with_context(|| AtPath(args.out.clone()))?;
    let valid = session.trials.iter().filter(|t| t.valid).count();
    log::info!("{}: {} trials, {valid} valid", args.out.display(), session.trials.len());
    write_manifest(&sidecar(&args.out), "ingest", args, std::slice::from_ref(&args.out))?;
    Ok(vec![args.out.clone()])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnsetsArgs {
    pub caches: Vec<PathBuf>,
    pub params: OnsetParams,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct OnsetRow<'a> {
    subject: &'a str,
    task: MovementCondition,
    set: usize,
    trial: usize,
    valid: bool,
    reason: &'a str,
    release_sample: usize,
    onset_sample: Option<usize>,
    /// Onset relative to the hand-switch release, in milliseconds.
    onset_to_release_ms: Option<f64>,
}

/// Labels onsets of every trial and writes them as CSV.
pub fn onsets(args: &OnsetsArgs) -> anyhow::Result<Vec<PathBuf>> {
    let subjects = load_subjects(&args.caches, &args.params)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for sessions in subjects.values() {
        for s in sessions {
            let rate = s.eeg.rate();
            for t in &s.trials {
                w.serialize(OnsetRow {
                    subject: &s.subject_id,
                    task: s.task,
                    set: s.set_index,
                    trial: t.index,
                    valid: t.valid,
                    reason: t.reason.as_deref().unwrap_or(""),
                    release_sample: t.release_sample,
                    onset_sample: t.onset_sample,
                    onset_to_release_ms: t.onset_sample.map(|o| (t.release_sample as f64 - o as f64) / rate * 1e3),
                })?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    write_file(&args.out, &bytes)?;
    write_manifest(&sidecar(&args.out), "onsets", args, std::slice::from_ref(&args.out))?;
    Ok(vec![args.out.clone()])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainArgs {
    pub caches: Vec<PathBuf>,
    pub condition: MovementCondition,
    pub channel_set: String,
    pub channels_file: Option<PathBuf>,
    /// Set indices to train on; empty uses every set of `condition`.
    pub sets: Vec<usize>,
    pub train: TrainConfig,
    pub onset: OnsetParams,
    pub out: PathBuf,
}

/// Fits one pipeline on the `condition` sessions of the given caches.
pub fn train(args: &TrainArgs) -> anyhow::Result<Vec<PathBuf>> {
    let set = registry(args.channels_file.as_deref())?.get(&args.channel_set)?.clone();
    let mut trials = Vec::new();
    for (id, sessions) in load_subjects(&args.caches, &args.onset)? {
        let chosen: Vec<_> = sessions
            .into_iter()
            .filter(|s| s.task == args.condition && (args.sets.is_empty() || args.sets.contains(&s.set_index)))
            .collect();
        if chosen.is_empty() {
            continue;
        }
        let subject = prepare_subject(&id, &chosen, &set, &WindowGrid::default(), &PreprocessParams::default())?;
        trials.extend(subject.trials);
    }
    if trials.is_empty() {
        bail!("no valid {} trials in the given caches", args.condition);
    }
    let model = lrp_transfer::model::fit_pipeline(&trials, &set, &args.train)?;
    log::info!(
        "trained on {} trials; C = {:e}, model {}",
        model.meta.n_trials,
        model.meta.grid.best_c,
        model.hash()
    );
    model.save(&args.out).with_context(|| AtPath(args.out.clone()))?;
    write_manifest(&sidecar(&args.out), "train", args, std::slice::from_ref(&args.out))?;
    Ok(vec![args.out.clone()])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateArgs {
    pub model: PathBuf,
    pub caches: Vec<PathBuf>,
    pub test_condition: MovementCondition,
    pub sets: Vec<usize>,
    pub relabel: RelabelScan,
    pub onset: OnsetParams,
    pub out: PathBuf,
}

/// Scores a saved model on held-out sessions; one row per subject and set.
pub fn evaluate(args: &EvaluateArgs) -> anyhow::Result<Vec<PathBuf>> {
    let model = PipelineModel::load(&args.model).with_context(|| AtPath(args.model.clone()))?;
    let Some(train_task) = model.meta.condition else {
        bail!("model {} was trained on mixed tasks", args.model.display());
    };
    let Some(condition) = StudyCondition::table()
        .into_iter()
        .find(|c| c.train == train_task && c.test == args.test_condition)
    else {
        bail!("training on {train_task} and testing on {} is not a study condition", args.test_condition);
    };
    let set = &model.channel_set;
    let mut results = Vec::new();
    for (id, sessions) in load_subjects(&args.caches, &args.onset)? {
        let chosen: Vec<_> = sessions
            .into_iter()
            .filter(|s| s.task == args.test_condition && (args.sets.is_empty() || args.sets.contains(&s.set_index)))
            .collect();
        let mut indices: Vec<usize> = chosen.iter().map(|s| s.set_index).collect();
        indices.sort_unstable();
        indices.dedup();
        for k in indices {
            if model.meta.subject.as_deref() == Some(id.as_str()) && train_task == args.test_condition && model.meta.train_sets.contains(&k) {
                return Err(EvalError::Leakage(format!("{id} {} set {k} was used for training", args.test_condition)).into());
            }
            let sessions: Vec<_> = chosen.iter().filter(|s| s.set_index == k).cloned().collect();
            let subject = prepare_subject(&id, &sessions, set, &WindowGrid::default(), &PreprocessParams::default())?;
            let m = score_trials(&model, &subject.trials, args.relabel)?.metrics()?;
            results.push(SplitResult {
                subject: id.clone(),
                condition: condition.id,
                channel_set: set.name().to_string(),
                train_sets: model.meta.train_sets.clone(),
                test_set: k,
                tpr: m.tpr,
                tnr: m.tnr,
                ba: m.ba,
            });
        }
    }
    if results.is_empty() {
        bail!("no {} sessions to evaluate", args.test_condition);
    }
    write_file(&args.out, &csv_bytes(&results))?;
    write_manifest(&sidecar(&args.out), "evaluate", args, std::slice::from_ref(&args.out))?;
    Ok(vec![args.out.clone()])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthArgs {
    pub seed: u64,
    pub subjects: usize,
    pub generator: SynthConfig,
    /// Also write BrainVision triplets and motion CSVs.
    pub brainvision: bool,
    pub out: PathBuf,
}

/// Writes every set of every virtual subject as a session cache, with its
/// ground truth as JSON.
pub fn synth(args: &SynthArgs) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(&args.out).with_context(|| AtPath(args.out.clone()))?;
    let mut outputs = Vec::new();
    for k in 0..args.subjects {
        let base = SynthConfig {
            seed: args.seed,
            subject: k,
            ..args.generator.clone()
        };
        for cfg in subject_configs(&base) {
            let stem = format!("{}_{}_set{}", cfg.subject_id(), cfg.condition, cfg.set_index);
            let (session, truth) = generate_session(&cfg)?;
            let cache = args.out.join(format!("{stem}.{SESSION_EXT}"));
            cache_dataset(&session, &cache).with_context(|| AtPath(cache.clone()))?;
            let truth_path = args.out.join(format!("{stem}.truth.json"));
            write_file(&truth_path, &serde_json::to_vec_pretty(&truth)?)?;
            outputs.extend([cache, truth_path]);
            if args.brainvision {
                let (eeg, motion, _) = generate_raw(&cfg)?;
                let vhdr = args.out.join(format!("{stem}.vhdr"));
                outputs.extend(write_brainvision(&eeg, &vhdr).with_context(|| AtPath(vhdr.clone()))?);
                let csv = args.out.join(format!("{stem}.motion.csv"));
                write_motion_csv(&motion, &csv).with_context(|| AtPath(csv.clone()))?;
                outputs.push(csv);
            }
        }
    }
    write_manifest(&args.out.join("manifest.json"), "synth", args, &outputs)?;
    Ok(outputs)
}

/// Reads a TOML file into `T`, or the default when `path` is `None`.
pub fn read_toml<T: Default + for<'de> Deserialize<'de>>(path: Option<&Path>) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| AtPath(p.to_path_buf()))?;
            toml::from_str(&text).with_context(|| AtPath(p.to_path_buf()))
        }
    }
}
