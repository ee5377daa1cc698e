//! Trainable pipeline: xDAWN → tail features → z-score → linear SVM → Platt.

pub mod features;
pub mod grid;
pub mod platt;
pub mod svm;
pub mod xdawn;

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channels::ChannelSet;
use crate::domain::{Label, MovementCondition};
use crate::ingest::{read_container, write_container, Block, Container, IngestError};
use crate::preprocess::{PreparedTrial, LRP_TRAIN_WINDOWS, NOLRP_TRAIN_WINDOWS};

pub use features::{extract_features, FeatureNormalizer, TAIL_SAMPLES};
pub use grid::{c_grid, grid_search, GridResult, Instance, CV_FOLDS};
pub use platt::PlattCalibrator;
pub use svm::{sign_labels, train_svm, ClassWeights, LinearSvmModel, SvmFit, SvmFormulation};
pub use xdawn::{fit_xdawn, SpatialFilterModel, XDAWN_FILTERS, XDAWN_RIDGE};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{stage} did not converge after {iterations} iterations: {detail}")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        detail: String,
    },
    #[error("xDAWN needs at least 2 LRP windows, got {0}")]
    TooFewLrp(usize),
    #[error("channel mismatch: model expects {expected:?}, window has {found:?}")]
    ChannelMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("no valid training trials")]
    NoTrainingData,
    #[error("model file: {0}")]
    Io(#[from] IngestError),
    #[error("malformed model file {path}: {message}")]
    Format { path: String, message: String },
}

/// Knobs of [`fit_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub formulation: SvmFormulation,
    pub class_weights: ClassWeights,
    pub grid: Vec<f64>,
    pub fold_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            formulation: SvmFormulation::default(),
            class_weights: ClassWeights::default(),
            grid: c_grid(),
            fold_seed: 0,
        }
    }
}

/// Provenance of a fitted pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub condition: Option<MovementCondition>,
    pub subject: Option<String>,
    pub train_sets: Vec<usize>,
    pub n_trials: usize,
    pub n_lrp: usize,
    pub n_nolrp: usize,
    pub grid: GridResult,
    pub fold_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub channel_set: ChannelSet,
    pub xdawn: SpatialFilterModel,
    pub normalizer: FeatureNormalizer,
    pub svm: LinearSvmModel,
    pub platt: PlattCalibrator,
    pub meta: TrainingMeta,
}

/// The 2 LRP and 3 NoLRP training windows of every trial, trial by trial.
pub fn training_instances(trials: &[PreparedTrial]) -> Vec<Instance<'_>> {
    let mut out = Vec::with_capacity(trials.len() * 5);
    for (g, t) in trials.iter().enumerate() {
        for &k in &LRP_TRAIN_WINDOWS {
            out.push(Instance {
                window: t.window(k),
                label: Label::Lrp,
                group: g,
            });
        }
        for &k in &NOLRP_TRAIN_WINDOWS {
            out.push(Instance {
                window: t.window(k),
                label: Label::NoLrp,
                group: g,
            });
        }
    }
    out
}

/// Fits every stage on the training windows of `trials`.
///
/// `trials` must already be restricted to `channel_set`, in its order.
pub fn fit_pipeline(trials: &[PreparedTrial], channel_set: &ChannelSet, config: &TrainConfig) -> Result<PipelineModel, ModelError> {
    if trials.is_empty() {
        return Err(ModelError::NoTrainingData);
    }
    let channels = channel_set.channels();
    for t in trials {
        if &*t.channels != channels {
            return Err(ModelError::ChannelMismatch {
                expected: channels.to_vec(),
                found: t.channels.to_vec(),
            });
        }
    }
    let instances = training_instances(trials);
    let grid = grid_search(&instances, channels, &config.grid, config.class_weights, config.formulation, config.fold_seed)?;
    let (front, x) = grid::fit_front(&instances, channels)?;
    let y: Vec<Label> = instances.iter().map(|i| i.label).collect();
    let svm = train_svm(x.view(), &y, grid.best_c, config.class_weights, config.formulation)?.model;
    let platt = PlattCalibrator::fit(&svm.decisions(x.view()), &y)?;

    let mut train_sets: Vec<usize> = trials.iter().map(|t| t.trial.set_index).collect();
    train_sets.sort_unstable();
    train_sets.dedup();
    let first = &trials[0].trial;
    let meta = TrainingMeta {
        condition: trials.iter().all(|t| t.trial.task == first.task).then_some(first.task),
        subject: trials.iter().all(|t| t.trial.subject == first.subject).then(|| first.subject.to_string()),
        train_sets,
        n_trials: trials.len(),
        n_lrp: y.iter().filter(|l| l.is_lrp()).count(),
        n_nolrp: y.iter().filter(|l| !l.is_lrp()).count(),
        grid,
        fold_seed: config.fold_seed,
    };
    Ok(PipelineModel {
        channel_set: channel_set.clone(),
        xdawn: front.xdawn,
        normalizer: front.normalizer,
        svm,
        platt,
        meta,
    })
}

/// Hard decision from a calibrated probability; 0.5 itself is NoLRP.
pub fn label_from_probability(p: f64) -> Label {
    if p > 0.5 {
        Label::Lrp
    } else {
        Label::NoLrp
    }
}

const MODEL_KIND: &str = "model";

impl PipelineModel {
    /// SVM decision score of one preprocessed window.
    pub fn score(&self, window: ArrayView2<'_, f64>) -> Result<f64, ModelError> {
        let pseudo = self.xdawn.apply(window)?;
        let f = extract_features(pseudo.view())?;
        let z = self.normalizer.apply(ndarray::ArrayView1::from(&f));
        Ok(self.svm.decision(z.view()))
    }

    /// Probability and label of one window given in `channels` order.
    pub fn predict(&self, window: ArrayView2<'_, f64>, channels: &[String]) -> Result<(f64, Label), ModelError> {
        if channels != self.channel_set.channels() {
            return Err(ModelError::ChannelMismatch {
                expected: self.channel_set.channels().to_vec(),
                found: channels.to_vec(),
            });
        }
        let p = self.platt.probability(self.score(window)?);
        Ok((p, label_from_probability(p)))
    }

    /// Predictions for every window of a prepared trial.
    pub fn predict_trial(&self, trial: &PreparedTrial) -> Result<Vec<(f64, Label)>, ModelError> {
        (0..trial.n_windows()).map(|k| self.predict(trial.window(k), &trial.channels)).collect()
    }

    pub fn to_container(&self) -> Container {
        let (c, k) = self.xdawn.filters.dim();
        Container {
            kind: MODEL_KIND.into(),
            meta: json!({
                "channel_set": self.channel_set,
                "formulation": self.svm.formulation,
                "class_weights": self.svm.class_weights,
                "degenerate_features": self.normalizer.degenerate,
                "training": self.meta,
            }),
            blocks: vec![
                Block::F64 {
                    name: "xdawn_filters".into(),
                    shape: vec![c, k],
                    data: self.xdawn.filters.iter().copied().collect(),
                },
                Block::F64 {
                    name: "xdawn_eigenvalues".into(),
                    shape: vec![self.xdawn.eigenvalues.len()],
                    data: self.xdawn.eigenvalues.clone(),
                },
                Block::F64 {
                    name: "norm_mean".into(),
                    shape: vec![self.normalizer.mean.len()],
                    data: self.normalizer.mean.clone(),
                },
                Block::F64 {
                    name: "norm_sd".into(),
                    shape: vec![self.normalizer.sd.len()],
                    data: self.normalizer.sd.clone(),
                },
                Block::F64 {
                    name: "svm_weights".into(),
                    shape: vec![self.svm.weights.len()],
                    data: self.svm.weights.clone(),
                },
                Block::F64 {
                    name: "scalars".into(),
                    shape: vec![5],
                    data: vec![self.svm.bias, self.svm.c, self.platt.a, self.platt.b, self.xdawn.ridge],
                },
            ],
        }
    }

    pub fn from_container(c: &Container, path: &str) -> Result<Self, ModelError> {
        let bad = |message: String| ModelError::Format {
            path: path.to_string(),
            message,
        };
        if c.kind != MODEL_KIND {
            return Err(bad(format!("expected kind {MODEL_KIND:?}, found {:?}", c.kind)));
        }
        let f64_block = |name: &str| -> Result<(&[usize], &[f64]), ModelError> {
            match c.block(name) {
                Some(Block::F64 { shape, data, .. }) => Ok((shape, data)),
                _ => Err(bad(format!("missing f64 block {name:?}"))),
            }
        };
        let field = |name: &str| -> Result<serde_json::Value, ModelError> {
            c.meta.get(name).cloned().ok_or_else(|| bad(format!("missing metadata field {name:?}")))
        };
        let channel_set: ChannelSet = serde_json::from_value(field("channel_set")?).map_err(|e| bad(e.to_string()))?;
        let formulation: SvmFormulation = serde_json::from_value(field("formulation")?).map_err(|e| bad(e.to_string()))?;
        let class_weights: ClassWeights = serde_json::from_value(field("class_weights")?).map_err(|e| bad(e.to_string()))?;
        let degenerate: Vec<usize> = serde_json::from_value(field("degenerate_features")?).map_err(|e| bad(e.to_string()))?;
        let meta: TrainingMeta = serde_json::from_value(field("training")?).map_err(|e| bad(e.to_string()))?;

        let (shape, data) = f64_block("xdawn_filters")?;
        if shape.len() != 2 || shape[0] != channel_set.len() {
            return Err(bad(format!("xDAWN filter shape {shape:?} does not match {} channels", channel_set.len())));
        }
        let filters = Array2::from_shape_vec((shape[0], shape[1]), data.to_vec()).map_err(|e| bad(e.to_string()))?;
        let (_, eigenvalues) = f64_block("xdawn_eigenvalues")?;
        let (_, mean) = f64_block("norm_mean")?;
        let (_, sd) = f64_block("norm_sd")?;
        let (_, weights) = f64_block("svm_weights")?;
        let (_, scalars) = f64_block("scalars")?;
        if scalars.len() != 5 || mean.len() != sd.len() || weights.len() != mean.len() {
            return Err(bad("inconsistent block lengths".into()));
        }
        Ok(PipelineModel {
            xdawn: SpatialFilterModel {
                filters,
                channels: channel_set.channels().to_vec(),
                eigenvalues: eigenvalues.to_vec(),
                ridge: scalars[4],
            },
            channel_set,
            normalizer: FeatureNormalizer {
                mean: mean.to_vec(),
                sd: sd.to_vec(),
                degenerate,
            },
            svm: LinearSvmModel {
                weights: weights.to_vec(),
                bias: scalars[0],
                c: scalars[1],
                class_weights,
                formulation,
            },
            platt: PlattCalibrator {
                a: scalars[2],
                b: scalars[3],
            },
            meta,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_container().to_bytes()
    }

    /// Hex SHA-256 of the serialised model.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        Ok(write_container(&self.to_container(), path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let c = read_container(path)?;
        Self::from_container(&c, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_boundary() {
        assert_eq!(label_from_probability(0.51), Label::Lrp);
        assert_eq!(label_from_probability(0.5), Label::NoLrp);
        assert_eq!(label_from_probability(0.12), Label::NoLrp);
    }

    #[test]
    fn class_weights_offset_instance_imbalance() {
        // 80 trials: 160 LRP × 2 vs 240 NoLRP × 1.
        let w = ClassWeights::default();
        let lrp = 160.0 * w.lrp;
        let nolrp = 240.0 * w.no_lrp;
        assert!((lrp - nolrp).abs() / (lrp + nolrp) <= 0.2);
    }
}
