//! Leave-one-set-out evaluation over conditions, channel sets and subjects.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::Confusion;
use super::relabel::{relabel, RelabelScan, N_WINDOWS};
use super::EvalError;
use crate::channels::{ChannelSet, ChannelSetKind};
use crate::domain::{ConditionId, Label, MovementCondition, StudyCondition, TrialRef};
use crate::ingest::SessionData;
use crate::model::{fit_pipeline, PipelineModel, TrainConfig};
use crate::preprocess::{prepare_trial, PreparedTrial, PreprocessParams, WindowGrid};

pub const N_SETS: usize = 3;

/// One train/test split of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub subject: String,
    pub condition: ConditionId,
    pub channel_set: String,
    pub train_sets: Vec<usize>,
    pub test_set: usize,
    pub tpr: f64,
    pub tnr: f64,
    pub ba: f64,
}

/// Preprocessed trials of one subject on a common channel list.
#[derive(Debug, Clone)]
pub struct SubjectTrials {
    pub subject: String,
    pub channels: Arc<[String]>,
    pub trials: Vec<PreparedTrial>,
    /// Valid trials that could not be windowed, with the reason.
    pub skipped: Vec<(TrialRef, String)>,
}

impl SubjectTrials {
    /// Trials of `task` whose set index is in `sets`, restricted to `set`.
    pub fn select(&self, task: MovementCondition, sets: &[usize], set: &ChannelSet) -> Result<Vec<PreparedTrial>, EvalError> {
        let rows = set
            .channels()
            .iter()
            .map(|c| {
                self.channels.iter().position(|x| x == c).ok_or_else(|| EvalError::MissingChannel {
                    subject: self.subject.clone(),
                    channel: c.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let names: Arc<[String]> = set.channels().into();
        Ok(self
            .trials
            .iter()
            .filter(|t| t.trial.task == task && sets.contains(&t.trial.set_index))
            .map(|t| t.select(&rows, names.clone()))
            .collect())
    }

    fn has_set(&self, task: MovementCondition, set: usize) -> bool {
        self.trials.iter().any(|t| t.trial.task == task && t.trial.set_index == set)
    }
}

/// Union of the channels of `sets`, in first-appearance order.
pub fn channel_union<'a>(sets: impl IntoIterator<Item = &'a ChannelSet>) -> ChannelSet {
    let mut names: Vec<&str> = Vec::new();
    for s in sets {
        for c in s.channels() {
            if !names.contains(&c.as_str()) {
                names.push(c);
            }
        }
    }
    ChannelSet::new("union", ChannelSetKind::Custom, &names).expect("union of valid sets is valid")
}

/// Windows every valid, onset-labelled trial of the sessions of one subject.
pub fn prepare_subject(
    subject: &str,
    sessions: &[SessionData],
    channels: &ChannelSet,
    grid: &WindowGrid,
    params: &PreprocessParams,
) -> Result<SubjectTrials, EvalError> {
    let names: Arc<[String]> = channels.channels().into();
    let subject_id: Arc<str> = subject.into();
    let mut trials = Vec::new();
    let mut skipped = Vec::new();
    for s in sessions {
        let rec = s.eeg.select_channels(channels)?;
        for t in s.trials.iter().filter(|t| t.valid) {
            let Some(onset) = t.onset_sample else { continue };
            let r = TrialRef {
                subject: subject_id.clone(),
                task: s.task,
                set_index: s.set_index,
                trial_index: t.index,
            };
            match prepare_trial(&rec, onset, grid, params, r.clone()) {
                Ok(mut p) => {
                    p.channels = names.clone();
                    trials.push(p);
                }
                Err(e) => {
                    log::warn!("{subject} {} set {} trial {}: {e}", s.task, s.set_index, t.index);
                    skipped.push((r, e.to_string()));
                }
            }
        }
    }
    Ok(SubjectTrials {
        subject: subject.to_string(),
        channels: names,
        trials,
        skipped,
    })
}

/// Predicts all windows of every test trial, relabels and pools the counts.
pub fn score_trials(model: &PipelineModel, trials: &[PreparedTrial], scan: RelabelScan) -> Result<Confusion, EvalError> {
    let mut total = Confusion::default();
    for t in trials {
        if t.n_windows() != N_WINDOWS {
            return Err(EvalError::IncompletePredictions {
                expected: N_WINDOWS,
                found: t.n_windows(),
            });
        }
        let pred: Vec<Label> = model.predict_trial(t)?.into_iter().map(|(_, l)| l).collect();
        let truth = relabel(&pred, scan)?;
        total.merge(&Confusion::from_labels(&pred, &truth)?);
    }
    Ok(total)
}

/// Settings shared by every split of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub train: TrainConfig,
    pub relabel: RelabelScan,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            relabel: RelabelScan::default(),
        }
    }
}

/// `(train sets, test set)` for the three leave-one-set-out permutations.
pub fn permutations() -> [(Vec<usize>, usize); N_SETS] {
    [(vec![1, 2], 0), (vec![0, 2], 1), (vec![0, 1], 2)]
}

fn run_split(
    subject: &SubjectTrials,
    condition: StudyCondition,
    set: &ChannelSet,
    train_sets: &[usize],
    test_set: usize,
    cfg: &EvalConfig,
) -> Result<SplitResult, EvalError> {
    for (task, s) in train_sets.iter().map(|&s| (condition.train, s)).chain([(condition.test, test_set)]) {
        if !subject.has_set(task, s) {
            return Err(EvalError::MissingSet {
                subject: subject.subject.clone(),
                task,
                set: s,
            });
        }
    }
    let train = subject.select(condition.train, train_sets, set)?;
    let test = subject.select(condition.test, &[test_set], set)?;
    if train_sets.contains(&test_set)
        || train.iter().any(|t| t.trial.task != condition.train || t.trial.set_index == test_set)
        || test.iter().any(|t| t.trial.task != condition.test || t.trial.set_index != test_set)
    {
        return Err(EvalError::Leakage(format!(
            "{} condition {} test set {test_set}",
            subject.subject, condition.id
        )));
    }
    let model = fit_pipeline(&train, set, &cfg.train)?;
    let m = score_trials(&model, &test, cfg.relabel)?.metrics()?;
    Ok(SplitResult {
        subject: subject.subject.clone(),
        condition: condition.id,
        channel_set: set.name().to_string(),
        train_sets: train_sets.to_vec(),
        test_set,
        tpr: m.tpr,
        tnr: m.tnr,
        ba: m.ba,
    })
}

/// The three leave-one-set-out splits of one subject under one condition.
pub fn run_condition(
    subject: &SubjectTrials,
    condition: StudyCondition,
    set: &ChannelSet,
    cfg: &EvalConfig,
) -> Result<Vec<SplitResult>, EvalError> {
    permutations()
        .iter()
        .map(|(train, test)| run_split(subject, condition, set, train, *test, cfg))
        .collect()
}

/// Every condition × channel set × permutation of one subject, in that
/// order. Splits run in parallel on the current rayon pool.
pub fn run_subject(
    subject: &SubjectTrials,
    conditions: &[ConditionId],
    sets: &[ChannelSet],
    cfg: &EvalConfig,
) -> Result<Vec<SplitResult>, EvalError> {
    let jobs: Vec<(ConditionId, &ChannelSet, (Vec<usize>, usize))> = conditions
        .iter()
        .flat_map(|&c| sets.iter().flat_map(move |s| permutations().into_iter().map(move |p| (c, s, p))))
        .collect();
    jobs.par_iter()
        .map(|(c, s, (train, test))| run_split(subject, StudyCondition::get(*c), s, train, *test, cfg))
        .collect()
}

/// Mean and SD of one condition × channel-set cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub condition: ConditionId,
    pub channel_set: String,
    pub n: usize,
    pub mean_ba: f64,
    pub sd_ba: f64,
    pub mean_tpr: f64,
    pub mean_tnr: f64,
    /// `|mean TPR − mean TNR| > 0.2`.
    pub imbalanced: bool,
}

pub const IMBALANCE_LIMIT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub results: Vec<SplitResult>,
    pub cells: Vec<CellSummary>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample SD (`n − 1`); zero for a single value.
fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl StudyReport {
    /// Sorts by (condition, channel-set order, subject, test set) and aggregates.
    ///
    /// `set_order` fixes the channel-set order; unknown names sort last by name.
    pub fn from_results(mut results: Vec<SplitResult>, set_order: &[String]) -> Self {
        let rank = |name: &str| set_order.iter().position(|s| s == name).unwrap_or(usize::MAX);
        results.sort_by(|a, b| {
            (a.condition, rank(&a.channel_set), &a.channel_set, &a.subject, a.test_set).cmp(&(
                b.condition,
                rank(&b.channel_set),
                &b.channel_set,
                &b.subject,
                b.test_set,
            ))
        });
        let mut cells = Vec::new();
        let mut i = 0;
        while i < results.len() {
            let (c, s) = (results[i].condition, results[i].channel_set.clone());
            let j = i + results[i..].iter().take_while(|r| r.condition == c && r.channel_set == s).count();
            let cell = &results[i..j];
            let ba: Vec<f64> = cell.iter().map(|r| r.ba).collect();
            let tpr = mean(&cell.iter().map(|r| r.tpr).collect::<Vec<_>>());
            let tnr = mean(&cell.iter().map(|r| r.tnr).collect::<Vec<_>>());
            cells.push(CellSummary {
                condition: c,
                channel_set: s,
                n: cell.len(),
                mean_ba: mean(&ba),
                sd_ba: sd(&ba),
                mean_tpr: tpr,
                mean_tnr: tnr,
                imbalanced: (tpr - tnr).abs() > IMBALANCE_LIMIT,
            });
            i = j;
        }
        Self { results, cells }
    }

    pub fn cell(&self, condition: ConditionId, channel_set: &str) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.condition == condition && c.channel_set == channel_set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(subject: &str, c: ConditionId, set: &str, test: usize, ba: f64) -> SplitResult {
        SplitResult {
            subject: subject.into(),
            condition: c,
            channel_set: set.into(),
            train_sets: permutations()[test].0.clone(),
            test_set: test,
            tpr: ba,
            tnr: ba,
            ba,
        }
    }

    #[test]
    fn permutations_are_disjoint() {
        for (train, test) in permutations() {
            assert_eq!(train.len(), 2);
            assert!(!train.contains(&test));
        }
    }

    #[test]
    fn report_order_and_cells() {
        let order = vec!["custom-32".to_string(), "standard-16".to_string()];
        let mut rs = Vec::new();
        for s in ["s2", "s1"] {
            for t in [2, 0, 1] {
                rs.push(result(s, ConditionId::C, "standard-16", t, 0.6));
                rs.push(result(s, ConditionId::A, "custom-32", t, 0.8 + t as f64 * 0.05));
            }
        }
        let r = StudyReport::from_results(rs.clone(), &order);
        assert_eq!(r.cells.len(), 2);
        assert_eq!(r.cells[0].condition, ConditionId::A);
        assert_eq!(r.cells[0].n, 6);
        assert!((r.cells[0].mean_ba - 0.85).abs() < 1e-12);
        assert_eq!(r.results[0].subject, "s1");
        assert_eq!(r.results[0].test_set, 0);
        rs.reverse();
        assert_eq!(StudyReport::from_results(rs, &order), r);
    }

    #[test]
    fn imbalance_flag() {
        let mut a = result("s", ConditionId::B, "custom-4", 0, 0.6);
        a.tpr = 0.9;
        a.tnr = 0.3;
        let r = StudyReport::from_results(vec![a], &[]);
        assert!(r.cells[0].imbalanced);
        assert_eq!(r.cells[0].sd_ba, 0.0);
    }
}
