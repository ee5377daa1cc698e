//! Complexity search by trial-grouped cross-validation.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureNormalizer};
use super::svm::{train_svm, ClassWeights, SvmFormulation};
use super::xdawn::fit_xdawn;
use super::ModelError;
use crate::domain::Label;

/// `10⁻⁶, 10⁻⁵, …, 10⁰`.
pub fn c_grid() -> Vec<f64> {
    (-6..=0).map(|e| 10f64.powi(e)).collect()
}

pub const CV_FOLDS: usize = 5;

/// One labelled training window with the trial it came from.
#[derive(Debug, Clone, Copy)]
pub struct Instance<'a> {
    pub window: ArrayView2<'a, f64>,
    pub label: Label,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_c: f64,
    /// `(C, mean fold balanced accuracy)` in grid order.
    pub scores: Vec<(f64, f64)>,
    pub folds: usize,
}

/// Balanced accuracy of hard labels; classes absent from `truth` count as 0.5.
pub(crate) fn fold_balanced_accuracy(pred: &[Label], truth: &[Label]) -> f64 {
    let (mut tp, mut p, mut tn, mut n) = (0usize, 0usize, 0usize, 0usize);
    for (a, t) in pred.iter().zip(truth) {
        if t.is_lrp() {
            p += 1;
            tp += a.is_lrp() as usize;
        } else {
            n += 1;
            tn += (!a.is_lrp()) as usize;
        }
    }
    let rate = |hit: usize, total: usize| if total == 0 { 0.5 } else { hit as f64 / total as f64 };
    (rate(tp, p) + rate(tn, n)) / 2.0
}

/// Spatial filter and normaliser fitted on one set of instances.
pub struct FittedFront {
    pub xdawn: super::SpatialFilterModel,
    pub normalizer: FeatureNormalizer,
}

pub fn raw_features(xdawn: &super::SpatialFilterModel, windows: &[ArrayView2<'_, f64>]) -> Result<Array2<f64>, ModelError> {
    let mut rows = Vec::with_capacity(windows.len());
    for w in windows {
        rows.push(extract_features(xdawn.apply(*w)?.view())?);
    }
    let d = rows.first().map_or(0, Vec::len);
    Ok(Array2::from_shape_vec((rows.len(), d), rows.concat()).expect("rectangular"))
}

pub fn fit_front(instances: &[Instance<'_>], channels: &[String]) -> Result<(FittedFront, Array2<f64>), ModelError> {
    let windows: Vec<_> = instances.iter().map(|i| i.window).collect();
    let labels: Vec<_> = instances.iter().map(|i| i.label).collect();
    let xdawn = fit_xdawn(&windows, &labels, channels)?;
    let raw = raw_features(&xdawn, &windows)?;
    let normalizer = FeatureNormalizer::fit(raw.view())?;
    let x = normalizer.apply_rows(raw.view());
    Ok((FittedFront { xdawn, normalizer }, x))
}

/// Scores every grid value by the mean balanced accuracy over folds.
///
/// Folds partition trials, so every fold keeps the per-trial class ratio.
/// Every stage is refit inside each fold.
pub fn grid_search(
    instances: &[Instance<'_>],
    channels: &[String],
    grid: &[f64],
    weights: ClassWeights,
    formulation: SvmFormulation,
    fold_seed: u64,
) -> Result<GridResult, ModelError> {
    if grid.is_empty() {
        return Err(ModelError::BadParameter("empty complexity grid".into()));
    }
    let mut groups: Vec<usize> = instances.iter().map(|i| i.group).collect();
    groups.sort_unstable();
    groups.dedup();
    let n_pos = instances.iter().filter(|i| i.label.is_lrp()).count();
    let n_neg = instances.len() - n_pos;
    let folds = CV_FOLDS.min(groups.len()).min(n_pos).min(n_neg);
    if folds < 2 {
        return Err(ModelError::BadParameter(format!(
            "cross-validation needs two folds; have {} trials, {n_pos} LRP and {n_neg} NoLRP instances",
            groups.len()
        )));
    }
    if folds < CV_FOLDS {
        log::warn!("grid search uses {folds} folds instead of {CV_FOLDS}");
    }
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(fold_seed));
    let fold_of = |g: usize| groups.iter().position(|&x| x == g).expect("known group") % folds;

    let mut totals = vec![0.0; grid.len()];
    for f in 0..folds {
        let (val, train): (Vec<Instance<'_>>, Vec<Instance<'_>>) = instances.iter().partition(|i| fold_of(i.group) == f);
        let (front, x) = fit_front(&train, channels)?;
        let y: Vec<Label> = train.iter().map(|i| i.label).collect();
        let val_windows: Vec<_> = val.iter().map(|i| i.window).collect();
        let xv = front.normalizer.apply_rows(raw_features(&front.xdawn, &val_windows)?.view());
        let yv: Vec<Label> = val.iter().map(|i| i.label).collect();
        for (ci, &c) in grid.iter().enumerate() {
            let fit = train_svm(x.view(), &y, c, weights, formulation)?;
            let pred: Vec<Label> = fit
                .model
                .decisions(xv.view())
                .into_iter()
                .map(|s| if s > 0.0 { Label::Lrp } else { Label::NoLrp })
                .collect();
            totals[ci] += fold_balanced_accuracy(&pred, &yv);
        }
    }
    let scores: Vec<(f64, f64)> = grid.iter().zip(&totals).map(|(&c, t)| (c, t / folds as f64)).collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let mut best = order[0];
    for &i in &order[1..] {
        if scores[i].1 > scores[best].1 + 1e-12 {
            best = i;
        }
    }
    Ok(GridResult {
        best_c: grid[best],
        scores,
        folds,
    })
}
