//! Platt scaling: `P(LRP | s) = 1 / (1 + exp(A s + B))`.
//!
//! Newton's method with backtracking on the cross-entropy against the
//! smoothed targets `(N₊ + 1) / (N₊ + 2)` and `1 / (N₋ + 2)`.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::domain::Label;

pub const PLATT_MAX_ITER: usize = 100;
pub const PLATT_GRAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibrator {
    pub a: f64,
    pub b: f64,
}

/// `log(1 + exp(-|z|))`-stable evaluation of the per-sample loss for target `t`.
fn loss(z: f64, t: f64) -> f64 {
    if z >= 0.0 {
        t * z + (-z).exp().ln_1p()
    } else {
        (t - 1.0) * z + z.exp().ln_1p()
    }
}

/// `(p, 1 − p)` with `p = 1 / (1 + exp(z))`, computed without overflow.
fn probs(z: f64) -> (f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = z.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    }
}

impl PlattCalibrator {
    pub fn probability(&self, score: f64) -> f64 {
        probs(self.a * score + self.b).0
    }

    pub fn fit(scores: &[f64], labels: &[Label]) -> Result<Self, ModelError> {
        if scores.len() != labels.len() {
            return Err(ModelError::Shape {
                expected: format!("{} labels", scores.len()),
                found: format!("{}", labels.len()),
            });
        }
        let n_pos = labels.iter().filter(|l| l.is_lrp()).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        if n_pos == 0.0 || n_neg == 0.0 {
            return Err(ModelError::SingleClass);
        }
        let hi = (n_pos + 1.0) / (n_pos + 2.0);
        let lo = 1.0 / (n_neg + 2.0);
        let t: Vec<f64> = labels.iter().map(|l| if l.is_lrp() { hi } else { lo }).collect();
        let objective = |a: f64, b: f64| -> f64 { scores.iter().zip(&t).map(|(s, t)| loss(a * s + b, *t)).sum() };

        let mut a = 0.0;
        let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
        let mut f = objective(a, b);
        for _ in 0..PLATT_MAX_ITER {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
            for (s, ti) in scores.iter().zip(&t) {
                let (p, q) = probs(a * s + b);
                let d2 = p * q;
                h11 += s * s * d2;
                h22 += d2;
                h21 += s * d2;
                let d1 = ti - p;
                g1 += s * d1;
                g2 += d1;
            }
            if g1.hypot(g2) <= PLATT_GRAD_TOL {
                return Ok(Self { a, b });
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            loop {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < f + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    f = nf;
                    break;
                }
                step /= 2.0;
                if step < 1e-10 {
                    // No further decrease is representable: accept if the
                    // gradient is at the rounding floor of the objective.
                    let floor = 1e-12 * (1.0 + f.abs()) * (1.0 + scores.iter().fold(0.0f64, |m, s| m.max(s.abs())));
                    if g1.hypot(g2) <= floor.max(PLATT_GRAD_TOL) * 1e3 {
                        return Ok(Self { a, b });
                    }
                    return Err(ModelError::NonConvergence {
                        stage: "platt",
                        iterations: PLATT_MAX_ITER,
                        detail: format!("line search failed with gradient ({g1:e}, {g2:e})"),
                    });
                }
            }
        }
        Err(ModelError::NonConvergence {
            stage: "platt",
            iterations: PLATT_MAX_ITER,
            detail: format!("A={a}, B={b}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log_loss(p: &[f64], labels: &[Label]) -> f64 {
        p.iter()
            .zip(labels)
            .map(|(p, l)| {
                let p = p.clamp(1e-15, 1.0 - 1e-15);
                if l.is_lrp() { -p.ln() } else { -(1.0 - p).ln() }
            })
            .sum::<f64>()
            / p.len() as f64
    }

    #[test]
    fn symmetric_scores() {
        let scores: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let labels: Vec<Label> = (0..100).map(|i| if i % 2 == 0 { Label::NoLrp } else { Label::Lrp }).collect();
        let p = PlattCalibrator::fit(&scores, &labels).unwrap();
        assert!(p.b.abs() < 1e-9);
        assert!((p.probability(0.0) - 0.5).abs() < 0.02);
        assert!(p.a < 0.0);
    }

    #[test]
    fn calibrated_log_loss_beats_hard_mapping() {
        let scores: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 / 50.0 - 2.0).collect();
        let labels: Vec<Label> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| if *s + ((i * 13) % 7) as f64 / 3.0 - 1.0 > 0.0 { Label::Lrp } else { Label::NoLrp })
            .collect();
        let p = PlattCalibrator::fit(&scores, &labels).unwrap();
        let calibrated: Vec<f64> = scores.iter().map(|&s| p.probability(s)).collect();
        let hard: Vec<f64> = scores.iter().map(|&s| if s > 0.0 { 1.0 } else { 0.0 }).collect();
        assert!(log_loss(&calibrated, &labels) <= log_loss(&hard, &labels));
    }

    #[test]
    fn constant_scores_converge() {
        let scores = vec![0.3; 50];
        let labels: Vec<Label> = (0..50).map(|i| if i < 20 { Label::Lrp } else { Label::NoLrp }).collect();
        let p = PlattCalibrator::fit(&scores, &labels).unwrap();
        let expect = (20.0 + 1.0) / 22.0 * 20.0 / 50.0 + 1.0 / 32.0 * 30.0 / 50.0;
        assert!((p.probability(0.3) - expect).abs() < 1e-6);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(PlattCalibrator::fit(&[1.0, 2.0], &[Label::Lrp, Label::Lrp]), Err(ModelError::SingleClass)));
    }

    proptest! {
        #[test]
        fn probability_is_monotone(a in -10.0f64..-0.01, b in -3.0f64..3.0) {
            let p = PlattCalibrator { a, b };
            let mut prev = 0.0;
            for i in 0..=200 {
                let s = -10.0 + i as f64 * 0.1;
                let v = p.probability(s);
                prop_assert!(v > 0.0 && v < 1.0 || (v == 1.0 && a * s + b < -36.0));
                prop_assert!(v >= prev);
                prev = v;
            }
        }
    }
}
