//! Confusion counts and balanced accuracy (LRP is the positive class).

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::domain::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl Confusion {
    pub fn add(&mut self, predicted: Label, truth: Label) {
        match (truth, predicted) {
            (Label::Lrp, Label::Lrp) => self.tp += 1,
            (Label::Lrp, Label::NoLrp) => self.fn_ += 1,
            (Label::NoLrp, Label::NoLrp) => self.tn += 1,
            (Label::NoLrp, Label::Lrp) => self.fp += 1,
        }
    }

    pub fn from_labels(predicted: &[Label], truth: &[Label]) -> Result<Self, EvalError> {
        if predicted.len() != truth.len() {
            return Err(EvalError::LengthMismatch {
                predicted: predicted.len(),
                truth: truth.len(),
            });
        }
        let mut c = Confusion::default();
        for (p, t) in predicted.iter().zip(truth) {
            c.add(*p, *t);
        }
        Ok(c)
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        self.fp += other.fp;
    }

    pub fn metrics(&self) -> Result<Metrics, EvalError> {
        let pos = self.tp + self.fn_;
        let neg = self.tn + self.fp;
        if pos == 0 {
            return Err(EvalError::UndefinedRate("no LRP windows in ground truth"));
        }
        if neg == 0 {
            return Err(EvalError::UndefinedRate("no NoLRP windows in ground truth"));
        }
        let tpr = self.tp as f64 / pos as f64;
        let tnr = self.tn as f64 / neg as f64;
        Ok(Metrics {
            tpr,
            tnr,
            ba: (tpr + tnr) / 2.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tpr: f64,
    pub tnr: f64,
    pub ba: f64,
}

pub fn balanced_accuracy(predicted: &[Label], truth: &[Label]) -> Result<Metrics, EvalError> {
    Confusion::from_labels(predicted, truth)?.metrics()
}
