//! Class-weighted linear SVMs.
//!
//! The default formulation penalises the weight vector with the L1 norm:
//!
//! ```text
//! min_{w,b}  ‖w‖₁ + C Σᵢ cᵢ max(0, 1 − yᵢ(w·xᵢ + b))
//! ```
//!
//! It is a linear program. Its dual
//!
//! ```text
//! max Σᵢ αᵢ   s.t.  |Σᵢ αᵢ yᵢ xᵢⱼ| ≤ 1 ∀j,  Σᵢ αᵢ yᵢ = 0,  0 ≤ αᵢ ≤ C cᵢ
//! ```
//!
//! has only `2d + 1` rows, so it is solved exactly with a bounded-variable
//! primal simplex; `w` and `b` are the simplex multipliers of its rows.
//!
//! The alternative formulation keeps the hinge loss but regularises with
//! `½‖w‖²` and is solved by dual coordinate descent.

use nalgebra::DMatrix;
use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::domain::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SvmFormulation {
    /// `‖w‖₁` regulariser with hinge loss.
    #[default]
    #[serde(rename = "l1-weights")]
    L1Weights,
    /// `½‖w‖²` regulariser with hinge loss (bias regularised as an extra feature).
    #[serde(rename = "l1-slack")]
    L1Slack,
}

impl SvmFormulation {
    pub fn as_str(self) -> &'static str {
        match self {
            SvmFormulation::L1Weights => "l1-weights",
            SvmFormulation::L1Slack => "l1-slack",
        }
    }
}

impl std::str::FromStr for SvmFormulation {
    type Err = crate::domain::ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "l1-weights" | "l1" => Ok(SvmFormulation::L1Weights),
            "l1-slack" | "l2" => Ok(SvmFormulation::L1Slack),
            other => Err(crate::domain::ParseEnumError(other.to_string())),
        }
    }
}

/// Per-class loss weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub no_lrp: f64,
    pub lrp: f64,
}

impl Default for ClassWeights {
    fn default() -> Self {
        Self { no_lrp: 1.0, lrp: 2.0 }
    }
}

impl ClassWeights {
    pub fn of(&self, label: Label) -> f64 {
        match label {
            Label::Lrp => self.lrp,
            Label::NoLrp => self.no_lrp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub class_weights: ClassWeights,
    pub formulation: SvmFormulation,
}

impl LinearSvmModel {
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn decisions(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.outer_iter().map(|row| self.decision(row)).collect()
    }

    /// Primal objective on `(x, y)`.
    pub fn objective(&self, x: ArrayView2<'_, f64>, y: &[Label]) -> f64 {
        let reg = match self.formulation {
            SvmFormulation::L1Weights => self.weights.iter().map(|w| w.abs()).sum::<f64>(),
            SvmFormulation::L1Slack => {
                0.5 * (self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias)
            }
        };
        let loss: f64 = x
            .outer_iter()
            .zip(y)
            .map(|(row, &l)| self.class_weights.of(l) * (1.0 - l.sign() * self.decision(row)).max(0.0))
            .sum();
        reg + self.c * loss
    }
}

/// A fitted model with its optimality certificate.
#[derive(Debug, Clone)]
pub struct SvmFit {
    pub model: LinearSvmModel,
    /// Dual variables, one per training point, in `[0, C cᵢ]`.
    pub alpha: Vec<f64>,
    pub iterations: usize,
}

pub fn train_svm(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    c: f64,
    weights: ClassWeights,
    formulation: SvmFormulation,
) -> Result<SvmFit, ModelError> {
    if x.nrows() != y.len() {
        return Err(ModelError::Shape {
            expected: format!("{} labels", x.nrows()),
            found: format!("{}", y.len()),
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(ModelError::BadParameter(format!("C must be positive, got {c}")));
    }
    let n_lrp = y.iter().filter(|l| l.is_lrp()).count();
    if n_lrp == 0 || n_lrp == y.len() {
        return Err(ModelError::SingleClass);
    }
    match formulation {
        SvmFormulation::L1Weights => DualSimplex::new(x, y, c, weights).solve(),
        SvmFormulation::L1Slack => dual_coordinate_descent(x, y, c, weights),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic(usize),
    Lower,
    Upper,
}

/// Bounded-variable primal simplex on the dual LP.
///
/// Columns: `n` dual variables α, then `d` slacks for `g ≤ 1`, `d` slacks for
/// `−g ≤ 1`, then one artificial fixed at zero that starts basic in the
/// equality row.
struct DualSimplex<'a> {
    x: ArrayView2<'a, f64>,
    y: Vec<f64>,
    upper: Vec<f64>,
    c: f64,
    weights: ClassWeights,
    n: usize,
    d: usize,
    m: usize,
    status: Vec<Status>,
    basis: Vec<usize>,
    value: Vec<f64>,
    binv: DMatrix<f64>,
}

const PRICE_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;

impl<'a> DualSimplex<'a> {
    fn new(x: ArrayView2<'a, f64>, y: &[Label], c: f64, weights: ClassWeights) -> Self {
        let (n, d) = x.dim();
        let m = 2 * d + 1;
        let total = n + m;
        let mut upper = vec![f64::INFINITY; total];
        for (i, l) in y.iter().enumerate() {
            upper[i] = c * weights.of(*l);
        }
        upper[total - 1] = 0.0;
        let mut status = vec![Status::Lower; total];
        let basis: Vec<usize> = (n..total).collect();
        for (r, &j) in basis.iter().enumerate() {
            status[j] = Status::Basic(r);
        }
        let mut value = vec![0.0; total];
        for j in n..n + 2 * d {
            value[j] = 1.0;
        }
        Self {
            x,
            y: y.iter().map(|l| l.sign()).collect(),
            upper,
            c,
            weights,
            n,
            d,
            m,
            status,
            basis,
            value,
            binv: DMatrix::identity(m, m),
        }
    }

    /// Column `j` of the constraint matrix as a dense vector.
    fn column(&self, j: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.m];
        if j < self.n {
            let yi = self.y[j];
            for k in 0..self.d {
                let v = yi * self.x[[j, k]];
                col[k] = v;
                col[self.d + k] = -v;
            }
            col[2 * self.d] = yi;
        } else {
            col[j - self.n] = 1.0;
        }
        col
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            1.0
        } else {
            0.0
        }
    }

    /// Simplex multipliers `π = c_B B⁻¹`.
    fn multipliers(&self) -> Vec<f64> {
        let mut pi = vec![0.0; self.m];
        for (r, &j) in self.basis.iter().enumerate() {
            let cb = self.cost(j);
            if cb != 0.0 {
                for (k, p) in pi.iter_mut().enumerate() {
                    *p += cb * self.binv[(r, k)];
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, pi: &[f64], w: &[f64]) -> f64 {
        if j < self.n {
            let f: f64 = self.x.row(j).iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + pi[2 * self.d];
            1.0 - self.y[j] * f
        } else {
            -pi[j - self.n]
        }
    }

    /// Recomputes `B⁻¹` and basic values from scratch.
    fn refactor(&mut self) -> Result<(), ModelError> {
        let mut b = DMatrix::zeros(self.m, self.m);
        for (r, &j) in self.basis.iter().enumerate() {
            for (k, v) in self.column(j).into_iter().enumerate() {
                b[(k, r)] = v;
            }
        }
        self.binv = b.try_inverse().ok_or_else(|| ModelError::Numerical("singular simplex basis".into()))?;
        let mut rhs = vec![0.0; self.m];
        for v in rhs.iter_mut().take(2 * self.d) {
            *v = 1.0;
        }
        for j in 0..self.n + self.m {
            if matches!(self.status[j], Status::Basic(_)) || self.value[j] == 0.0 {
                continue;
            }
            for (k, a) in self.column(j).into_iter().enumerate() {
                rhs[k] -= a * self.value[j];
            }
        }
        for r in 0..self.m {
            let v: f64 = (0..self.m).map(|k| self.binv[(r, k)] * rhs[k]).sum();
            self.value[self.basis[r]] = v;
        }
        Ok(())
    }

    fn solve(mut self) -> Result<SvmFit, ModelError> {
        let total = self.n + self.m;
        let max_iter = 200 * total + 1000;
        let mut since_refactor = 0;
        let mut stalled = 0usize;
        let mut best = 0.0f64;
        let mut iterations = 0;
        loop {
            if iterations >= max_iter {
                return Err(ModelError::NonConvergence {
                    stage: "svm",
                    iterations,
                    detail: format!("simplex did not terminate (n={}, d={}, C={})", self.n, self.d, self.c),
                });
            }
            let pi = self.multipliers();
            let w: Vec<f64> = (0..self.d).map(|k| pi[k] - pi[self.d + k]).collect();
            let bland = stalled > 50;

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..total - 1 {
                let dir = match self.status[j] {
                    Status::Basic(_) => continue,
                    Status::Lower => 1.0,
                    Status::Upper => -1.0,
                };
                if self.upper[j] == 0.0 {
                    continue;
                }
                let rc = self.reduced_cost(j, &pi, &w);
                let gain = dir * rc;
                if gain > PRICE_TOL * (1.0 + self.weights.lrp.max(self.weights.no_lrp)) {
                    match entering {
                        None => entering = Some((j, rc)),
                        Some((_, best_rc)) if !bland && gain > best_rc.abs() => entering = Some((j, rc)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((q, rc)) = entering else {
                break;
            };
            let dir = if rc > 0.0 { 1.0 } else { -1.0 };

            // Direction of basic variables per unit step of x_q.
            let col = self.column(q);
            let delta: Vec<f64> = (0..self.m)
                .map(|r| (0..self.m).map(|k| self.binv[(r, k)] * col[k]).sum())
                .collect();

            // Ratio test: x_B(θ) = x_B − θ·dir·Δ.
            let mut theta = self.upper[q];
            let mut leaving: Option<(usize, Status)> = None;
            for r in 0..self.m {
                let rate = dir * delta[r];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[r];
                let (limit, bound) = if rate > 0.0 {
                    ((self.value[j] - 0.0).max(0.0) / rate, Status::Lower)
                } else if self.upper[j].is_finite() {
                    ((self.upper[j] - self.value[j]).max(0.0) / -rate, Status::Upper)
                } else {
                    continue;
                };
                let better = match leaving {
                    None => limit < theta,
                    Some((lr, _)) => {
                        limit < theta - 1e-12
                            || (limit <= theta + 1e-12
                                && if bland {
                                    self.basis[r] < self.basis[lr]
                                } else {
                                    rate.abs() > (dir * delta[lr]).abs()
                                })
                    }
                };
                if better {
                    theta = limit;
                    leaving = Some((r, bound));
                }
            }
            if !theta.is_finite() {
                return Err(ModelError::Numerical("unbounded dual LP".into()));
            }

            for r in 0..self.m {
                let j = self.basis[r];
                self.value[j] -= theta * dir * delta[r];
            }
            self.value[q] += theta * dir;

            match leaving {
                None => {
                    // Bound flip.
                    self.status[q] = if dir > 0.0 { Status::Upper } else { Status::Lower };
                    self.value[q] = if dir > 0.0 { self.upper[q] } else { 0.0 };
                }
                Some((r, bound)) => {
                    let out = self.basis[r];
                    self.status[out] = bound;
                    self.value[out] = if bound == Status::Upper { self.upper[out] } else { 0.0 };
                    self.basis[r] = q;
                    self.status[q] = Status::Basic(r);
                    let piv = delta[r];
                    for k in 0..self.m {
                        self.binv[(r, k)] /= piv;
                    }
                    for i in 0..self.m {
                        if i != r && delta[i] != 0.0 {
                            let f = delta[i];
                            for k in 0..self.m {
                                let v = self.binv[(r, k)];
                                self.binv[(i, k)] -= f * v;
                            }
                        }
                    }
                    since_refactor += 1;
                    if since_refactor >= REFACTOR_EVERY {
                        self.refactor()?;
                        since_refactor = 0;
                    }
                }
            }
            iterations += 1;
            let obj: f64 = self.value[..self.n].iter().sum();
            if obj > best + 1e-12 * (1.0 + best.abs()) {
                best = obj;
                stalled = 0;
            } else {
                stalled += 1;
            }
        }

        self.refactor()?;
        let pi = self.multipliers();
        let weights: Vec<f64> = (0..self.d).map(|k| pi[k] - pi[self.d + k]).collect();
        let alpha: Vec<f64> = (0..self.n).map(|i| self.value[i].clamp(0.0, self.upper[i])).collect();
        Ok(SvmFit {
            model: LinearSvmModel {
                weights,
                bias: pi[2 * self.d],
                c: self.c,
                class_weights: self.weights,
                formulation: SvmFormulation::L1Weights,
            },
            alpha,
            iterations,
        })
    }
}

/// Dual coordinate descent for `½(‖w‖² + b²) + C Σ cᵢ hingeᵢ`.
fn dual_coordinate_descent(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    c: f64,
    weights: ClassWeights,
) -> Result<SvmFit, ModelError> {
    let (n, d) = x.dim();
    let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let upper: Vec<f64> = y.iter().map(|l| c * weights.of(*l)).collect();
    let qii: Vec<f64> = x.outer_iter().map(|r| r.dot(&r) + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let max_epochs = 100_000;
    for epoch in 0..max_epochs {
        let mut max_pg = f64::NEG_INFINITY;
        let mut min_pg = f64::INFINITY;
        for i in 0..n {
            let xi = x.row(i);
            let g = ys[i] * (xi.dot(&w) + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= upper[i] {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg);
            min_pg = min_pg.min(pg);
            if pg.abs() > 1e-14 && qii[i] > 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).clamp(0.0, upper[i]);
                let step = (alpha[i] - old) * ys[i];
                if step != 0.0 {
                    w.scaled_add(step, &xi);
                    b += step;
                }
            }
        }
        if max_pg - min_pg <= 1e-9 {
            return Ok(SvmFit {
                model: LinearSvmModel {
                    weights: w.to_vec(),
                    bias: b,
                    c,
                    class_weights: weights,
                    formulation: SvmFormulation::L1Slack,
                },
                alpha,
                iterations: epoch + 1,
            });
        }
    }
    Err(ModelError::NonConvergence {
        stage: "svm",
        iterations: max_epochs,
        detail: "dual coordinate descent exceeded the epoch cap".into(),
    })
}

/// Labels from decision values: LRP for positive scores.
pub fn sign_labels(scores: &[f64]) -> Vec<Label> {
    scores
        .iter()
        .map(|&s| if s > 0.0 { Label::Lrp } else { Label::NoLrp })
        .collect()
}
