//! xDAWN spatial filters for windowed data.
//!
//! The evoked response is the mean of the LRP-class windows. Filters solve
//! `Σ_s v = λ Σ_x v` where `Σ_s` is the covariance of the evoked response and
//! `Σ_x` the mean covariance of all training windows.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};

use super::ModelError;
use crate::domain::Label;

/// Ridge added to both covariances, relative to `trace / N`.
pub const XDAWN_RIDGE: f64 = 1e-6;
pub const XDAWN_FILTERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFilterModel {
    /// `channels × filters`; column `f` is filter `f`.
    pub filters: Array2<f64>,
    pub channels: Vec<String>,
    /// Generalised eigenvalues of the retained filters, descending.
    pub eigenvalues: Vec<f64>,
    /// Ridge factor that made the covariances positive definite.
    pub ridge: f64,
}

impl SpatialFilterModel {
    pub fn n_filters(&self) -> usize {
        self.filters.ncols()
    }

    /// Pseudo-channels `filtersᵀ · window` (`filters × samples`).
    pub fn apply(&self, window: ArrayView2<'_, f64>) -> Result<Array2<f64>, ModelError> {
        if window.nrows() != self.filters.nrows() {
            return Err(ModelError::Shape {
                expected: format!("{} channels", self.filters.nrows()),
                found: format!("{} channels", window.nrows()),
            });
        }
        Ok(self.filters.t().dot(&window))
    }

    /// Like [`apply`](Self::apply) but also checks the channel order.
    pub fn apply_named(&self, window: ArrayView2<'_, f64>, channels: &[String]) -> Result<Array2<f64>, ModelError> {
        if channels != self.channels.as_slice() {
            return Err(ModelError::ChannelMismatch {
                expected: self.channels.clone(),
                found: channels.to_vec(),
            });
        }
        self.apply(window)
    }
}

fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn add_ridge(m: &DMatrix<f64>, factor: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let lambda = factor * m.trace() / n as f64;
    let mut out = m.clone();
    for i in 0..n {
        out[(i, i)] += if lambda > 0.0 { lambda } else { factor };
    }
    out
}

/// Fits up to four filters from labelled `channels × samples` windows.
pub fn fit_xdawn(windows: &[ArrayView2<'_, f64>], labels: &[Label], channels: &[String]) -> Result<SpatialFilterModel, ModelError> {
    if windows.len() != labels.len() || windows.is_empty() {
        return Err(ModelError::Shape {
            expected: format!("{} labels", windows.len()),
            found: format!("{}", labels.len()),
        });
    }
    let (c, t) = windows[0].dim();
    if channels.len() != c || windows.iter().any(|w| w.dim() != (c, t)) {
        return Err(ModelError::Shape {
            expected: format!("{c}×{t} windows with {c} channel names"),
            found: "inconsistent windows".into(),
        });
    }
    let n_lrp = labels.iter().filter(|l| l.is_lrp()).count();
    if n_lrp < 2 {
        return Err(ModelError::TooFewLrp(n_lrp));
    }

    let mut evoked = Array2::<f64>::zeros((c, t));
    let mut sigma_x = Array2::<f64>::zeros((c, c));
    for (w, l) in windows.iter().zip(labels) {
        if l.is_lrp() {
            evoked += w;
        }
        sigma_x += &w.dot(&w.t());
    }
    evoked /= n_lrp as f64;
    sigma_x /= (windows.len() * t) as f64;
    let sigma_s = evoked.dot(&evoked.t()) / t as f64;
    let (sigma_s, sigma_x) = (to_dmatrix(&sigma_s), to_dmatrix(&sigma_x));

    let mut ridge = XDAWN_RIDGE;
    let chol = loop {
        if let Some(ch) = Cholesky::new(add_ridge(&sigma_x, ridge)) {
            break ch;
        }
        ridge *= 10.0;
        if ridge > 1e-2 {
            return Err(ModelError::Numerical("signal covariance is singular even with ridge".into()));
        }
    };
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(c, c))
        .ok_or_else(|| ModelError::Numerical("whitening failed".into()))?;
    let s = add_ridge(&sigma_s, ridge);
    let mut whitened = &l_inv * s * l_inv.transpose();
    whitened = (&whitened + whitened.transpose()) * 0.5;
    let eig = SymmetricEigen::new(whitened);

    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let k = XDAWN_FILTERS.min(c);
    let back = l_inv.transpose();
    let mut filters = Array2::<f64>::zeros((c, k));
    let mut eigenvalues = Vec::with_capacity(k);
    for (f, &idx) in order.iter().take(k).enumerate() {
        let v = &back * eig.eigenvectors.column(idx);
        // Sign convention: largest-magnitude coefficient positive.
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for ch in 0..c {
            filters[[ch, f]] = sign * v[ch];
        }
        eigenvalues.push(eig.eigenvalues[idx]);
    }
    Ok(SpatialFilterModel {
        filters,
        channels: channels.to_vec(),
        eigenvalues,
        ridge,
    })
}
