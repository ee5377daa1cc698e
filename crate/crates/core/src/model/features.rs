//! Time-domain features from pseudo-channels and their z-score normalisation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Samples kept from the end of every pseudo-channel (0.2 s at 20 Hz).
pub const TAIL_SAMPLES: usize = 4;

/// The last [`TAIL_SAMPLES`] samples of each pseudo-channel, channel-major.
pub fn extract_features(pseudo: ArrayView2<'_, f64>) -> Result<Vec<f64>, ModelError> {
    let (k, t) = pseudo.dim();
    if t < TAIL_SAMPLES || k == 0 {
        return Err(ModelError::Shape {
            expected: format!("at least 1 × {TAIL_SAMPLES} pseudo-window"),
            found: format!("{k} × {t}"),
        });
    }
    Ok(pseudo
        .outer_iter()
        .flat_map(|row| row.iter().skip(t - TAIL_SAMPLES).copied().collect::<Vec<_>>())
        .collect())
}

/// Per-feature mean and SD fitted on training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNormalizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Indices of features whose SD was zero and replaced by one.
    pub degenerate: Vec<usize>,
}

impl FeatureNormalizer {
    /// Fits on `rows × features`. Uses the population SD.
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self, ModelError> {
        if x.nrows() < 2 {
            return Err(ModelError::Shape {
                expected: "at least 2 training vectors".into(),
                found: format!("{}", x.nrows()),
            });
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let var = x.var_axis(Axis(0), 0.0);
        let mut degenerate = Vec::new();
        let sd: Vec<f64> = var
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let s = v.sqrt();
                if s > 1e-12 * (1.0 + mean[j].abs()) {
                    s
                } else {
                    degenerate.push(j);
                    1.0
                }
            })
            .collect();
        if !degenerate.is_empty() {
            log::warn!("{} constant feature(s) left unscaled: {:?}", degenerate.len(), degenerate);
        }
        Ok(Self {
            mean: mean.to_vec(),
            sd,
            degenerate,
        })
    }

    pub fn apply(&self, f: ArrayView1<'_, f64>) -> Array1<f64> {
        Array1::from_iter(f.iter().zip(&self.mean).zip(&self.sd).map(|((v, m), s)| (v - m) / s))
    }

    pub fn apply_rows(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.outer_iter_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.sd) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn features_are_channel_major_tails() {
        let pseudo = Array2::from_shape_fn((4, 20), |(c, _)| c as f64 + 1.0);
        let f = extract_features(pseudo.view()).unwrap();
        assert_eq!(f.len(), 16);
        assert_eq!(f, [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 3.0, 4.0, 4.0, 4.0, 4.0]);
        let ramp = Array2::from_shape_fn((2, 20), |(c, t)| (c * 100 + t) as f64);
        assert_eq!(extract_features(ramp.view()).unwrap(), [16.0, 17.0, 18.0, 19.0, 116.0, 117.0, 118.0, 119.0]);
        assert!(extract_features(Array2::<f64>::zeros((4, 3)).view()).is_err());
    }

    #[test]
    fn normalizer_examples() {
        let x = array![[0.0, 5.0], [2.0, 5.0]];
        let n = FeatureNormalizer::fit(x.view()).unwrap();
        assert_eq!(n.mean, [1.0, 5.0]);
        assert_eq!(n.sd, [1.0, 1.0]);
        assert_eq!(n.degenerate, [1]);
        let z = n.apply_rows(x.view());
        assert_eq!(z, array![[-1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(n.apply(x.row(1)), z.row(1));
        assert!(FeatureNormalizer::fit(array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn normalized_training_set_has_unit_variance() {
        let x = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64 * (j + 1) as f64);
        let n = FeatureNormalizer::fit(x.view()).unwrap();
        let z = n.apply_rows(x.view());
        for col in z.axis_iter(Axis(1)) {
            assert!(col.mean().unwrap().abs() < 1e-12);
            assert!((col.var(0.0) - 1.0).abs() < 1e-12);
        }
    }
}
