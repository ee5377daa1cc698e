//! Onset-aligned sliding windows and their preprocessing chain:
//! channel-wise standardisation, decimation to 20 Hz and FFT band-pass.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{RawRecording, TrialRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("insufficient history: onset at sample {onset} needs {needed} samples before it")]
    InsufficientHistory { onset: usize, needed: usize },
    #[error("onset at sample {onset} lies beyond the recording ({samples} samples)")]
    OnsetBeyondEnd { onset: usize, samples: usize },
    #[error("flat channel `{channel}`: zero variance within window {window}")]
    FlatChannel { channel: String, window: usize },
    #[error("cannot decimate from {from} Hz to {to} Hz with {samples} samples: factor must be an integer dividing the window")]
    NonIntegerFactor { from: f64, to: f64, samples: usize },
    #[error("window grid does not fall on whole samples at {rate} Hz")]
    OffGrid { rate: f64 },
    #[error("expected {expected}, found {found}")]
    Shape { expected: String, found: String },
}

/// Window timing relative to movement onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    /// Start of window 0 in seconds (negative: before onset).
    pub first_start: f64,
    pub length: f64,
    pub step: f64,
    pub count: usize,
}

impl Default for WindowGrid {
    fn default() -> Self {
        Self {
            first_start: -5.0,
            length: 1.0,
            step: 0.05,
            count: 81,
        }
    }
}

/// Windows `[-1.10, -0.10]` and `[-1.00, 0.00]` s.
pub const LRP_TRAIN_WINDOWS: [usize; 2] = [78, 80];
/// Windows `[-3.05, -2.05]`, `[-3.25, -2.25]` and `[-3.50, -2.50]` s.
pub const NOLRP_TRAIN_WINDOWS: [usize; 3] = [39, 35, 30];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowRole {
    TrainLrp,
    TrainNoLrp,
    Test,
    Ignored,
}

impl WindowGrid {
    pub fn start_offset(&self, k: usize) -> f64 {
        self.first_start + self.step * k as f64
    }

    pub fn end_offset(&self, k: usize) -> f64 {
        self.start_offset(k) + self.length
    }

    /// Index of the window starting at `offset` seconds, if it is on the grid.
    pub fn index_of(&self, offset: f64) -> Option<usize> {
        let k = ((offset - self.first_start) / self.step).round();
        (k >= 0.0 && (k as usize) < self.count && (self.start_offset(k as usize) - offset).abs() < 1e-9)
            .then_some(k as usize)
    }

    /// `(length, step, lead)` in samples, where `lead` is how far window 0 starts before onset.
    pub fn in_samples(&self, rate: f64) -> Result<(usize, usize, usize), PreprocessError> {
        let conv = |sec: f64| {
            let v = sec * rate;
            (v >= 0.0 && (v - v.round()).abs() < 1e-6).then_some(v.round() as usize)
        };
        match (conv(self.length), conv(self.step), conv(-self.first_start)) {
            (Some(len), Some(step), Some(lead)) if len > 0 => Ok((len, step, lead)),
            _ => Err(PreprocessError::OffGrid { rate }),
        }
    }

    /// Sample range `[start, end)` of window `k`.
    pub fn sample_range(&self, onset: usize, rate: f64, k: usize) -> Result<(usize, usize), PreprocessError> {
        let (len, step, lead) = self.in_samples(rate)?;
        let start = (onset + step * k)
            .checked_sub(lead)
            .ok_or(PreprocessError::InsufficientHistory { onset, needed: lead })?;
        Ok((start, start + len))
    }

    pub fn role(&self, k: usize) -> WindowRole {
        if LRP_TRAIN_WINDOWS.contains(&k) {
            WindowRole::TrainLrp
        } else if NOLRP_TRAIN_WINDOWS.contains(&k) {
            WindowRole::TrainNoLrp
        } else if k < self.count {
            WindowRole::Test
        } else {
            WindowRole::Ignored
        }
    }

    fn check_bounds(&self, onset: usize, samples: usize, rate: f64) -> Result<(), PreprocessError> {
        let (len, step, lead) = self.in_samples(rate)?;
        if onset < lead {
            return Err(PreprocessError::InsufficientHistory { onset, needed: lead });
        }
        let last_end = onset - lead + step * (self.count - 1) + len;
        if last_end > samples {
            return Err(PreprocessError::OnsetBeyondEnd { onset, samples });
        }
        Ok(())
    }
}

/// Decimation target and pass band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessParams {
    pub target_rate: f64,
    pub band_low: f64,
    pub band_high: f64,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            target_rate: 20.0,
            band_low: 0.1,
            band_high: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub index: usize,
    pub start_offset: f64,
    pub end_offset: f64,
    /// `channels × samples`.
    pub data: Array2<f64>,
    pub rate: f64,
}

/// The windows of one trial in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub trial: Option<TrialRef>,
    pub channels: Vec<String>,
    pub windows: Vec<Window>,
}

/// Cuts the raw windows around `onset` (one per grid position).
pub fn extract_windows(rec: &RawRecording, onset: usize, grid: &WindowGrid) -> Result<WindowSet, PreprocessError> {
    grid.check_bounds(onset, rec.samples(), rec.rate())?;
    let windows = (0..grid.count)
        .map(|k| {
            let (a, b) = grid.sample_range(onset, rec.rate(), k)?;
            Ok(Window {
                index: k,
                start_offset: grid.start_offset(k),
                end_offset: grid.end_offset(k),
                data: rec.data().slice(s![.., a..b]).to_owned(),
                rate: rec.rate(),
            })
        })
        .collect::<Result<_, PreprocessError>>()?;
    Ok(WindowSet {
        trial: None,
        channels: rec.channel_names().to_vec(),
        windows,
    })
}

fn mean_sd(x: impl Iterator<Item = f64> + Clone) -> (f64, f64, f64) {
    let n = x.clone().count() as f64;
    let mean = x.clone().sum::<f64>() / n;
    let var = x.clone().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = x.fold(0.0f64, |m, v| m.max(v.abs()));
    (mean, var.sqrt(), scale)
}

fn is_flat(sd: f64, scale: f64) -> bool {
    !(sd > 1e-12 * scale) || scale == 0.0
}

/// Per channel: subtract the window mean and divide by the population SD.
pub fn standardize(data: ArrayView2<'_, f64>, channels: &[String], window: usize) -> Result<Array2<f64>, PreprocessError> {
    let mut out = data.to_owned();
    for (c, mut row) in out.outer_iter_mut().enumerate() {
        let (mean, sd, scale) = mean_sd(row.iter().copied());
        if is_flat(sd, scale) {
            return Err(PreprocessError::FlatChannel {
                channel: channels.get(c).cloned().unwrap_or_else(|| format!("#{c}")),
                window,
            });
        }
        row.mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(out)
}

fn dft_rows(data: ArrayView2<'_, f64>) -> Vec<Vec<Complex64>> {
    let n = data.ncols();
    let fft = FftPlanner::new().plan_fft_forward(n);
    data.outer_iter()
        .map(|row| {
            let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.process(&mut buf);
            buf
        })
        .collect()
}

fn idft_rows(spectra: Vec<Vec<Complex64>>, scale: f64) -> Array2<f64> {
    let rows = spectra.len();
    let n = spectra.first().map_or(0, Vec::len);
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let mut out = Array2::zeros((rows, n));
    for (r, mut buf) in spectra.into_iter().enumerate() {
        ifft.process(&mut buf);
        for (t, v) in buf.iter().enumerate() {
            out[[r, t]] = v.re * scale;
        }
    }
    out
}

/// Frequency-domain resampling: keep the DFT bins strictly below the new
/// Nyquist frequency and inverse-transform at the output length.
pub fn decimate(data: ArrayView2<'_, f64>, from: f64, to: f64) -> Result<Array2<f64>, PreprocessError> {
    let n = data.ncols();
    let factor = from / to;
    let err = PreprocessError::NonIntegerFactor { from, to, samples: n };
    if !(factor >= 1.0) || (factor - factor.round()).abs() > 1e-9 {
        return Err(err);
    }
    let factor = factor.round() as usize;
    if n == 0 || n % factor != 0 {
        return Err(err);
    }
    let m = n / factor;
    let spectra = dft_rows(data)
        .into_iter()
        .map(|x| {
            let mut y = vec![Complex64::new(0.0, 0.0); m];
            for k in 0..m {
                let signed = if k <= m / 2 { k as isize } else { k as isize - m as isize };
                if 2 * signed.unsigned_abs() < m {
                    y[k] = x[signed.rem_euclid(n as isize) as usize];
                }
            }
            y
        })
        .collect();
    Ok(idft_rows(spectra, 1.0 / n as f64))
}

/// Zeroes every DFT bin whose frequency magnitude lies outside `[low, high]` Hz.
pub fn fft_bandpass(data: ArrayView2<'_, f64>, rate: f64, low: f64, high: f64) -> Array2<f64> {
    let n = data.ncols();
    if n == 0 {
        return data.to_owned();
    }
    let df = rate / n as f64;
    let spectra = dft_rows(data)
        .into_iter()
        .map(|mut x| {
            for (k, v) in x.iter_mut().enumerate() {
                let f = k.min(n - k) as f64 * df;
                if f < low || f > high {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            x
        })
        .collect();
    idft_rows(spectra, 1.0 / n as f64)
}

/// Standardise → decimate → band-pass, in that order.
pub fn preprocess_window(
    window: &Window,
    channels: &[String],
    params: &PreprocessParams,
) -> Result<Window, PreprocessError> {
    let z = standardize(window.data.view(), channels, window.index)?;
    let d = decimate(z.view(), window.rate, params.target_rate)?;
    let data = fft_bandpass(d.view(), params.target_rate, params.band_low, params.band_high);
    Ok(Window {
        data,
        rate: params.target_rate,
        ..window.clone()
    })
}

/// All windows of one trial after preprocessing: `windows × channels × samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTrial {
    pub trial: TrialRef,
    pub channels: Arc<[String]>,
    pub data: Array3<f64>,
}

impl PreparedTrial {
    pub fn window(&self, k: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(Axis(0), k)
    }

    pub fn n_windows(&self) -> usize {
        self.data.shape()[0]
    }

    /// Restricts to the channels at `rows`, in that order.
    pub fn select(&self, rows: &[usize], names: Arc<[String]>) -> PreparedTrial {
        PreparedTrial {
            trial: self.trial.clone(),
            channels: names,
            data: self.data.select(Axis(1), rows),
        }
    }
}

/// Kept output bins `k` (in cycles per window) of the whole chain.
fn passband_bins(window_len: usize, rate: f64, params: &PreprocessParams, n_out: usize) -> Vec<usize> {
    let df = rate / window_len as f64;
    (1..n_out.div_ceil(2))
        .filter(|&k| 2 * k < n_out)
        .filter(|&k| {
            let f = k as f64 * df;
            f >= params.band_low && f <= params.band_high
        })
        .collect()
}

/// Preprocesses every grid window of a trial.
///
/// Because the chain is linear after standardisation and keeps only a few
/// DFT bins, each window reduces to `(2 / (n σ)) Re Σ_k X_k e^{2πikm/m_out}`
/// over the pass-band bins, with `X_k` obtained from running prefix sums.
/// Matches [`preprocess_window`] applied to [`extract_windows`] to rounding.
pub fn prepare_trial(
    rec: &RawRecording,
    onset: usize,
    grid: &WindowGrid,
    params: &PreprocessParams,
    trial: TrialRef,
) -> Result<PreparedTrial, PreprocessError> {
    let rate = rec.rate();
    grid.check_bounds(onset, rec.samples(), rate)?;
    let (len, step, lead) = grid.in_samples(rate)?;
    let factor = rate / params.target_rate;
    if !(factor >= 1.0) || (factor - factor.round()).abs() > 1e-9 || len % factor.round() as usize != 0 {
        return Err(PreprocessError::NonIntegerFactor {
            from: rate,
            to: params.target_rate,
            samples: len,
        });
    }
    let n_out = len / factor.round() as usize;
    let bins = passband_bins(len, rate, params, n_out);
    let span_start = onset - lead;
    let span = step * (grid.count - 1) + len;
    let n_chan = rec.data().nrows();

    // Output basis: basis[b][m] = e^{2πi k_b m / n_out}.
    let basis: Vec<Vec<Complex64>> = bins
        .iter()
        .map(|&k| {
            (0..n_out)
                .map(|m| Complex64::from_polar(1.0, 2.0 * PI * (k * m) as f64 / n_out as f64))
                .collect()
        })
        .collect();
    // Twiddles e^{-2πi k t / len} for t in 0..len (periodic in len).
    let twiddle: Vec<Vec<Complex64>> = bins
        .iter()
        .map(|&k| {
            (0..len)
                .map(|t| Complex64::from_polar(1.0, -2.0 * PI * ((k * t) % len) as f64 / len as f64))
                .collect()
        })
        .collect();

    let mut out = Array3::<f64>::zeros((grid.count, n_chan, n_out));
    let mut prefix = vec![Complex64::new(0.0, 0.0); span + 1];
    for c in 0..n_chan {
        let x = rec.data().slice(s![c, span_start..span_start + span]);
        let centre = x.sum() / span as f64;
        // Per-window SD (two-pass, shift-stable).
        let mut sds = Vec::with_capacity(grid.count);
        for k in 0..grid.count {
            let w = x.slice(s![k * step..k * step + len]);
            let (_, sd, _) = mean_sd(w.iter().map(|v| v - centre));
            let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if is_flat(sd, scale) {
                return Err(PreprocessError::FlatChannel {
                    channel: rec.channel_names()[c].clone(),
                    window: k,
                });
            }
            sds.push(sd);
        }
        for (b, tw) in twiddle.iter().enumerate() {
            for t in 0..span {
                prefix[t + 1] = prefix[t] + tw[t % len] * (x[t] - centre);
            }
            for k in 0..grid.count {
                let a = k * step;
                // Rotate so the window's first sample has phase 0.
                let x_k = (prefix[a + len] - prefix[a]) * tw[a % len].conj();
                let scale = 2.0 / (len as f64 * sds[k]);
                let mut row = out.slice_mut(s![k, c, ..]);
                for (m, v) in row.iter_mut().enumerate() {
                    *v += scale * (x_k * basis[b][m]).re;
                }
            }
        }
    }
    Ok(PreparedTrial {
        trial,
        channels: rec.channel_names().to_vec().into(),
        data: out,
    })
}
