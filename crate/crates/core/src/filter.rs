//! Digital Butterworth low-pass design and zero-phase filtering.
//!
//! The filter is designed by the bilinear transform with frequency
//! pre-warping and realised as cascaded second-order sections.

use num_complex::Complex64;
use std::f64::consts::PI;

/// One second-order section: `b0 + b1 z⁻¹ + b2 z⁻²` over `1 + a1 z⁻¹ + a2 z⁻²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Biquad>,
}

impl Butterworth {
    /// Low-pass of the given order with −3 dB point at `cutoff` Hz.
    ///
    /// # Panics
    /// If `order == 0` or the cutoff is not strictly inside `(0, rate/2)`.
    pub fn lowpass(order: usize, cutoff: f64, rate: f64) -> Self {
        assert!(order > 0, "filter order must be positive");
        assert!(
            cutoff > 0.0 && cutoff < rate / 2.0,
            "cutoff {cutoff} Hz outside (0, {}) Hz",
            rate / 2.0
        );
        let fs2 = 2.0 * rate;
        let warped = fs2 * (PI * cutoff / rate).tan();
        let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);

        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for k in 0..order / 2 {
            let theta = PI * (2 * k + 1 + order) as f64 / (2 * order) as f64;
            let pole = bilinear(Complex64::from_polar(warped, theta));
            let a = [-2.0 * pole.re, pole.norm_sqr()];
            let gain = (1.0 + a[0] + a[1]) / 4.0;
            sections.push(Biquad {
                b: [gain, 2.0 * gain, gain],
                a,
            });
        }
        if order % 2 == 1 {
            let pole = bilinear(Complex64::new(-warped, 0.0)).re;
            let gain = (1.0 - pole) / 2.0;
            sections.push(Biquad {
                b: [gain, gain, 0.0],
                a: [-pole, 0.0],
            });
        }
        Self { sections }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Complex frequency response at normalised angular frequency `omega` (rad/sample).
    pub fn response(&self, omega: f64) -> Complex64 {
        self.sections
            .iter()
            .map(|s| s.response(omega))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    /// Causal filtering with the given per-section initial states.
    fn run(&self, x: &mut [f64], states: &mut [[f64; 2]]) {
        for (sec, z) in self.sections.iter().zip(states.iter_mut()) {
            for v in x.iter_mut() {
                let input = *v;
                let y = sec.b[0] * input + z[0];
                z[0] = sec.b[1] * input - sec.a[0] * y + z[1];
                z[1] = sec.b[2] * input - sec.a[1] * y;
                *v = y;
            }
        }
    }

    /// Steady-state section states for a constant input of `level`.
    fn steady_states(&self, level: f64) -> Vec<[f64; 2]> {
        let mut input = level;
        self.sections
            .iter()
            .map(|s| {
                let out = s.dc_gain() * input;
                let z1 = s.b[2] * input - s.a[1] * out;
                let z0 = out - s.b[0] * input;
                input = out;
                [z0, z1]
            })
            .collect()
    }

    /// Causal filter from rest (zero initial state).
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        let mut states = vec![[0.0; 2]; self.sections.len()];
        self.run(&mut out, &mut states);
        out
    }

    /// Forward-backward filtering (zero phase, squared magnitude response).
    ///
    /// The signal is extended at both ends by odd reflection and the filter
    /// starts from steady state, which suppresses start-up transients.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let mut states = self.steady_states(ext[0]);
        self.run(&mut ext, &mut states);
        ext.reverse();
        let mut states = self.steady_states(ext[0]);
        self.run(&mut ext, &mut states);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}
