//! Maximally-flat 4th-order low-pass as two cascaded biquads.
//!
//! Analog Butterworth prototype sections `1 / (s² + s/Q + 1)` with
//! `Q = 1 / (2 cos(π/8))` and `Q = 1 / (2 cos(3π/8))`, mapped to z with a
//! bilinear transform prewarped at the cutoff so that `|H(fc)| = 1/√2` exactly.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};

use super::waveform::{check_below_nyquist, same_rate};
use super::Waveform;

/// `H(z) = (b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn lowpass(k: f64, q: f64) -> Self {
        let k2 = k * k;
        let norm = 1.0 / (k2 + k / q + 1.0);
        let a1 = 2.0 * (k2 - 1.0) * norm;
        let a2 = (k2 - k / q + 1.0) * norm;
        // Numerator taken from the stored denominator so that
        // (b0 + b1 + b2) / (1 + a1 + a2) is exactly one in f64.
        let b0 = (1.0 + a1 + a2) / 4.0;
        Self {
            b: [b0, 2.0 * b0, b0],
            a: [a1, a2],
        }
    }

    pub fn response(&self, z_inv: Complex<f64>) -> Complex<f64> {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = Complex::new(1.0, 0.0) + z_inv * self.a[0] + z2 * self.a[1];
        num / den
    }

    /// Roots of `z² + a1 z + a2`.
    pub fn poles(&self) -> [Complex<f64>; 2] {
        let [a1, a2] = self.a;
        let disc = Complex::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Transposed direct form II over `x`, zero initial state.
    fn run(&self, x: &mut [f64]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + s1;
            s1 = b1 * input - a1 * y + s2;
            s2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Cascade of second-order sections plus the parameters it was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStages {
    sections: Vec<Biquad>,
    cutoff: f64,
    sample_rate: f64,
    order: usize,
}

impl FilterStages {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Complex frequency response at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex<f64> {
        let z_inv = Complex::from_polar(1.0, -2.0 * PI * freq / self.sample_rate);
        self.sections
            .iter()
            .fold(Complex::new(1.0, 0.0), |h, s| h * s.response(z_inv))
    }

    pub fn magnitude_db(&self, freq: f64) -> f64 {
        20.0 * self.response(freq).norm().log10()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    pub fn apply(&self, w: &Waveform) -> Result<Waveform> {
        if !same_rate(self.sample_rate, w.sample_rate()) {
            return Err(Error::SampleRateMismatch {
                expected: self.sample_rate,
                found: w.sample_rate(),
            });
        }
        let mut samples = w.samples().to_vec();
        for section in &self.sections {
            section.run(&mut samples);
        }
        Waveform::with_start(w.sample_rate(), w.t0(), samples)
    }
}

pub fn design_lowpass_4th(cutoff: f64, sample_rate: f64) -> Result<FilterStages> {
    check_below_nyquist(cutoff, sample_rate).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => Error::InvalidParameter {
            name: "cutoff",
            reason,
        },
        other => other,
    })?;
    let k = (PI * cutoff / sample_rate).tan();
    let sections = [PI / 8.0, 3.0 * PI / 8.0]
        .iter()
        .map(|theta| Biquad::lowpass(k, 1.0 / (2.0 * theta.cos())))
        .collect();
    Ok(FilterStages {
        sections,
        cutoff,
        sample_rate,
        order: 4,
    })
}

pub fn filter_apply(stages: &FilterStages, w: &Waveform) -> Result<Waveform> {
    stages.apply(w)
}
