//! Seeded Gaussian noise: white, and 1/f flicker by spectral shaping.
//!
//! Flicker noise is synthesized by drawing a white Gaussian sequence, taking
//! its DFT, scaling every bin by `sqrt(S(f)·fs/2)` with `S(f) = a1²/|f|`, and
//! transforming back. The DC bin is zeroed, so the output is zero-mean and its
//! expected one-sided PSD is exactly `a1²/f` on every resolvable bin. The
//! sequence is periodic with period `n`; the lowest frequency present is `fs/n`.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::rng;

use super::Waveform;

/// Shortest flicker sequence accepted: enough bins for two decades of 1/f.
pub const MIN_FLICKER_SAMPLES: usize = 4096;

/// Additive amplifier noise: independent white and 1/f components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// V/√Hz, one-sided.
    pub white_density: f64,
    /// V/√Hz at 1 Hz.
    pub flicker_a1hz: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::silent()
    }
}

impl NoiseSpec {
    pub const fn silent() -> Self {
        Self {
            white_density: 0.0,
            flicker_a1hz: 0.0,
            seed: 0,
        }
    }

    pub fn new(white_density: f64, flicker_a1hz: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            white_density,
            flicker_a1hz,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("white_density", self.white_density)?;
        require_non_negative("flicker_a1hz", self.flicker_a1hz)
    }

    pub fn is_silent(&self) -> bool {
        self.white_density == 0.0 && self.flicker_a1hz == 0.0
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// One-sided PSD of the modelled process at `freq` (V²/Hz).
    pub fn psd_at(&self, freq: f64) -> f64 {
        self.white_density.powi(2) + self.flicker_a1hz.powi(2) / freq
    }

    /// Sum of the white and flicker components, each drawn from its own
    /// stream derived from `self.seed`.
    pub fn synthesize(&self, sample_rate: f64, n: usize) -> Result<Waveform> {
        self.validate()?;
        let white = white_noise(
            sample_rate,
            n,
            self.white_density,
            rng::derive_seed(self.seed, "noise.white"),
        )?;
        if self.flicker_a1hz == 0.0 {
            return Ok(white);
        }
        let flicker = flicker_noise(
            sample_rate,
            n,
            self.flicker_a1hz,
            rng::derive_seed(self.seed, "noise.flicker"),
        )?;
        white.add(&flicker)
    }
}

fn gaussian(stream: &mut rng::Stream, n: usize) -> Vec<f64> {
    (0..n).map(|_| stream.sample::<f64, _>(StandardNormal)).collect()
}

/// Zero-mean Gaussian samples with sigma `density·sqrt(fs/2)`, i.e. a flat
/// one-sided PSD of `density²`.
pub fn white_noise(sample_rate: f64, n: usize, density: f64, seed: u64) -> Result<Waveform> {
    require_positive("sample_rate", sample_rate)?;
    require_non_negative("density", density)?;
    if n == 0 {
        return Err(Error::TooShort { len: 0, min: 1 });
    }
    if density == 0.0 {
        return Waveform::zeros(sample_rate, n);
    }
    let sigma = density * (sample_rate / 2.0).sqrt();
    let mut samples = gaussian(&mut rng::stream(seed), n);
    samples.iter_mut().for_each(|x| *x *= sigma);
    Waveform::new(sample_rate, samples)
}

/// Zero-mean Gaussian process with one-sided PSD `a1hz²/f`.
pub fn flicker_noise(sample_rate: f64, n: usize, a1hz: f64, seed: u64) -> Result<Waveform> {
    require_positive("sample_rate", sample_rate)?;
    require_non_negative("a1hz", a1hz)?;
    if n < MIN_FLICKER_SAMPLES {
        return Err(Error::TooShort {
            len: n,
            min: MIN_FLICKER_SAMPLES,
        });
    }
    if a1hz == 0.0 {
        return Waveform::zeros(sample_rate, n);
    }

    let mut spectrum: Vec<Complex<f64>> = gaussian(&mut rng::stream(seed), n)
        .into_iter()
        .map(|x| Complex::new(x, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spectrum);

    let bin_hz = sample_rate / n as f64;
    spectrum[0] = Complex::new(0.0, 0.0);
    for (k, bin) in spectrum.iter_mut().enumerate().skip(1) {
        let f = k.min(n - k) as f64 * bin_hz;
        *bin *= (a1hz * a1hz / f * sample_rate / 2.0).sqrt();
    }

    planner.plan_fft_inverse(n).process(&mut spectrum);
    let norm = 1.0 / n as f64;
    Waveform::new(sample_rate, spectrum.iter().map(|c| c.re * norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_is_silent() {
        let w = white_noise(1e3, 100, 0.0, 1).unwrap();
        assert!(w.samples().iter().all(|&x| x == 0.0));
        let f = flicker_noise(1e3, 4096, 0.0, 1).unwrap();
        assert!(f.samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn same_seed_same_bits() {
        let a = white_noise(1e3, 1000, 1e-6, 9).unwrap();
        let b = white_noise(1e3, 1000, 1e-6, 9).unwrap();
        assert_eq!(a, b);
        let c = white_noise(1e3, 1000, 1e-6, 10).unwrap();
        assert_ne!(a, c);

        let f1 = flicker_noise(1e3, 8192, 1e-6, 3).unwrap();
        let f2 = flicker_noise(1e3, 8192, 1e-6, 3).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn white_sigma_matches_density() {
        let w = white_noise(1e6, 1_000_000, 1e-6, 42).unwrap();
        let mean = w.mean();
        let var = w.samples().iter().map(|x| (x - mean).powi(2)).sum::<f64>()
            / (w.len() - 1) as f64;
        let expected = 1e-6 * (1e6_f64 / 2.0).sqrt();
        assert!((var.sqrt() / expected - 1.0).abs() < 0.01, "{}", var.sqrt());
    }

    #[test]
    fn flicker_is_zero_mean() {
        let f = flicker_noise(1e4, 1 << 14, 1e-5, 5).unwrap();
        assert!(f.mean().abs() < 1e-15);
    }

    #[test]
    fn short_flicker_rejected() {
        assert!(matches!(
            flicker_noise(1e3, 4095, 1e-6, 0),
            Err(Error::TooShort { min: 4096, .. })
        ));
    }

    #[test]
    fn spec_streams_are_independent() {
        let white_only = NoiseSpec::new(1e-6, 0.0, 3).unwrap().synthesize(1e3, 4096).unwrap();
        let both = NoiseSpec::new(1e-6, 1e-6, 3).unwrap().synthesize(1e3, 4096).unwrap();
        let flicker = flicker_noise(1e3, 4096, 1e-6, rng::derive_seed(3, "noise.flicker")).unwrap();
        let sum = white_only.add(&flicker).unwrap();
        assert_eq!(sum, both);
    }

    #[test]
    fn negative_density_rejected() {
        assert!(NoiseSpec::new(-1.0, 0.0, 0).is_err());
        assert!(NoiseSpec::new(0.0, f64::NAN, 0).is_err());
    }
}
