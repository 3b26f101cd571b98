use std::f64::consts::PI;

use crate::error::{require_positive, Error, Result};

/// Uniformly sampled real-valued signal in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    sample_rate: f64,
    t0: f64,
    samples: Vec<f64>,
}

impl Waveform {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        Self::with_start(sample_rate, 0.0, samples)
    }

    pub fn with_start(sample_rate: f64, t0: f64, samples: Vec<f64>) -> Result<Self> {
        require_positive("sample_rate", sample_rate)?;
        if !t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        if samples.is_empty() {
            return Err(Error::TooShort { len: 0, min: 1 });
        }
        Ok(Self {
            sample_rate,
            t0,
            samples,
        })
    }

    pub fn zeros(sample_rate: f64, n: usize) -> Result<Self> {
        Self::new(sample_rate, vec![0.0; n])
    }

    pub fn constant(sample_rate: f64, n: usize, value: f64) -> Result<Self> {
        Self::new(sample_rate, vec![value; n])
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        self.mean_square().sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Waveform {
        self.map(|x| x * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Waveform {
        Waveform {
            sample_rate: self.sample_rate,
            t0: self.t0,
            samples: self.samples.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pointwise combination of two waveforms with the same rate and length.
    pub fn zip_with(&self, other: &Waveform, f: impl Fn(f64, f64) -> f64) -> Result<Waveform> {
        self.check_compatible(other)?;
        Ok(Waveform {
            sample_rate: self.sample_rate,
            t0: self.t0,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Waveform) -> Result<Waveform> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn check_compatible(&self, other: &Waveform) -> Result<()> {
        if !same_rate(self.sample_rate, other.sample_rate) {
            return Err(Error::SampleRateMismatch {
                expected: self.sample_rate,
                found: other.sample_rate,
            });
        }
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Samples from index `start` onward, keeping the time origin consistent.
    pub fn tail(&self, start: usize) -> Result<Waveform> {
        if start >= self.len() {
            return Err(Error::EmptyWindow);
        }
        Ok(Waveform {
            sample_rate: self.sample_rate,
            t0: self.time(start),
            samples: self.samples[start..].to_vec(),
        })
    }
}

pub(crate) fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

pub(crate) fn check_below_nyquist(freq: f64, sample_rate: f64) -> Result<()> {
    require_positive("sample_rate", sample_rate)?;
    let nyquist = sample_rate / 2.0;
    if !(freq.is_finite() && freq > 0.0) {
        return Err(Error::invalid("freq", format!("must be > 0, got {freq}")));
    }
    if freq >= nyquist {
        return Err(Error::Aliasing { freq, nyquist });
    }
    Ok(())
}

/// `amplitude * sin(2π·freq·k/sample_rate + phase)` for `k in 0..n`.
pub fn sine(sample_rate: f64, n: usize, amplitude: f64, freq: f64, phase: f64) -> Result<Waveform> {
    check_below_nyquist(freq, sample_rate)?;
    if n == 0 {
        return Err(Error::TooShort { len: 0, min: 1 });
    }
    if !amplitude.is_finite() || !phase.is_finite() {
        return Err(Error::invalid("amplitude", "amplitude and phase must be finite"));
    }
    let w = 2.0 * PI * freq / sample_rate;
    let samples = (0..n)
        .map(|k| amplitude * (w * k as f64 + phase).sin())
        .collect();
    Waveform::new(sample_rate, samples)
}

/// Amplitude of the `freq` component, by projecting onto quadrature
/// references over the largest whole number of periods in the waveform.
pub fn tone_amplitude(w: &Waveform, freq: f64) -> Result<f64> {
    check_below_nyquist(freq, w.sample_rate())?;
    let periods = (w.duration() * freq).floor();
    let n = ((periods / freq) * w.sample_rate()).round() as usize;
    if periods < 1.0 || n == 0 {
        return Err(Error::TooShort {
            len: w.len(),
            min: (w.sample_rate() / freq).ceil() as usize,
        });
    }
    let step = 2.0 * PI * freq / w.sample_rate();
    let (mut i, mut q) = (0.0, 0.0);
    for (k, &x) in w.samples()[..n.min(w.len())].iter().enumerate() {
        let (s, c) = (step * k as f64).sin_cos();
        i += x * s;
        q += x * c;
    }
    let scale = 2.0 / n as f64;
    Ok((i * scale).hypot(q * scale))
}
