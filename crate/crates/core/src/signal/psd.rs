//! Averaged-periodogram (Welch) PSD estimation.
//!
//! Segments are tapered with a periodic Hann window, the one-sided
//! periodograms are averaged, and the result is scaled to V²/Hz so that
//! `Σ psd·Δf` equals the mean-square value of the input (up to window
//! averaging). DC and, for even segments, Nyquist bins are not doubled.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

use super::Waveform;

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    frequencies: Vec<f64>,
    psd: Vec<f64>,
}

impl Spectrum {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn psd(&self) -> &[f64] {
        &self.psd
    }

    pub fn len(&self) -> usize {
        self.psd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psd.is_empty()
    }

    pub fn bin_width(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// Integral of the PSD over all bins (V²).
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.bin_width()
    }

    /// Integral of the PSD over bins with `lo <= f < hi`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.iter()
            .filter(|(f, _)| *f >= lo && *f < hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.bin_width()
    }

    /// Frequency of the largest PSD bin, restricted to `lo <= f < hi`.
    pub fn peak_frequency_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.iter()
            .filter(|(f, _)| *f >= lo && *f < hi)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(f, _)| f)
    }

    pub fn peak_frequency(&self) -> f64 {
        self.peak_frequency_in(f64::NEG_INFINITY, f64::INFINITY)
            .unwrap_or(0.0)
    }

    pub fn mean_psd_in(&self, lo: f64, hi: f64) -> Option<f64> {
        let (sum, count) = self
            .iter()
            .filter(|(f, _)| *f >= lo && *f < hi)
            .fold((0.0, 0usize), |(s, c), (_, p)| (s + p, c + 1));
        (count > 0).then(|| sum / count as f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.frequencies.iter().copied().zip(self.psd.iter().copied())
    }
}

fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / len as f64).cos())
        .collect()
}

pub fn estimate_psd(w: &Waveform, segment_len: usize, overlap_fraction: f64) -> Result<Spectrum> {
    if segment_len < 2 {
        return Err(Error::invalid("segment_len", format!("must be >= 2, got {segment_len}")));
    }
    if segment_len > w.len() {
        return Err(Error::SegmentTooLong {
            segment: segment_len,
            len: w.len(),
        });
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::invalid(
            "overlap_fraction",
            format!("must be in [0, 1), got {overlap_fraction}"),
        ));
    }

    let step = ((segment_len as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    let window = hann_periodic(segment_len);
    let window_power: f64 = window.iter().map(|x| x * x).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let bins = segment_len / 2 + 1;

    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); segment_len];
    let mut segments = 0usize;
    let x = w.samples();
    let mut start = 0;
    while start + segment_len <= x.len() {
        for ((b, &s), &g) in buf.iter_mut().zip(&x[start..start + segment_len]).zip(&window) {
            *b = Complex::new(s * g, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let fs = w.sample_rate();
    let scale = 1.0 / (fs * window_power * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || (segment_len.is_multiple_of(2) && k == segment_len / 2) {
                1.0
            } else {
                2.0
            };
            p * scale * one_sided
        })
        .collect();
    let frequencies = (0..bins).map(|k| k as f64 * fs / segment_len as f64).collect();
    Ok(Spectrum { frequencies, psd })
}

/// Least-squares slope of `log10(psd)` against `log10(f)` over `lo <= f <= hi`.
pub fn fit_loglog_slope(spectrum: &Spectrum, lo: f64, hi: f64) -> Option<f64> {
    let points: Vec<(f64, f64)> = spectrum
        .iter()
        .filter(|(f, p)| *f >= lo && *f <= hi && *f > 0.0 && *p > 0.0)
        .map(|(f, p)| (f.log10(), p.log10()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
