//! Capacitance-to-frequency converter: a constant-current relaxation
//! oscillator switching between two supply-referenced thresholds, followed by
//! a gate-time cycle counter.
//!
//! The analytic cycle time is
//! `T = 2·(high − low)·v_supply / charge_current · (c_parallel + c_sense)`,
//! which for the 1/3 and 2/3 thresholds reduces to
//! `T = 2·v_supply / (3·charge_current) · (c_parallel + c_sense)`.
//! [`simulate_transient`] integrates the capacitor voltage step by step and
//! serves as an independent check of that law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::rng;
use crate::signal::{NoiseSpec, Waveform, MIN_FLICKER_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfcConfig {
    pub v_supply: f64,
    pub charge_current: f64,
    /// Trimming capacitor in parallel with the sensor (F).
    pub c_parallel: f64,
    pub gate_time: f64,
    pub threshold_low_fraction: f64,
    pub threshold_high_fraction: f64,
}

impl Default for CfcConfig {
    fn default() -> Self {
        Self {
            v_supply: 5.0,
            charge_current: 40e-6,
            c_parallel: 0.0,
            gate_time: 0.1,
            threshold_low_fraction: 1.0 / 3.0,
            threshold_high_fraction: 2.0 / 3.0,
        }
    }
}

impl CfcConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("v_supply", self.v_supply)?;
        require_positive("charge_current", self.charge_current)?;
        require_non_negative("c_parallel", self.c_parallel)?;
        require_positive("gate_time", self.gate_time)?;
        let (lo, hi) = (self.threshold_low_fraction, self.threshold_high_fraction);
        if !(lo > 0.0 && lo < 1.0) {
            return Err(Error::invalid("threshold_low_fraction", format!("must be in (0, 1), got {lo}")));
        }
        if !(hi > lo && hi < 1.0) {
            return Err(Error::invalid(
                "threshold_high_fraction",
                format!("must be in (threshold_low_fraction, 1), got {hi}"),
            ));
        }
        Ok(())
    }

    /// Seconds of cycle time per farad of total capacitance.
    pub fn seconds_per_farad(&self) -> f64 {
        2.0 * (self.threshold_high_fraction - self.threshold_low_fraction) * self.v_supply
            / self.charge_current
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfcResult {
    pub cycle_times: Vec<f64>,
    /// Charging (low → high threshold) duration of each cycle.
    pub charge_times: Vec<f64>,
    /// Discharging (high → low threshold) duration of each cycle.
    pub discharge_times: Vec<f64>,
    pub mean_frequency: f64,
    pub counted_frequency: f64,
    pub count: u64,
}

impl CfcResult {
    pub fn mean_cycle_time(&self) -> f64 {
        self.cycle_times.iter().sum::<f64>() / self.cycle_times.len() as f64
    }
}

pub fn cycle_time_analytic(cfg: &CfcConfig, c_sense: f64) -> Result<f64> {
    cfg.validate()?;
    if !(c_sense.is_finite() && c_sense >= 0.0) {
        return Err(Error::invalid("c_sense", format!("must be >= 0, got {c_sense}")));
    }
    Ok(cfg.seconds_per_farad() * (cfg.c_parallel + c_sense))
}

/// Additive comparator-input noise, produced in fixed-size blocks so the run
/// length need not be known up front. Block `b` uses its own derived seed.
struct NoiseStream {
    spec: NoiseSpec,
    sample_rate: f64,
    block_len: usize,
    block: Vec<f64>,
    block_index: u64,
}

impl NoiseStream {
    fn new(spec: NoiseSpec, sample_rate: f64, expected_len: usize) -> Self {
        Self {
            spec,
            sample_rate,
            block_len: expected_len.next_power_of_two().max(MIN_FLICKER_SAMPLES),
            block: Vec::new(),
            block_index: 0,
        }
    }

    fn at(&mut self, k: usize) -> Result<f64> {
        if self.spec.is_silent() {
            return Ok(0.0);
        }
        let block = (k / self.block_len) as u64;
        if self.block.is_empty() || block != self.block_index {
            let seed = rng::derive_indexed(self.spec.seed, "cfc.noise.block", block);
            self.block = self
                .spec
                .with_seed(seed)
                .synthesize(self.sample_rate, self.block_len)?
                .into_samples();
            self.block_index = block;
        }
        Ok(self.block[k % self.block_len])
    }
}

/// Step-by-step integration of `dV/dt = ±I / (C0 + CS)` with an ideal
/// two-threshold comparator. Crossing instants are found by linear
/// interpolation of the comparator input between bracketing samples, and the
/// capacitor voltage is carried through the crossing with the reversed slope.
///
/// The run starts at the low threshold at the beginning of a charge phase.
pub fn simulate_transient(
    cfg: &CfcConfig,
    c_sense: f64,
    noise: &NoiseSpec,
    dt: f64,
    n_cycles: usize,
) -> Result<CfcResult> {
    let t_analytic = cycle_time_analytic(cfg, c_sense)?;
    noise.validate()?;
    require_positive("dt", dt)?;
    if t_analytic <= 0.0 {
        return Err(Error::invalid("c_sense", "total capacitance must be > 0"));
    }
    let max_dt = t_analytic / 200.0;
    if dt > max_dt {
        return Err(Error::StepTooCoarse { dt, max: max_dt });
    }
    if n_cycles == 0 {
        return Err(Error::invalid("n_cycles", "must be >= 1"));
    }

    let expected_steps = (n_cycles as f64 * t_analytic / dt).ceil() as usize + 1;
    let mut noise_stream = NoiseStream::new(*noise, 1.0 / dt, expected_steps);
    integrate(cfg, c_sense, dt, n_cycles, t_analytic, |k| noise_stream.at(k))
}

fn integrate(
    cfg: &CfcConfig,
    c_sense: f64,
    dt: f64,
    n_cycles: usize,
    t_analytic: f64,
    mut noise_at: impl FnMut(usize) -> Result<f64>,
) -> Result<CfcResult> {
    let slope = cfg.charge_current / (cfg.c_parallel + c_sense);
    let v_low = cfg.threshold_low_fraction * cfg.v_supply;
    let v_high = cfg.threshold_high_fraction * cfg.v_supply;
    let stall_window = 10.0 * t_analytic;

    let mut cycle_times = Vec::with_capacity(n_cycles);
    let mut charge_times = Vec::with_capacity(n_cycles);
    let mut discharge_times = Vec::with_capacity(n_cycles);

    let mut v = v_low;
    let mut charging = true;
    let mut cycle_start = 0.0;
    let mut phase_start = 0.0;
    let mut noise_prev = noise_at(0)?;
    let mut k = 0usize;

    while cycle_times.len() < n_cycles {
        let t = k as f64 * dt;
        let dir = if charging { 1.0 } else { -1.0 };
        // The current source saturates at the rails.
        let mut v_next = (v + dir * slope * dt).clamp(0.0, cfg.v_supply);
        let noise_next = noise_at(k + 1)?;
        let cmp_prev = v + noise_prev;
        let cmp_next = v_next + noise_next;

        let threshold = if charging { v_high } else { v_low };
        let crossed = if charging {
            cmp_next >= threshold
        } else {
            cmp_next <= threshold
        };
        if crossed {
            let span = cmp_next - cmp_prev;
            let frac = if span != 0.0 {
                ((threshold - cmp_prev) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t_cross = t + frac * dt;
            let v_cross = v + dir * slope * frac * dt;
            v_next = v_cross - dir * slope * (1.0 - frac) * dt;
            if charging {
                charge_times.push(t_cross - phase_start);
            } else {
                discharge_times.push(t_cross - phase_start);
                cycle_times.push(t_cross - cycle_start);
                cycle_start = t_cross;
            }
            phase_start = t_cross;
            charging = !charging;
        } else if t + dt - phase_start > stall_window {
            return Err(Error::Stall {
                window: stall_window,
            });
        }

        v = v_next;
        noise_prev = noise_next;
        k += 1;
    }

    let mean_cycle = cycle_times.iter().sum::<f64>() / cycle_times.len() as f64;
    let (count, counted_frequency) = count_cycles(&cycle_times, cfg.gate_time)?;
    Ok(CfcResult {
        cycle_times,
        charge_times,
        discharge_times,
        mean_frequency: 1.0 / mean_cycle,
        counted_frequency,
        count,
    })
}

/// Number of complete cycles ending inside a gate of `gate_time` seconds that
/// opens at the start of the stream, and the resulting frequency estimate.
///
/// When the gate outlasts the stream the stream is repeated, the oscillator
/// being in steady state.
pub fn count_cycles(cycle_times: &[f64], gate_time: f64) -> Result<(u64, f64)> {
    require_positive("gate_time", gate_time)?;
    if cycle_times.is_empty() {
        return Err(Error::EmptyCycleStream);
    }
    if cycle_times.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
        return Err(Error::invalid("cycle_times", "every cycle time must be finite and > 0"));
    }
    // Cycle ends landing on the gate edge within accumulated rounding count.
    let limit = gate_time * (1.0 + 1e-12);
    let span: f64 = cycle_times.iter().sum();
    let whole_passes = ((gate_time / span).floor() as u64).saturating_sub(1);
    let mut count = whole_passes * cycle_times.len() as u64;
    let mut t = whole_passes as f64 * span;
    'outer: loop {
        for &c in cycle_times {
            if t + c > limit {
                break 'outer;
            }
            t += c;
            count += 1;
        }
    }
    Ok((count, count as f64 / gate_time))
}

/// One row of a transfer sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPoint {
    pub capacitance: f64,
    pub cycle_time: f64,
    pub frequency: f64,
}

pub fn sweep_transfer(cfg: &CfcConfig, c_values: &[f64]) -> Result<Vec<TransferPoint>> {
    c_values
        .iter()
        .map(|&c| {
            let cycle_time = cycle_time_analytic(cfg, c)?;
            Ok(TransferPoint {
                capacitance: c,
                cycle_time,
                frequency: if cycle_time > 0.0 { 1.0 / cycle_time } else { f64::INFINITY },
            })
        })
        .collect()
}

/// Each sweep point confirmed by a noiseless transient run at
/// `dt = T / steps_per_cycle`. Returns `(analytic, transient mean)` pairs.
pub fn sweep_transient_check(
    cfg: &CfcConfig,
    c_values: &[f64],
    steps_per_cycle: f64,
    n_cycles: usize,
) -> Result<Vec<(f64, f64)>> {
    c_values
        .par_iter()
        .map(|&c| {
            let t = cycle_time_analytic(cfg, c)?;
            let r = simulate_transient(cfg, c, &NoiseSpec::silent(), t / steps_per_cycle, n_cycles)?;
            Ok((t, r.mean_cycle_time()))
        })
        .collect()
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Least-squares straight line through `(x, y)`: `(slope, intercept, r²)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, intercept, r2))
}

/// Capacitance change that moves the counted frequency by one count over the
/// gate, at total sensor capacitance `c_sense`: `ΔC = (C0 + CS)·T / gate`.
pub fn counter_resolution(cfg: &CfcConfig, c_sense: f64) -> Result<f64> {
    let t = cycle_time_analytic(cfg, c_sense)?;
    Ok((cfg.c_parallel + c_sense) * t / cfg.gate_time)
}

/// Capacitor voltage of an ideal noiseless oscillator sampled at
/// `sample_rate`, for inspection and plotting.
pub fn ideal_voltage(cfg: &CfcConfig, c_sense: f64, sample_rate: f64, n: usize) -> Result<Waveform> {
    let t = cycle_time_analytic(cfg, c_sense)?;
    if t <= 0.0 {
        return Err(Error::invalid("c_sense", "total capacitance must be > 0"));
    }
    let v_low = cfg.threshold_low_fraction * cfg.v_supply;
    let swing = (cfg.threshold_high_fraction - cfg.threshold_low_fraction) * cfg.v_supply;
    let samples = (0..n)
        .map(|k| {
            let phase = (k as f64 / sample_rate / t).fract();
            let tri = if phase < 0.5 { 2.0 * phase } else { 2.0 - 2.0 * phase };
            v_low + swing * tri
        })
        .collect();
    Waveform::new(sample_rate, samples)
}
