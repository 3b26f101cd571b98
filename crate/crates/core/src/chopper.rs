//! Chopper-stabilized half-bridge read-out.
//!
//! A sinusoidal carrier drives the two bridge capacitors into a differential
//! charge amplifier with integration capacitor `C_I`:
//!
//! ```text
//! v_y+ = −v_M · C⁻ / C_I        v_y− = −v_M · C⁺ / C_I
//! v_y  = v_y+ − v_y− = v_M · 2ΔC / C_I
//! ```
//!
//! The capacitance change thus rides on the carrier while amplifier 1/f noise,
//! injected at the instrumentation-amplifier input, stays at low frequency.
//! Multiplying by the carrier moves the signal to DC and the noise up to the
//! carrier, and the 4th-order low-pass removes it.

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::rng;
use crate::sensors::AccelHalfBridge;
use crate::signal::{design_lowpass_4th, sine, NoiseSpec, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChopperConfig {
    /// Carrier amplitude v_M (V).
    pub v_carrier: f64,
    /// Carrier frequency f_M (Hz).
    pub f_carrier: f64,
    /// Charge-amplifier integration capacitor C_I (F).
    pub c_integrate: f64,
    pub instr_gain: f64,
    /// Multiplier scale (1/V).
    pub demod_scale: f64,
    pub lpf_cutoff: f64,
    pub sample_rate: f64,
    pub duration: f64,
    /// Leading fraction of v_out discarded before DC estimation.
    pub settle_fraction: f64,
    /// Extra capacitance on the C⁺ node (F).
    pub parasitic_plus: f64,
    /// Extra capacitance on the C⁻ node (F).
    pub parasitic_minus: f64,
}

impl Default for ChopperConfig {
    fn default() -> Self {
        Self {
            v_carrier: 1.0,
            f_carrier: 10e3,
            c_integrate: 5e-12,
            instr_gain: 1.0,
            demod_scale: 1.0,
            lpf_cutoff: 100.0,
            sample_rate: 1e6,
            duration: 0.2,
            settle_fraction: 0.5,
            parasitic_plus: 0.0,
            parasitic_minus: 0.0,
        }
    }
}

impl ChopperConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("v_carrier", self.v_carrier)?;
        require_positive("sample_rate", self.sample_rate)?;
        require_positive("f_carrier", self.f_carrier)?;
        if self.f_carrier >= self.sample_rate / 2.0 {
            return Err(Error::Aliasing {
                freq: self.f_carrier,
                nyquist: self.sample_rate / 2.0,
            });
        }
        require_positive("c_integrate", self.c_integrate)?;
        if !self.instr_gain.is_finite() {
            return Err(Error::invalid("instr_gain", "must be finite"));
        }
        if !self.demod_scale.is_finite() {
            return Err(Error::invalid("demod_scale", "must be finite"));
        }
        require_positive("lpf_cutoff", self.lpf_cutoff)?;
        if self.lpf_cutoff >= self.f_carrier / 5.0 {
            return Err(Error::invalid(
                "lpf_cutoff",
                format!("must be below f_carrier/5 = {} Hz", self.f_carrier / 5.0),
            ));
        }
        require_positive("duration", self.duration)?;
        if !(self.settle_fraction > 0.0 && self.settle_fraction < 1.0) {
            return Err(Error::invalid("settle_fraction", "must be in (0, 1)"));
        }
        require_non_negative("parasitic_plus", self.parasitic_plus)?;
        require_non_negative("parasitic_minus", self.parasitic_minus)?;
        if self.sample_count() < 2 {
            return Err(Error::invalid("duration", "must span at least two samples"));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    /// DC output per farad of ΔC for an ideal chain:
    /// `demod_scale · instr_gain · (v_M²/2) · 2 / C_I`.
    pub fn dc_per_farad(&self) -> f64 {
        self.demod_scale * self.instr_gain * self.v_carrier.powi(2) / 2.0 * 2.0 / self.c_integrate
    }

    /// Ideal demodulated DC output for a capacitance change `delta_c`.
    pub fn expected_dc(&self, delta_c: f64) -> f64 {
        self.dc_per_farad() * delta_c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChopperResult {
    /// Instrumentation-amplifier output: modulated signal plus injected noise.
    pub v_y: Waveform,
    /// Multiplier output.
    pub v_z: Waveform,
    /// Low-pass output.
    pub v_out: Waveform,
    pub dc_out: f64,
    pub expected_dc: f64,
}

/// Charge-amplifier outputs `(v_y+, v_y−)`. Note the cross-over: `v_y+`
/// follows `c_minus` and `v_y−` follows `c_plus`.
pub fn charge_amp(
    carrier: &Waveform,
    c_plus: f64,
    c_minus: f64,
    c_integrate: f64,
) -> Result<(Waveform, Waveform)> {
    require_positive("c_integrate", c_integrate)?;
    require_positive("c_plus", c_plus)?;
    require_positive("c_minus", c_minus)?;
    Ok((
        carrier.scaled(-c_minus / c_integrate),
        carrier.scaled(-c_plus / c_integrate),
    ))
}

/// Differential-to-single-ended stage: `gain · (v_y+ − v_y−)`.
pub fn instr_amp(v_y_plus: &Waveform, v_y_minus: &Waveform, gain: f64) -> Result<Waveform> {
    v_y_plus.zip_with(v_y_minus, |p, m| gain * (p - m))
}

/// Ideal analog multiplier.
pub fn demodulate(v_y: &Waveform, carrier: &Waveform, demod_scale: f64) -> Result<Waveform> {
    v_y.zip_with(carrier, |y, c| demod_scale * y * c)
}

/// Mean of the samples at index `>= settle_fraction · len`.
pub fn dc_estimate(w: &Waveform, settle_fraction: f64) -> Result<f64> {
    let window = settled_window(w, settle_fraction)?;
    Ok(window.iter().sum::<f64>() / window.len() as f64)
}

fn settled_window(w: &Waveform, settle_fraction: f64) -> Result<&[f64]> {
    if !(settle_fraction > 0.0 && settle_fraction < 1.0) {
        return Err(Error::invalid("settle_fraction", "must be in (0, 1)"));
    }
    let start = (settle_fraction * w.len() as f64).ceil() as usize;
    if start >= w.len() {
        return Err(Error::EmptyWindow);
    }
    Ok(&w.samples()[start..])
}

/// Chain driven by an arbitrary excitation. The bridge sees `excitation`,
/// the multiplier is referenced to it, and `noise` is added at the
/// instrumentation-amplifier input.
fn run_with_excitation(
    cfg: &ChopperConfig,
    excitation: &Waveform,
    c_plus: f64,
    c_minus: f64,
    noise: Option<&Waveform>,
) -> Result<(Waveform, Waveform, Waveform, f64)> {
    let (yp, ym) = charge_amp(
        excitation,
        c_plus + cfg.parasitic_plus,
        c_minus + cfg.parasitic_minus,
        cfg.c_integrate,
    )?;
    let yp = match noise {
        Some(n) => yp.add(n)?,
        None => yp,
    };
    let v_y = instr_amp(&yp, &ym, cfg.instr_gain)?;
    let v_z = demodulate(&v_y, excitation, cfg.demod_scale)?;
    let v_out = design_lowpass_4th(cfg.lpf_cutoff, cfg.sample_rate)?.apply(&v_z)?;
    let dc_out = dc_estimate(&v_out, cfg.settle_fraction)?;
    Ok((v_y, v_z, v_out, dc_out))
}

fn chain_noise(cfg: &ChopperConfig, noise: &NoiseSpec, seed: u64) -> Result<Option<Waveform>> {
    noise.validate()?;
    if noise.is_silent() {
        return Ok(None);
    }
    noise
        .with_seed(rng::derive_seed(seed, "chopper.amp_noise"))
        .synthesize(cfg.sample_rate, cfg.sample_count())
        .map(Some)
}

/// Full chain at constant acceleration. Noise streams are derived from
/// `seed`; `noise.seed` is not used.
pub fn run_chain(
    cfg: &ChopperConfig,
    bridge: &AccelHalfBridge,
    accel: f64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<ChopperResult> {
    cfg.validate()?;
    let (c_plus, c_minus) = bridge.capacitances(accel)?;
    let carrier = sine(cfg.sample_rate, cfg.sample_count(), cfg.v_carrier, cfg.f_carrier, 0.0)?;
    let amp_noise = chain_noise(cfg, noise, seed)?;
    let (v_y, v_z, v_out, dc_out) =
        run_with_excitation(cfg, &carrier, c_plus, c_minus, amp_noise.as_ref())?;
    Ok(ChopperResult {
        v_y,
        v_z,
        v_out,
        dc_out,
        expected_dc: cfg.expected_dc(bridge.delta_c(accel)),
    })
}

/// Chain driven by a time-varying acceleration profile, one value per sample.
pub fn run_chain_profile(
    cfg: &ChopperConfig,
    bridge: &AccelHalfBridge,
    accel: &[f64],
    noise: &NoiseSpec,
    seed: u64,
) -> Result<ChopperResult> {
    cfg.validate()?;
    let n = cfg.sample_count();
    if accel.len() != n {
        return Err(Error::ShapeMismatch {
            left: accel.len(),
            right: n,
        });
    }
    let carrier = sine(cfg.sample_rate, n, cfg.v_carrier, cfg.f_carrier, 0.0)?;
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for (&a, &c) in accel.iter().zip(carrier.samples()) {
        let (cp, cm) = bridge.capacitances(a)?;
        plus.push(-c * (cm + cfg.parasitic_minus) / cfg.c_integrate);
        minus.push(-c * (cp + cfg.parasitic_plus) / cfg.c_integrate);
    }
    let mut yp = Waveform::new(cfg.sample_rate, plus)?;
    let ym = Waveform::new(cfg.sample_rate, minus)?;
    if let Some(n) = chain_noise(cfg, noise, seed)? {
        yp = yp.add(&n)?;
    }
    let v_y = instr_amp(&yp, &ym, cfg.instr_gain)?;
    let v_z = demodulate(&v_y, &carrier, cfg.demod_scale)?;
    let v_out = design_lowpass_4th(cfg.lpf_cutoff, cfg.sample_rate)?.apply(&v_z)?;
    let dc_out = dc_estimate(&v_out, cfg.settle_fraction)?;
    let mean_accel = accel.iter().sum::<f64>() / n as f64;
    Ok(ChopperResult {
        v_y,
        v_z,
        v_out,
        dc_out,
        expected_dc: cfg.expected_dc(bridge.delta_c(mean_accel)),
    })
}

/// Outcome of a chopped-vs-unchopped comparison on one noise realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Suppression {
    /// `20·log10(error_rms_baseline / error_rms_chopped)`.
    pub metric_db: f64,
    pub error_rms_chopped: f64,
    pub error_rms_baseline: f64,
    pub ideal_output: f64,
}

fn error_rms(v_out: &Waveform, settle_fraction: f64, ideal: f64) -> Result<f64> {
    let window = settled_window(v_out, settle_fraction)?;
    Ok((window.iter().map(|v| (v - ideal).powi(2)).sum::<f64>() / window.len() as f64).sqrt())
}

/// Flicker rejection of the chopper relative to an unchopped baseline.
///
/// Both chains see the same noise waveform at the same point. The baseline
/// drives the bridge with a DC level equal to the carrier RMS (`v_M/√2`) and
/// multiplies by that same level, so its signal power at the amplifier input
/// and its ideal output both match the chopped chain. For frequency-flat
/// noise the two chains then have equal output error and the metric is 0 dB.
pub fn flicker_suppression_metric(
    cfg: &ChopperConfig,
    bridge: &AccelHalfBridge,
    accel: f64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Suppression> {
    cfg.validate()?;
    noise.validate()?;
    if noise.is_silent() {
        return Err(Error::Degenerate("suppression needs nonzero noise"));
    }
    let (c_plus, c_minus) = bridge.capacitances(accel)?;
    let n = cfg.sample_count();
    let amp_noise = chain_noise(cfg, noise, seed)?;
    let ideal = cfg.expected_dc(bridge.delta_c(accel));

    let carrier = sine(cfg.sample_rate, n, cfg.v_carrier, cfg.f_carrier, 0.0)?;
    let (_, _, chopped, _) = run_with_excitation(cfg, &carrier, c_plus, c_minus, amp_noise.as_ref())?;

    let dc_level = Waveform::constant(cfg.sample_rate, n, cfg.v_carrier / 2f64.sqrt())?;
    let (_, _, baseline, _) =
        run_with_excitation(cfg, &dc_level, c_plus, c_minus, amp_noise.as_ref())?;

    let error_rms_chopped = error_rms(&chopped, cfg.settle_fraction, ideal)?;
    let error_rms_baseline = error_rms(&baseline, cfg.settle_fraction, ideal)?;
    if error_rms_chopped == 0.0 {
        return Err(Error::Degenerate("chopped chain has zero error"));
    }
    Ok(Suppression {
        metric_db: 20.0 * (error_rms_baseline / error_rms_chopped).log10(),
        error_rms_chopped,
        error_rms_baseline,
        ideal_output: ideal,
    })
}

/// Standard deviation of the settled output with the bridge at rest: the
/// chain's output noise floor (V).
pub fn noise_floor(cfg: &ChopperConfig, bridge: &AccelHalfBridge, noise: &NoiseSpec, seed: u64) -> Result<f64> {
    let r = run_chain(cfg, bridge, 0.0, noise, seed)?;
    let window = settled_window(&r.v_out, cfg.settle_fraction)?;
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let var = window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (window.len() - 1).max(1) as f64;
    Ok(var.sqrt())
}
