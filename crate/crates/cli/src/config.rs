//! Run configuration, read from a TOML file. Every section and field is
//! optional; missing values take the documented defaults. Unknown keys are
//! rejected.

use std::path::Path;

use anyhow::{Context, Result};
use capsense_core::cfc::CfcConfig;
use capsense_core::chopper::ChopperConfig;
use capsense_core::harness::{CompareProtocol, MonteCarloSpec};
use capsense_core::sensors::AccelHalfBridge;
use capsense_core::signal::NoiseSpec;
use capsense_core::Error;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub accel_g: f64,
    pub cfc: CfcConfig,
    pub sweep: SweepSection,
    pub transient: TransientSection,
    pub chopper: ChopperConfig,
    pub bridge: AccelHalfBridge,
    pub noise: NoiseSection,
    pub montecarlo: MonteCarloSection,
    pub compare: CompareSection,
    pub psd: PsdSection,
    pub output: OutputSection,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            seed: None,
            accel_g: 1.0,
            cfc: CfcConfig::default(),
            sweep: SweepSection::default(),
            transient: TransientSection::default(),
            chopper: ChopperConfig::default(),
            bridge: AccelHalfBridge::default(),
            noise: NoiseSection::default(),
            montecarlo: MonteCarloSection::default(),
            compare: CompareSection::default(),
            psd: PsdSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub c_min: f64,
    pub c_max: f64,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            c_min: 18e-12,
            c_max: 1e-9,
            points: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TransientSection {
    pub c_sense: f64,
    /// Integration steps per analytic cycle.
    pub steps_per_cycle: f64,
    pub n_cycles: usize,
}

impl Default for TransientSection {
    fn default() -> Self {
        Self {
            c_sense: 120e-12,
            steps_per_cycle: 1000.0,
            n_cycles: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub white_density: f64,
    pub flicker_a1hz: f64,
}

impl NoiseSection {
    pub fn spec(&self, seed: u64) -> NoiseSpec {
        NoiseSpec {
            white_density: self.white_density,
            flicker_a1hz: self.flicker_a1hz,
            seed,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.white_density == 0.0 && self.flicker_a1hz == 0.0
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub n_samples: usize,
    pub rel_spread_sensitivity: f64,
    pub rel_spread_c_rest: f64,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        let d = MonteCarloSpec::default();
        Self {
            n_samples: d.n_samples,
            rel_spread_sensitivity: 0.0477,
            rel_spread_c_rest: d.rel_spread_c_rest,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub c_min: f64,
    pub c_max: f64,
    pub sweep_points: usize,
    pub white_density: f64,
    pub flicker_a1hz: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        let d = CompareProtocol::default();
        Self {
            c_min: d.c_min,
            c_max: d.c_max,
            sweep_points: d.sweep_points,
            white_density: d.noise.white_density,
            flicker_a1hz: d.noise.flicker_a1hz,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PsdSource {
    Noise,
    ChopperVy,
    ChopperVz,
    ChopperVout,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PsdSection {
    pub source: PsdSource,
    /// Used by the `noise` source; chopper sources use the chopper section.
    pub sample_rate: f64,
    pub samples: usize,
    pub segment_len: usize,
    pub overlap_fraction: f64,
}

impl Default for PsdSection {
    fn default() -> Self {
        Self {
            source: PsdSource::Noise,
            sample_rate: 100e3,
            samples: 1 << 20,
            segment_len: 1 << 16,
            overlap_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Keep every n-th sample when writing waveforms.
    pub decimate: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { decimate: 100 }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Prefix a core validation error with its config section, so the
/// diagnostic names the offending field as `section.field`.
pub fn in_section(section: &str, result: capsense_core::Result<()>) -> Result<()> {
    result.map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            anyhow::anyhow!("invalid config field `{section}.{name}`: {reason}")
        }
        other => anyhow::anyhow!("invalid config section `{section}`: {other}"),
    })
}

pub fn require_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        anyhow::bail!("invalid config field `{field}`: must be finite and > 0, got {value}")
    }
}
