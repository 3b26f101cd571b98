//! Experiment orchestration: descriptive statistics, Monte Carlo over device
//! spread, and the two-interface comparison report.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfc::{self, CfcConfig};
use crate::chopper::{self, ChopperConfig};
use crate::error::{require_non_negative, Error, Result};
use crate::rng;
use crate::sensors::AccelHalfBridge;
use crate::signal::NoiseSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    /// Sample standard deviation, (n − 1) divisor.
    pub std: f64,
    /// `std / |mean|`, or 0 when the mean is 0.
    pub cv: f64,
    pub per_sample: Vec<f64>,
}

impl SampleStats {
    pub fn len(&self) -> usize {
        self.per_sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_sample.is_empty()
    }

    /// `"58.44 mV, 2.79 mV (4.77 %)"` for values in volts.
    pub fn millivolt_summary(&self) -> String {
        format!(
            "{:.2} mV, {:.2} mV ({:.2} %)",
            self.mean * 1e3,
            self.std * 1e3,
            self.cv * 100.0
        )
    }
}

impl fmt::Display for SampleStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.millivolt_summary())
    }
}

/// Welford single-pass mean and variance.
pub fn stats(values: &[f64]) -> Result<SampleStats> {
    if values.len() < 2 {
        return Err(Error::TooFewValues(values.len()));
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let std = (m2 / (values.len() - 1) as f64).sqrt();
    let cv = if mean != 0.0 { std / mean.abs() } else { 0.0 };
    Ok(SampleStats {
        mean,
        std,
        cv,
        per_sample: values.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub n_samples: usize,
    /// Relative standard deviation of bridge sensitivity across devices.
    pub rel_spread_sensitivity: f64,
    /// Relative standard deviation of rest capacitance across devices.
    pub rel_spread_c_rest: f64,
    pub noise: NoiseSpec,
    pub master_seed: u64,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            n_samples: 9,
            rel_spread_sensitivity: 0.0,
            rel_spread_c_rest: 0.0,
            noise: NoiseSpec::silent(),
            master_seed: 0,
        }
    }
}

impl MonteCarloSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::invalid("n_samples", format!("must be >= 2, got {}", self.n_samples)));
        }
        require_non_negative("rel_spread_sensitivity", self.rel_spread_sensitivity)?;
        require_non_negative("rel_spread_c_rest", self.rel_spread_c_rest)?;
        self.noise.validate()
    }

    /// Bridge parameters of device `index`.
    pub fn device(&self, nominal: &AccelHalfBridge, index: usize) -> AccelHalfBridge {
        let mut stream = rng::stream(rng::derive_indexed(self.master_seed, "mc.device", index as u64));
        let z_sens: f64 = stream.sample(StandardNormal);
        let z_rest: f64 = stream.sample(StandardNormal);
        AccelHalfBridge {
            c_rest: nominal.c_rest * (1.0 + self.rel_spread_c_rest * z_rest),
            sensitivity: nominal.sensitivity * (1.0 + self.rel_spread_sensitivity * z_sens),
        }
    }

    pub fn noise_seed(&self, index: usize) -> u64 {
        rng::derive_indexed(self.master_seed, "mc.noise", index as u64)
    }
}

/// One simulated device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceSample {
    pub index: usize,
    pub bridge: AccelHalfBridge,
    pub dc_out: f64,
}

/// Per-device results in index order. Devices are evaluated in parallel;
/// each draws only from its own derived streams, so the output does not
/// depend on scheduling.
pub fn montecarlo_devices(
    cfg: &ChopperConfig,
    bridge: &AccelHalfBridge,
    accel: f64,
    spec: &MonteCarloSpec,
) -> Result<Vec<DeviceSample>> {
    spec.validate()?;
    cfg.validate()?;
    bridge.validate()?;
    (0..spec.n_samples)
        .into_par_iter()
        .map(|index| {
            let device = spec.device(bridge, index);
            chopper::run_chain(cfg, &device, accel, &spec.noise, spec.noise_seed(index))
                .map(|r| DeviceSample {
                    index,
                    bridge: device,
                    dc_out: r.dc_out,
                })
                .map_err(|e| Error::SampleFailed {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}

pub fn montecarlo_chopper(
    cfg: &ChopperConfig,
    bridge: &AccelHalfBridge,
    accel: f64,
    spec: &MonteCarloSpec,
) -> Result<SampleStats> {
    let devices = montecarlo_devices(cfg, bridge, accel, spec)?;
    stats(&devices.iter().map(|d| d.dc_out).collect::<Vec<_>>())
}

/// Settings shared by both rows of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareProtocol {
    pub c_min: f64,
    pub c_max: f64,
    pub sweep_points: usize,
    pub bridge: AccelHalfBridge,
    /// Amplifier noise for the chopper noise floor and suppression metric.
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl Default for CompareProtocol {
    fn default() -> Self {
        Self {
            c_min: 18e-12,
            c_max: 1e-9,
            sweep_points: 20,
            bridge: AccelHalfBridge::default(),
            noise: NoiseSpec {
                white_density: 50e-9,
                flicker_a1hz: 10e-6,
                seed: 0,
            },
            seed: 0,
        }
    }
}

/// Accelerations used for the chopper linearity fit (g).
pub const LINEARITY_ACCELS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceRow {
    pub name: &'static str,
    /// Measurable capacitance (cfc) or capacitance-change (chopper) span, F.
    pub capacitance_range: (f64, f64),
    pub smallest_resolvable_dc: f64,
    pub linearity_r2: f64,
    pub stage_count: u32,
    pub noise_robustness_db: Option<f64>,
}

impl InterfaceRow {
    pub fn range_width(&self) -> f64 {
        self.capacitance_range.1 - self.capacitance_range.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub cfc: InterfaceRow,
    pub chopper: InterfaceRow,
}

impl ComparisonReport {
    pub fn rows(&self) -> [&InterfaceRow; 2] {
        [&self.cfc, &self.chopper]
    }

    pub fn wider_range(&self) -> &'static str {
        pick(&self.cfc, &self.chopper, |r| r.range_width())
    }

    pub fn finer_resolution(&self) -> &'static str {
        pick(&self.cfc, &self.chopper, |r| -r.smallest_resolvable_dc)
    }

    pub fn more_complex(&self) -> &'static str {
        pick(&self.cfc, &self.chopper, |r| f64::from(r.stage_count))
    }

    pub fn summary_lines(&self) -> Vec<String> {
        vec![
            format!("wider capacitance range: {}", self.wider_range()),
            format!("finer resolution: {}", self.finer_resolution()),
            format!("more complex: {}", self.more_complex()),
        ]
    }
}

fn pick(a: &InterfaceRow, b: &InterfaceRow, key: impl Fn(&InterfaceRow) -> f64) -> &'static str {
    let (ka, kb) = (key(a), key(b));
    if ka > kb {
        a.name
    } else if kb > ka {
        b.name
    } else {
        "tie"
    }
}

pub fn compare_interfaces(
    cfc_cfg: &CfcConfig,
    ch_cfg: &ChopperConfig,
    protocol: &CompareProtocol,
) -> Result<ComparisonReport> {
    cfc_cfg.validate()?;
    ch_cfg.validate()?;
    protocol.bridge.validate()?;
    if !(protocol.c_min > 0.0 && protocol.c_max > protocol.c_min) {
        return Err(Error::invalid("c_max", "need 0 < c_min < c_max"));
    }

    let caps = cfc::log_space(protocol.c_min, protocol.c_max, protocol.sweep_points.max(2));
    let sweep = cfc::sweep_transfer(cfc_cfg, &caps)?;
    let points: Vec<(f64, f64)> = sweep.iter().map(|p| (p.capacitance, p.cycle_time)).collect();
    let (_, _, cfc_r2) = cfc::linear_fit(&points).ok_or(Error::Degenerate("flat sweep"))?;
    // Worst case over the range: the counter LSB grows with C².
    let cfc_resolution = cfc::counter_resolution(cfc_cfg, protocol.c_max)?;
    let cfc_row = InterfaceRow {
        name: "cfc",
        capacitance_range: (protocol.c_min, protocol.c_max),
        smallest_resolvable_dc: cfc_resolution,
        linearity_r2: cfc_r2,
        stage_count: 2,
        noise_robustness_db: None,
    };

    let bridge = &protocol.bridge;
    let silent = NoiseSpec::silent();
    let linearity: Vec<(f64, f64)> = LINEARITY_ACCELS
        .par_iter()
        .map(|&a| {
            chopper::run_chain(ch_cfg, bridge, a, &silent, protocol.seed)
                .map(|r| (bridge.delta_c(a), r.dc_out))
        })
        .collect::<Result<_>>()?;
    let (_, _, ch_r2) = cfc::linear_fit(&linearity).ok_or(Error::Degenerate("flat chopper sweep"))?;
    let floor = chopper::noise_floor(
        ch_cfg,
        bridge,
        &protocol.noise,
        rng::derive_seed(protocol.seed, "compare.floor"),
    )?;
    let dc_min = 3.0 * floor / ch_cfg.dc_per_farad().abs();
    let suppression = chopper::flicker_suppression_metric(
        ch_cfg,
        bridge,
        1.0,
        &protocol.noise,
        rng::derive_seed(protocol.seed, "compare.suppression"),
    )?;
    let chopper_row = InterfaceRow {
        name: "chopper",
        capacitance_range: (dc_min, bridge.c_rest),
        smallest_resolvable_dc: dc_min,
        linearity_r2: ch_r2,
        stage_count: 5,
        noise_robustness_db: Some(suppression.metric_db),
    };

    Ok(ComparisonReport {
        cfc: cfc_row,
        chopper: chopper_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_pass(values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn constant_list() {
        let s = stats(&[5e-3, 5e-3, 5e-3]).unwrap();
        assert_relative_eq!(s.mean, 5e-3, max_relative = 1e-15);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.cv, 0.0);
    }

    #[test]
    fn two_values() {
        let s = stats(&[2.0, 4.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_relative_eq!(s.std, 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s.cv, 0.471_404_520_791_031_7, max_relative = 1e-12);
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(stats(&[1.0]), Err(Error::TooFewValues(1))));
        assert!(stats(&[]).is_err());
    }

    #[test]
    fn millivolt_formatting() {
        let s = SampleStats {
            mean: 58.44e-3,
            std: 2.79e-3,
            cv: 0.0477,
            per_sample: vec![],
        };
        assert_eq!(s.millivolt_summary(), "58.44 mV, 2.79 mV (4.77 %)");
    }

    #[test]
    fn spec_validation() {
        let bad = MonteCarloSpec {
            n_samples: 1,
            ..MonteCarloSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sample_failure_reports_index() {
        let cfg = ChopperConfig {
            duration: 0.01,
            lpf_cutoff: 1e3,
            ..ChopperConfig::default()
        };
        let spec = MonteCarloSpec {
            n_samples: 50,
            rel_spread_sensitivity: 5.0,
            ..MonteCarloSpec::default()
        };
        match montecarlo_chopper(&cfg, &AccelHalfBridge::default(), 1.0, &spec) {
            Err(Error::SampleFailed { index, .. }) => assert!(index < 50),
            other => panic!("expected a failing sample, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn welford_matches_two_pass(values in prop::collection::vec(-1e3f64..1e3, 2..200)) {
            let s = stats(&values).unwrap();
            let (mean, std) = two_pass(&values);
            prop_assert!((s.mean - mean).abs() <= 1e-12 * mean.abs().max(1e-9 * 1e3));
            prop_assert!((s.std - std).abs() <= 1e-12 * std.max(1e-300) + 1e-12);
        }
    }
}
