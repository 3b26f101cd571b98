use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use capsense_core::cfc::{self, TransferPoint};
use capsense_core::chopper;
use capsense_core::harness::{self, CompareProtocol, MonteCarloSpec};
use capsense_core::signal::{estimate_psd, fit_loglog_slope, tone_amplitude, NoiseSpec, Waveform};

use crate::config::{in_section, require_positive, FileConfig, PsdSource};
use crate::{ChopperArgs, Command, CommonArgs};

/// Everything a single invocation needs, resolved from flags and file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: &'static str,
    pub file: FileConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

/// Files written and the human-readable summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl RunConfig {
    fn resolve(kind: &'static str, common: &CommonArgs, accel_g: Option<f64>) -> Result<Self> {
        let mut file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        if let Some(a) = accel_g {
            file.accel_g = a;
        }
        Ok(Self {
            kind,
            seed: common.seed.or(file.seed),
            file,
            out: common.out.clone(),
        })
    }

    fn is_stochastic(&self) -> bool {
        match self.kind {
            "cfc-sweep" => false,
            "cfc-transient" | "chopper-run" => !self.file.noise.is_silent(),
            "psd" => self.file.psd.source == PsdSource::Noise || !self.file.noise.is_silent(),
            _ => true,
        }
    }

    /// Seed for stochastic experiments; deterministic ones get 0.
    fn seed(&self) -> Result<u64> {
        match (self.seed, self.is_stochastic()) {
            (Some(s), _) => Ok(s),
            (None, false) => Ok(0),
            (None, true) => bail!(
                "experiment `{}` is stochastic: pass --seed or set `seed` in the config file",
                self.kind
            ),
        }
    }
}

pub fn run(command: &Command) -> Result<Outcome> {
    let (common, accel) = match command {
        Command::CfcSweep(c) | Command::CfcTransient(c) | Command::Compare(c) => (c, None),
        Command::ChopperRun(ChopperArgs { common, accel_g })
        | Command::ChopperSuppression(ChopperArgs { common, accel_g })
        | Command::Montecarlo(ChopperArgs { common, accel_g })
        | Command::Psd(ChopperArgs { common, accel_g }) => (common, *accel_g),
    };
    let rc = RunConfig::resolve(command.name(), common, accel)?;
    let seed = rc.seed()?;
    fs::create_dir_all(&rc.out)
        .with_context(|| format!("cannot create output directory {}", rc.out.display()))?;
    let mut out = Output::new(&rc.out);
    let body = match command {
        Command::CfcSweep(_) => cfc_sweep(&rc, &mut out)?,
        Command::CfcTransient(_) => cfc_transient(&rc, seed, &mut out)?,
        Command::ChopperRun(_) => chopper_run(&rc, seed, &mut out)?,
        Command::ChopperSuppression(_) => chopper_suppression(&rc, seed, &mut out)?,
        Command::Montecarlo(_) => montecarlo(&rc, seed, &mut out)?,
        Command::Compare(_) => compare(&rc, seed, &mut out)?,
        Command::Psd(_) => psd(&rc, seed, &mut out)?,
    };
    let mut summary = format!("experiment: {}\n", rc.kind);
    if rc.is_stochastic() {
        writeln!(summary, "seed: {seed}")?;
    }
    summary.push_str(&body);
    out.write_text("summary.txt", &summary)?;
    Ok(Outcome {
        files: out.files,
        summary,
    })
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            files: Vec::new(),
        }
    }

    fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }
}

/// Shortest representation that parses back to the same f64.
fn num(x: f64) -> String {
    format!("{x:e}")
}

fn sweep_capacitances(rc: &RunConfig) -> Result<Vec<f64>> {
    let s = &rc.file.sweep;
    require_positive("sweep.c_min", s.c_min)?;
    require_positive("sweep.c_max", s.c_max)?;
    if s.points == 0 {
        bail!("invalid config field `sweep.points`: must be >= 1");
    }
    if s.c_max < s.c_min {
        bail!("invalid config field `sweep.c_max`: must be >= sweep.c_min");
    }
    Ok(cfc::log_space(s.c_min, s.c_max, s.points))
}

fn cfc_sweep(rc: &RunConfig, out: &mut Output) -> Result<String> {
    let cfg = &rc.file.cfc;
    in_section("cfc", cfg.validate())?;
    let rows = cfc::sweep_transfer(cfg, &sweep_capacitances(rc)?)?;
    out.write_csv(
        "sweep.csv",
        &["capacitance_f", "cycle_time_s", "frequency_hz"],
        rows.iter().map(|p: &TransferPoint| [num(p.capacitance), num(p.cycle_time), num(p.frequency)]),
    )?;
    let mut s = format!("points: {}\n", rows.len());
    let pts: Vec<(f64, f64)> = rows.iter().map(|p| (p.capacitance, p.cycle_time)).collect();
    if let Some((slope, intercept, r2)) = cfc::linear_fit(&pts) {
        writeln!(s, "fit slope: {slope:.9e} s/F (law: {:.9e} s/F)", cfg.seconds_per_farad())?;
        writeln!(s, "fit intercept: {intercept:.3e} s")?;
        writeln!(s, "fit r2: {r2:.12}")?;
    }
    Ok(s)
}

fn cfc_transient(rc: &RunConfig, seed: u64, out: &mut Output) -> Result<String> {
    let cfg = &rc.file.cfc;
    let tr = &rc.file.transient;
    in_section("cfc", cfg.validate())?;
    in_section("noise", rc.file.noise.spec(seed).validate())?;
    require_positive("transient.steps_per_cycle", tr.steps_per_cycle)?;
    let t = cfc::cycle_time_analytic(cfg, tr.c_sense)
        .map_err(|e| anyhow::anyhow!("invalid config field `transient.c_sense`: {e}"))?;
    let r = cfc::simulate_transient(cfg, tr.c_sense, &rc.file.noise.spec(seed), t / tr.steps_per_cycle, tr.n_cycles)?;
    out.write_csv(
        "cycles.csv",
        &["cycle_index", "cycle_time_s", "charge_time_s", "discharge_time_s"],
        r.cycle_times
            .iter()
            .zip(&r.charge_times)
            .zip(&r.discharge_times)
            .enumerate()
            .map(|(i, ((c, ch), d))| [i.to_string(), num(*c), num(*ch), num(*d)]),
    )?;
    let mean = r.mean_cycle_time();
    let jitter = if r.cycle_times.len() > 1 {
        harness::stats(&r.cycle_times)?.std
    } else {
        0.0
    };
    let mut s = String::new();
    writeln!(s, "analytic cycle time: {t:.6e} s")?;
    writeln!(s, "simulated mean cycle time: {mean:.6e} s (relative error {:.3e})", mean / t - 1.0)?;
    writeln!(s, "cycle jitter (std): {jitter:.3e} s")?;
    writeln!(s, "mean frequency: {:.6} Hz", r.mean_frequency)?;
    writeln!(s, "gate {} s: count {} -> {:.3} Hz", cfg.gate_time, r.count, r.counted_frequency)?;
    Ok(s)
}

fn chopper_inputs(rc: &RunConfig) -> Result<()> {
    in_section("chopper", rc.file.chopper.validate())?;
    in_section("bridge", rc.file.bridge.validate())?;
    in_section("noise", rc.file.noise.spec(0).validate())?;
    Ok(())
}

fn decimated(rc: &RunConfig, waves: &[&Waveform]) -> Vec<[String; 4]> {
    let step = rc.file.output.decimate.max(1);
    let w0 = waves[0];
    (0..w0.len())
        .step_by(step)
        .map(|k| {
            [
                num(w0.time(k)),
                num(waves[0].samples()[k]),
                num(waves[1].samples()[k]),
                num(waves[2].samples()[k]),
            ]
        })
        .collect()
}

fn chopper_run(rc: &RunConfig, seed: u64, out: &mut Output) -> Result<String> {
    chopper_inputs(rc)?;
    let cfg = &rc.file.chopper;
    let accel = rc.file.accel_g;
    let r = chopper::run_chain(cfg, &rc.file.bridge, accel, &rc.file.noise.spec(seed), seed)?;
    let amplitude = tone_amplitude(&r.v_y, cfg.f_carrier)?;
    out.write_csv(
        "result.csv",
        &["accel_g", "delta_c_f", "modulated_amplitude_v", "dc_out_v", "expected_dc_v"],
        [[
            num(accel),
            num(rc.file.bridge.delta_c(accel)),
            num(amplitude),
            num(r.dc_out),
            num(r.expected_dc),
        ]],
    )?;
    out.write_csv(
        "waveforms.csv",
        &["time_s", "v_y_v", "v_z_v", "v_out_v"],
        decimated(rc, &[&r.v_y, &r.v_z, &r.v_out]),
    )?;
    let mut s = String::new();
    writeln!(s, "accel: {accel} g (delta C {:.4e} F)", rc.file.bridge.delta_c(accel))?;
    writeln!(s, "modulated amplitude: {:.4} mV", amplitude * 1e3)?;
    writeln!(s, "dc_out: {:.4} mV", r.dc_out * 1e3)?;
    writeln!(s, "expected dc: {:.4} mV", r.expected_dc * 1e3)?;
    Ok(s)
}

fn chopper_suppression(rc: &RunConfig, seed: u64, out: &mut Output) -> Result<String> {
    chopper_inputs(rc)?;
    if rc.file.noise.is_silent() {
        bail!("invalid config section `noise`: suppression needs a nonzero white_density or flicker_a1hz");
    }
    let r = chopper::flicker_suppression_metric(
        &rc.file.chopper,
        &rc.file.bridge,
        rc.file.accel_g,
        &rc.file.noise.spec(seed),
        seed,
    )?;
    out.write_csv(
        "suppression.csv",
        &["metric_db", "error_rms_chopped_v", "error_rms_baseline_v", "ideal_output_v"],
        [[
            num(r.metric_db),
            num(r.error_rms_chopped),
            num(r.error_rms_baseline),
            num(r.ideal_output),
        ]],
    )?;
    let mut s = String::new();
    writeln!(s, "suppression: {:.2} dB", r.metric_db)?;
    writeln!(s, "error rms chopped: {:.4e} V", r.error_rms_chopped)?;
    writeln!(s, "error rms baseline: {:.4e} V", r.error_rms_baseline)?;
    Ok(s)
}

fn montecarlo(rc: &RunConfig, seed: u64, out: &mut Output) -> Result<String> {
    chopper_inputs(rc)?;
    let m = &rc.file.montecarlo;
    let spec = MonteCarloSpec {
        n_samples: m.n_samples,
        rel_spread_sensitivity: m.rel_spread_sensitivity,
        rel_spread_c_rest: m.rel_spread_c_rest,
        noise: rc.file.noise.spec(seed),
        master_seed: seed,
    };
    in_section("montecarlo", spec.validate())?;
    let devices = harness::montecarlo_devices(&rc.file.chopper, &rc.file.bridge, rc.file.accel_g, &spec)?;
    let st = harness::stats(&devices.iter().map(|d| d.dc_out).collect::<Vec<_>>())?;
    out.write_csv(
        "samples.csv",
        &["sample_index", "sensitivity_f_per_g", "c_rest_f", "dc_out_v"],
        devices.iter().map(|d| {
            [
                d.index.to_string(),
                num(d.bridge.sensitivity),
                num(d.bridge.c_rest),
                num(d.dc_out),
            ]
        }),
    )?;
    out.write_csv(
        "stats.csv",
        &["n_samples", "mean_v", "std_v", "cv"],
        [[st.len().to_string(), num(st.mean), num(st.std), num(st.cv)]],
    )?;
    Ok(format!("samples: {}\noutput: {}\n", st.len(), st.millivolt_summary()))
}

fn compare(rc: &RunConfig, seed: u64, out: &mut Output) -> Result<String> {
    in_section("cfc", rc.file.cfc.validate())?;
    in_section("chopper", rc.file.chopper.validate())?;
    in_section("bridge", rc.file.bridge.validate())?;
    let c = &rc.file.compare;
    let protocol = CompareProtocol {
        c_min: c.c_min,
        c_max: c.c_max,
        sweep_points: c.sweep_points,
        bridge: rc.file.bridge,
        noise: NoiseSpec {
            white_density: c.white_density,
            flicker_a1hz: c.flicker_a1hz,
            seed,
        },
        seed,
    };
    in_section("compare", protocol.noise.validate())?;
    let report = harness::compare_interfaces(&rc.file.cfc, &rc.file.chopper, &protocol)?;
    out.write_csv(
        "comparison.csv",
        &[
            "interface",
            "range_min_f",
            "range_max_f",
            "smallest_resolvable_f",
            "linearity_r2",
            "stage_count",
            "noise_robustness_db",
        ],
        report.rows().map(|r| {
            [
                r.name.to_string(),
                num(r.capacitance_range.0),
                num(r.capacitance_range.1),
                num(r.smallest_resolvable_dc),
                num(r.linearity_r2),
                r.stage_count.to_string(),
                r.noise_robustness_db.map_or_else(|| "n/a".to_string(), num),
            ]
        }),
    )?;
    let mut s = String::new();
    for r in report.rows() {
        writeln!(
            s,
            "{:<8} range [{:.3e}, {:.3e}] F, resolvable {:.3e} F, r2 {:.9}, stages {}, robustness {}",
            r.name,
            r.capacitance_range.0,
            r.capacitance_range.1,
            r.smallest_resolvable_dc,
            r.linearity_r2,
            r.stage_count,
            r.noise_robustness_db.map_or("n/a".to_string(), |d| format!("{d:.1} dB")),
        )?;
    }
    for line in report.summary_lines() {
        writeln!(s, "{line}")?;
    }
    Ok(s)
}

fn psd(rc: &RunConfig, seed: u64, out: &mut Output) -> Result<String> {
    let p = &rc.file.psd;
    let (wave, label) = match p.source {
        PsdSource::Noise => {
            require_positive("psd.sample_rate", p.sample_rate)?;
            let spec = rc.file.noise.spec(seed);
            in_section("noise", spec.validate())?;
            if spec.is_silent() {
                bail!("invalid config section `noise`: psd source `noise` needs a nonzero white_density or flicker_a1hz");
            }
            (spec.synthesize(p.sample_rate, p.samples)?, "amplifier noise")
        }
        src => {
            chopper_inputs(rc)?;
            let r = chopper::run_chain(
                &rc.file.chopper,
                &rc.file.bridge,
                rc.file.accel_g,
                &rc.file.noise.spec(seed),
                seed,
            )?;
            match src {
                PsdSource::ChopperVy => (r.v_y, "chopper v_y"),
                PsdSource::ChopperVz => (r.v_z, "chopper v_z"),
                _ => (r.v_out, "chopper v_out"),
            }
        }
    };
    let segment = p.segment_len.min(wave.len());
    let spectrum = estimate_psd(&wave, segment, p.overlap_fraction)
        .map_err(|e| anyhow::anyhow!("invalid config section `psd`: {e}"))?;
    out.write_csv(
        "psd.csv",
        &["frequency_hz", "psd_v2_per_hz"],
        spectrum.iter().map(|(f, v)| [num(f), num(v)]),
    )?;
    let mut s = String::new();
    writeln!(s, "source: {label}")?;
    writeln!(s, "bins: {} (width {:.4} Hz)", spectrum.len(), spectrum.bin_width())?;
    writeln!(s, "peak: {:.3} Hz", spectrum.peak_frequency())?;
    writeln!(
        s,
        "integrated power: {:.4e} V^2 (mean square {:.4e} V^2)",
        spectrum.total_power(),
        wave.mean_square()
    )?;
    if p.source == PsdSource::Noise && rc.file.noise.flicker_a1hz > 0.0 {
        let lo = 10.0 * wave.sample_rate() / wave.len() as f64;
        let lo = lo.max(10.0 * spectrum.bin_width());
        let hi = wave.sample_rate() / 20.0;
        if let Some(slope) = fit_loglog_slope(&spectrum, lo, hi) {
            writeln!(s, "log-log slope over [{lo:.3}, {hi:.1}] Hz: {slope:.4}")?;
        }
    }
    Ok(s)
}

