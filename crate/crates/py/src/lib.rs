//! Python bindings: `import capsense`.

use capsense_core::cfc;
use capsense_core::chopper;
use capsense_core::harness;
use capsense_core::sensors;
use capsense_core::signal;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: capsense_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for capsense_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "Waveform", module = "capsense", skip_from_py_object)]
#[derive(Clone)]
pub struct PyWaveform {
    inner: signal::Waveform,
}

#[pymethods]
impl PyWaveform {
    #[new]
    fn new(sample_rate: f64, samples: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: signal::Waveform::new(sample_rate, samples).py_err()?,
        })
    }

    #[getter]
    fn sample_rate(&self) -> f64 {
        self.inner.sample_rate()
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    fn rms(&self) -> f64 {
        self.inner.rms()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Waveform(sample_rate={}, len={})",
            self.inner.sample_rate(),
            self.inner.len()
        )
    }
}

impl From<signal::Waveform> for PyWaveform {
    fn from(inner: signal::Waveform) -> Self {
        Self { inner }
    }
}

#[pyclass(name = "NoiseSpec", module = "capsense", skip_from_py_object, get_all, set_all)]
#[derive(Clone)]
pub struct PyNoiseSpec {
    white_density: f64,
    flicker_a1hz: f64,
    seed: u64,
}

#[pymethods]
impl PyNoiseSpec {
    #[new]
    #[pyo3(signature = (white_density=0.0, flicker_a1hz=0.0, seed=0))]
    fn new(white_density: f64, flicker_a1hz: f64, seed: u64) -> PyResult<Self> {
        signal::NoiseSpec::new(white_density, flicker_a1hz, seed).py_err()?;
        Ok(Self {
            white_density,
            flicker_a1hz,
            seed,
        })
    }

    fn synthesize(&self, sample_rate: f64, n: usize) -> PyResult<PyWaveform> {
        Ok(self.spec().synthesize(sample_rate, n).py_err()?.into())
    }
}

impl PyNoiseSpec {
    fn spec(&self) -> signal::NoiseSpec {
        signal::NoiseSpec {
            white_density: self.white_density,
            flicker_a1hz: self.flicker_a1hz,
            seed: self.seed,
        }
    }
}

fn noise_or_silent(noise: Option<PyRef<'_, PyNoiseSpec>>) -> signal::NoiseSpec {
    noise.map_or_else(signal::NoiseSpec::silent, |n| n.spec())
}

#[pyclass(name = "CfcConfig", module = "capsense", skip_from_py_object)]
#[derive(Clone)]
pub struct PyCfcConfig {
    inner: cfc::CfcConfig,
}

#[pymethods]
impl PyCfcConfig {
    #[new]
    #[pyo3(signature = (
        v_supply=5.0, charge_current=40e-6, c_parallel=0.0, gate_time=0.1,
        threshold_low_fraction=1.0/3.0, threshold_high_fraction=2.0/3.0
    ))]
    fn new(
        v_supply: f64,
        charge_current: f64,
        c_parallel: f64,
        gate_time: f64,
        threshold_low_fraction: f64,
        threshold_high_fraction: f64,
    ) -> PyResult<Self> {
        let inner = cfc::CfcConfig {
            v_supply,
            charge_current,
            c_parallel,
            gate_time,
            threshold_low_fraction,
            threshold_high_fraction,
        };
        inner.validate().py_err()?;
        Ok(Self { inner })
    }

    #[getter]
    fn v_supply(&self) -> f64 {
        self.inner.v_supply
    }

    #[getter]
    fn charge_current(&self) -> f64 {
        self.inner.charge_current
    }

    #[getter]
    fn c_parallel(&self) -> f64 {
        self.inner.c_parallel
    }

    #[getter]
    fn gate_time(&self) -> f64 {
        self.inner.gate_time
    }

    fn seconds_per_farad(&self) -> f64 {
        self.inner.seconds_per_farad()
    }
}

#[pyclass(name = "AccelHalfBridge", module = "capsense", skip_from_py_object)]
#[derive(Clone)]
pub struct PyBridge {
    inner: sensors::AccelHalfBridge,
}

#[pymethods]
impl PyBridge {
    #[new]
    #[pyo3(signature = (c_rest=7.048e-12, sensitivity=61.84e-15))]
    fn new(c_rest: f64, sensitivity: f64) -> PyResult<Self> {
        let inner = sensors::AccelHalfBridge { c_rest, sensitivity };
        inner.validate().py_err()?;
        Ok(Self { inner })
    }

    #[getter]
    fn c_rest(&self) -> f64 {
        self.inner.c_rest
    }

    #[getter]
    fn sensitivity(&self) -> f64 {
        self.inner.sensitivity
    }

    fn capacitances(&self, accel: f64) -> PyResult<(f64, f64)> {
        self.inner.capacitances(accel).py_err()
    }
}

#[pyclass(name = "ChopperConfig", module = "capsense", skip_from_py_object)]
#[derive(Clone)]
pub struct PyChopperConfig {
    inner: chopper::ChopperConfig,
}

#[pymethods]
impl PyChopperConfig {
    #[new]
    #[pyo3(signature = (
        v_carrier=1.0, f_carrier=10e3, c_integrate=5e-12, instr_gain=1.0, demod_scale=1.0,
        lpf_cutoff=100.0, sample_rate=1e6, duration=0.2, settle_fraction=0.5,
        parasitic_plus=0.0, parasitic_minus=0.0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        v_carrier: f64,
        f_carrier: f64,
        c_integrate: f64,
        instr_gain: f64,
        demod_scale: f64,
        lpf_cutoff: f64,
        sample_rate: f64,
        duration: f64,
        settle_fraction: f64,
        parasitic_plus: f64,
        parasitic_minus: f64,
    ) -> PyResult<Self> {
        let inner = chopper::ChopperConfig {
            v_carrier,
            f_carrier,
            c_integrate,
            instr_gain,
            demod_scale,
            lpf_cutoff,
            sample_rate,
            duration,
            settle_fraction,
            parasitic_plus,
            parasitic_minus,
        };
        inner.validate().py_err()?;
        Ok(Self { inner })
    }

    #[getter]
    fn f_carrier(&self) -> f64 {
        self.inner.f_carrier
    }

    #[getter]
    fn lpf_cutoff(&self) -> f64 {
        self.inner.lpf_cutoff
    }

    #[getter]
    fn sample_rate(&self) -> f64 {
        self.inner.sample_rate
    }

    fn expected_dc(&self, delta_c: f64) -> f64 {
        self.inner.expected_dc(delta_c)
    }
}

#[pyclass(name = "ChopperResult", module = "capsense", skip_from_py_object, get_all)]
pub struct PyChopperResult {
    v_y: PyWaveform,
    v_z: PyWaveform,
    v_out: PyWaveform,
    dc_out: f64,
    expected_dc: f64,
}

#[pyfunction]
#[pyo3(signature = (sample_rate, n, amplitude, freq, phase=0.0))]
fn sine(sample_rate: f64, n: usize, amplitude: f64, freq: f64, phase: f64) -> PyResult<PyWaveform> {
    Ok(signal::sine(sample_rate, n, amplitude, freq, phase).py_err()?.into())
}

#[pyfunction]
fn white_noise(sample_rate: f64, n: usize, density: f64, seed: u64) -> PyResult<PyWaveform> {
    Ok(signal::white_noise(sample_rate, n, density, seed).py_err()?.into())
}

#[pyfunction]
fn flicker_noise(sample_rate: f64, n: usize, a1hz: f64, seed: u64) -> PyResult<PyWaveform> {
    Ok(signal::flicker_noise(sample_rate, n, a1hz, seed).py_err()?.into())
}

/// Returns `(frequencies, psd)`.
#[pyfunction]
#[pyo3(signature = (w, segment_len, overlap_fraction=0.5))]
fn estimate_psd(w: PyRef<'_, PyWaveform>, segment_len: usize, overlap_fraction: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = signal::estimate_psd(&w.inner, segment_len, overlap_fraction).py_err()?;
    Ok((s.frequencies().to_vec(), s.psd().to_vec()))
}

/// Magnitude response of the 4th-order low-pass at each frequency.
#[pyfunction]
fn lowpass_response(cutoff: f64, sample_rate: f64, freqs: Vec<f64>) -> PyResult<Vec<f64>> {
    let f = signal::design_lowpass_4th(cutoff, sample_rate).py_err()?;
    Ok(freqs.iter().map(|&x| f.response(x).norm()).collect())
}

#[pyfunction]
fn lowpass(w: PyRef<'_, PyWaveform>, cutoff: f64) -> PyResult<PyWaveform> {
    let f = signal::design_lowpass_4th(cutoff, w.inner.sample_rate()).py_err()?;
    Ok(f.apply(&w.inner).py_err()?.into())
}

#[pyfunction]
#[pyo3(signature = (rh, c_at_0rh=180e-12, c_at_100rh=500e-12))]
fn humidity_capacitance(rh: f64, c_at_0rh: f64, c_at_100rh: f64) -> PyResult<f64> {
    sensors::HumiditySensorModel { c_at_0rh, c_at_100rh }.capacitance(rh).py_err()
}

#[pyfunction]
fn cycle_time_analytic(cfg: PyRef<'_, PyCfcConfig>, c_sense: f64) -> PyResult<f64> {
    cfc::cycle_time_analytic(&cfg.inner, c_sense).py_err()
}

#[pyfunction]
#[pyo3(signature = (cfg, c_sense, dt, n_cycles, noise=None))]
fn simulate_transient<'py>(
    py: Python<'py>,
    cfg: PyRef<'_, PyCfcConfig>,
    c_sense: f64,
    dt: f64,
    n_cycles: usize,
    noise: Option<PyRef<'_, PyNoiseSpec>>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = cfc::simulate_transient(&cfg.inner, c_sense, &noise_or_silent(noise), dt, n_cycles).py_err()?;
    let d = PyDict::new(py);
    d.set_item("mean_cycle_time", r.mean_cycle_time())?;
    d.set_item("cycle_times", r.cycle_times)?;
    d.set_item("charge_times", r.charge_times)?;
    d.set_item("discharge_times", r.discharge_times)?;
    d.set_item("mean_frequency", r.mean_frequency)?;
    d.set_item("counted_frequency", r.counted_frequency)?;
    d.set_item("count", r.count)?;
    Ok(d)
}

#[pyfunction]
fn count_cycles(cycle_times: Vec<f64>, gate_time: f64) -> PyResult<(u64, f64)> {
    cfc::count_cycles(&cycle_times, gate_time).py_err()
}

/// Rows of `(capacitance, cycle_time, frequency)`.
#[pyfunction]
fn sweep_transfer(cfg: PyRef<'_, PyCfcConfig>, c_values: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(cfc::sweep_transfer(&cfg.inner, &c_values)
        .py_err()?
        .into_iter()
        .map(|p| (p.capacitance, p.cycle_time, p.frequency))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (cfg, bridge, accel, noise=None, seed=0))]
fn run_chain(
    cfg: PyRef<'_, PyChopperConfig>,
    bridge: PyRef<'_, PyBridge>,
    accel: f64,
    noise: Option<PyRef<'_, PyNoiseSpec>>,
    seed: u64,
) -> PyResult<PyChopperResult> {
    let r = chopper::run_chain(&cfg.inner, &bridge.inner, accel, &noise_or_silent(noise), seed).py_err()?;
    Ok(PyChopperResult {
        v_y: r.v_y.into(),
        v_z: r.v_z.into(),
        v_out: r.v_out.into(),
        dc_out: r.dc_out,
        expected_dc: r.expected_dc,
    })
}

#[pyfunction]
fn flicker_suppression_metric<'py>(
    py: Python<'py>,
    cfg: PyRef<'_, PyChopperConfig>,
    bridge: PyRef<'_, PyBridge>,
    accel: f64,
    noise: PyRef<'_, PyNoiseSpec>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = chopper::flicker_suppression_metric(&cfg.inner, &bridge.inner, accel, &noise.spec(), seed)
        .py_err()?;
    let d = PyDict::new(py);
    d.set_item("metric_db", r.metric_db)?;
    d.set_item("error_rms_chopped", r.error_rms_chopped)?;
    d.set_item("error_rms_baseline", r.error_rms_baseline)?;
    d.set_item("ideal_output", r.ideal_output)?;
    Ok(d)
}

fn stats_dict<'py>(py: Python<'py>, s: harness::SampleStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", s.mean)?;
    d.set_item("std", s.std)?;
    d.set_item("cv", s.cv)?;
    d.set_item("summary", s.millivolt_summary())?;
    d.set_item("per_sample", s.per_sample)?;
    Ok(d)
}

#[pyfunction]
fn stats<'py>(py: Python<'py>, values: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    stats_dict(py, harness::stats(&values).py_err()?)
}

#[pyfunction]
#[pyo3(signature = (cfg, bridge, accel, n_samples, rel_spread_sensitivity, rel_spread_c_rest=0.0, noise=None, master_seed=0))]
#[allow(clippy::too_many_arguments)]
fn montecarlo_chopper<'py>(
    py: Python<'py>,
    cfg: PyRef<'_, PyChopperConfig>,
    bridge: PyRef<'_, PyBridge>,
    accel: f64,
    n_samples: usize,
    rel_spread_sensitivity: f64,
    rel_spread_c_rest: f64,
    noise: Option<PyRef<'_, PyNoiseSpec>>,
    master_seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = harness::MonteCarloSpec {
        n_samples,
        rel_spread_sensitivity,
        rel_spread_c_rest,
        noise: noise_or_silent(noise),
        master_seed,
    };
    let (c, b) = (cfg.inner, bridge.inner);
    let s = py
        .detach(|| harness::montecarlo_chopper(&c, &b, accel, &spec))
        .py_err()?;
    stats_dict(py, s)
}

/// One dict per interface row.
#[pyfunction]
#[pyo3(signature = (cfc_cfg, ch_cfg, seed=0))]
fn compare_interfaces<'py>(
    py: Python<'py>,
    cfc_cfg: PyRef<'_, PyCfcConfig>,
    ch_cfg: PyRef<'_, PyChopperConfig>,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let protocol = harness::CompareProtocol {
        seed,
        ..harness::CompareProtocol::default()
    };
    let report = harness::compare_interfaces(&cfc_cfg.inner, &ch_cfg.inner, &protocol).py_err()?;
    report
        .rows()
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("name", r.name)?;
            d.set_item("capacitance_range", r.capacitance_range)?;
            d.set_item("smallest_resolvable_dc", r.smallest_resolvable_dc)?;
            d.set_item("linearity_r2", r.linearity_r2)?;
            d.set_item("stage_count", r.stage_count)?;
            d.set_item("noise_robustness_db", r.noise_robustness_db)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn capsense(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWaveform>()?;
    m.add_class::<PyNoiseSpec>()?;
    m.add_class::<PyCfcConfig>()?;
    m.add_class::<PyBridge>()?;
    m.add_class::<PyChopperConfig>()?;
    m.add_class::<PyChopperResult>()?;
    m.add_function(wrap_pyfunction!(sine, m)?)?;
    m.add_function(wrap_pyfunction!(white_noise, m)?)?;
    m.add_function(wrap_pyfunction!(flicker_noise, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_psd, m)?)?;
    m.add_function(wrap_pyfunction!(lowpass_response, m)?)?;
    m.add_function(wrap_pyfunction!(lowpass, m)?)?;
    m.add_function(wrap_pyfunction!(humidity_capacitance, m)?)?;
    m.add_function(wrap_pyfunction!(cycle_time_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_transient, m)?)?;
    m.add_function(wrap_pyfunction!(count_cycles, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(run_chain, m)?)?;
    m.add_function(wrap_pyfunction!(flicker_suppression_metric, m)?)?;
    m.add_function(wrap_pyfunction!(stats, m)?)?;
    m.add_function(wrap_pyfunction!(montecarlo_chopper, m)?)?;
    m.add_function(wrap_pyfunction!(compare_interfaces, m)?)?;
    Ok(())
}
