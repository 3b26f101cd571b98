use capsense_core::chopper::{self, ChopperConfig};
use capsense_core::harness::LINEARITY_ACCELS;
use capsense_core::sensors::AccelHalfBridge;
use capsense_core::signal::{
    design_lowpass_4th, estimate_psd, sine, tone_amplitude, NoiseSpec, Waveform,
};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn charge_amp_examples() {
    let carrier = sine(1e6, 1000, 1.0, 10e3, 0.0).unwrap();
    let (p, m) = chopper::charge_amp(&carrier, 7.048e-12, 7.048e-12, 5e-12).unwrap();
    assert_eq!(p, m);
    assert_eq!(p, carrier.scaled(-7.048 / 5.0));

    let (p, m) = chopper::charge_amp(&carrier, 7.10984e-12, 6.98616e-12, 5e-12).unwrap();
    assert!(rel(tone_amplitude(&p, 10e3).unwrap(), 1.397232) < 1e-9);
    assert!(rel(tone_amplitude(&m, 10e3).unwrap(), 1.421968) < 1e-9);

    let (p2, m2) = chopper::charge_amp(&carrier, 7.10984e-12, 6.98616e-12, 10e-12).unwrap();
    for (a, b) in p.samples().iter().zip(p2.samples()).chain(m.samples().iter().zip(m2.samples())) {
        assert!((a - 2.0 * b).abs() <= 1e-15);
    }
    assert!(chopper::charge_amp(&carrier, 7e-12, 7e-12, 0.0).is_err());
}

#[test]
fn instr_amp_examples() {
    let carrier = sine(1e6, 1000, 1.0, 10e3, 0.0).unwrap();
    let same = chopper::instr_amp(&carrier, &carrier, 3.0).unwrap();
    assert!(same.samples().iter().all(|&v| v == 0.0));

    let (p, m) = chopper::charge_amp(&carrier, 7.10984e-12, 6.98616e-12, 5e-12).unwrap();
    let y1 = chopper::instr_amp(&p, &m, 1.0).unwrap();
    assert!(rel(tone_amplitude(&y1, 10e3).unwrap(), 24.736e-3) < 1e-9);
    let y2 = chopper::instr_amp(&p, &m, 2.0).unwrap();
    assert_eq!(y2, y1.scaled(2.0));
}

#[test]
fn demodulate_examples() {
    let (fs, f, a) = (1e6, 10e3, 0.3);
    let carrier = sine(fs, 10_000, a, f, 0.0).unwrap();
    let z = chopper::demodulate(&carrier, &carrier, 1.0).unwrap();
    assert!((z.mean() - a * a / 2.0).abs() < 1e-12);
    assert!(rel(tone_amplitude(&z, 2.0 * f).unwrap(), a * a / 2.0) < 1e-9);

    let silent = Waveform::zeros(fs, 10_000).unwrap();
    assert!(chopper::demodulate(&silent, &carrier, 1.0).unwrap().samples().iter().all(|&v| v == 0.0));

    let quadrature = sine(fs, 10_000, a, f, std::f64::consts::FRAC_PI_2).unwrap();
    assert!(chopper::demodulate(&carrier, &quadrature, 1.0).unwrap().mean().abs() < 1e-12);
}

#[test]
fn dc_estimate_examples() {
    assert!((chopper::dc_estimate(&Waveform::constant(1e3, 100, 3.0).unwrap(), 0.5).unwrap() - 3.0).abs() < 1e-15);
    let tone = sine(1e4, 2000, 1.0, 100.0, 0.0).unwrap();
    assert!(chopper::dc_estimate(&tone, 0.5).unwrap().abs() < 1e-12);

    let (fc, fs) = (100.0, 100e3);
    let n = (20.0 / fc * fs) as usize;
    let step = design_lowpass_4th(fc, fs).unwrap().apply(&Waveform::constant(fs, n, 1.0).unwrap()).unwrap();
    assert!((chopper::dc_estimate(&step, 0.5).unwrap() - 1.0).abs() < 1e-3);
    assert!(chopper::dc_estimate(&step, 1.0).is_err());
}

#[test]
fn run_chain_examples() {
    let cfg = ChopperConfig::default();
    let bridge = AccelHalfBridge::default();
    let silent = NoiseSpec::silent();
    let rest = chopper::run_chain(&cfg, &bridge, 0.0, &silent, 0).unwrap();
    assert!(rest.dc_out.abs() < 1e-6);
    let one = chopper::run_chain(&cfg, &bridge, 1.0, &silent, 0).unwrap();
    assert!(rel(one.expected_dc, 12.368e-3) < 1e-12);
    assert!(rel(one.dc_out, one.expected_dc) < 5e-3);
    let two = chopper::run_chain(&cfg, &bridge, 2.0, &silent, 0).unwrap();
    assert!((two.dc_out / one.dc_out - 2.0).abs() < 2.0 * 5e-3);
}

#[test]
fn linearity_over_reference_accelerations() {
    let cfg = ChopperConfig::default();
    let bridge = AccelHalfBridge::default();
    let per_g = cfg.expected_dc(bridge.delta_c(1.0));
    for a in LINEARITY_ACCELS {
        let r = chopper::run_chain(&cfg, &bridge, a, &NoiseSpec::silent(), 0).unwrap();
        assert!(rel(r.dc_out, a * per_g) < 1e-6, "{a} g: {}", r.dc_out);
        assert!(rel(tone_amplitude(&r.v_y, cfg.f_carrier).unwrap(), a * 24.736e-3) < 1e-6);
    }
}

#[test]
fn balanced_bridge_nulls_for_any_carrier() {
    let bridge = AccelHalfBridge::default();
    for v in [0.1, 1.0, 2.5, 10.0] {
        let cfg = ChopperConfig { v_carrier: v, ..ChopperConfig::default() };
        let r = chopper::run_chain(&cfg, &bridge, 0.0, &NoiseSpec::silent(), 0).unwrap();
        assert_eq!(r.dc_out, 0.0, "carrier {v}");
    }
}

#[test]
fn spectral_swap() {
    let cfg = ChopperConfig::default();
    let r = chopper::run_chain(&cfg, &AccelHalfBridge::default(), 1.0, &NoiseSpec::silent(), 0).unwrap();
    let sy = estimate_psd(&r.v_y, 1 << 14, 0.5).unwrap();
    let sz = estimate_psd(&r.v_z, 1 << 14, 0.5).unwrap();
    assert!((sy.peak_frequency() - cfg.f_carrier).abs() <= sy.bin_width());
    assert!(sz.peak_frequency() <= sz.bin_width());
    assert!((sz.peak_frequency_in(sz.bin_width() * 2.0, 1e5).unwrap() - 2.0 * cfg.f_carrier).abs() <= sz.bin_width());
}

#[test]
fn suppression_orders() {
    let cfg = ChopperConfig { duration: 1.0, ..ChopperConfig::default() };
    let bridge = AccelHalfBridge::default();
    let flicker = NoiseSpec::new(0.0, 10e-6, 0).unwrap();
    let white = NoiseSpec::new(1e-6, 0.0, 0).unwrap();
    let f = chopper::flicker_suppression_metric(&cfg, &bridge, 1.0, &flicker, 3).unwrap();
    let w = chopper::flicker_suppression_metric(&cfg, &bridge, 1.0, &white, 3).unwrap();
    assert!(f.metric_db >= 20.0, "{}", f.metric_db);
    assert!(w.metric_db.abs() <= 3.0, "{}", w.metric_db);

    let fast = ChopperConfig { f_carrier: 100e3, sample_rate: 2e6, ..cfg };
    let f10 = chopper::flicker_suppression_metric(&fast, &bridge, 1.0, &flicker, 3).unwrap();
    assert!(f10.metric_db >= f.metric_db, "{} < {}", f10.metric_db, f.metric_db);

    assert!(chopper::flicker_suppression_metric(&cfg, &bridge, 1.0, &NoiseSpec::silent(), 3).is_err());
}

#[test]
fn noisy_chain_is_seed_deterministic() {
    let cfg = ChopperConfig::default();
    let bridge = AccelHalfBridge::default();
    let noise = NoiseSpec::new(1e-7, 10e-6, 0).unwrap();
    let a = chopper::run_chain(&cfg, &bridge, 1.0, &noise, 42).unwrap();
    let b = chopper::run_chain(&cfg, &bridge, 1.0, &noise, 42).unwrap();
    let c = chopper::run_chain(&cfg, &bridge, 1.0, &noise, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.dc_out, c.dc_out);
}

#[test]
fn config_rejects_cutoff_near_carrier() {
    let cfg = ChopperConfig { lpf_cutoff: 5e3, ..ChopperConfig::default() };
    assert!(cfg.validate().is_err());
    let bad = ChopperConfig { f_carrier: 600e3, ..ChopperConfig::default() };
    assert!(bad.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn amplitude_identity(accel in -50.0f64..50.0, v in 0.1f64..5.0, ci in 1e-12f64..20e-12) {
        let bridge = AccelHalfBridge::default();
        let (p, m) = bridge.capacitances(accel).unwrap();
        let carrier = sine(1e6, 2000, v, 10e3, 0.0).unwrap();
        let (yp, ym) = chopper::charge_amp(&carrier, p, m, ci).unwrap();
        let y = chopper::instr_amp(&yp, &ym, 1.0).unwrap();
        let expected = v * 2.0 * bridge.delta_c(accel).abs() / ci;
        let got = tone_amplitude(&y, 10e3).unwrap();
        prop_assert!((got - expected).abs() <= 1e-9 * (expected + 1e-12));
    }
}
