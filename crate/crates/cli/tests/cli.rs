use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn capsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capsense")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn cfc_sweep_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = capsense(&["cfc-sweep", "--out", out_arg(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("capacitance_f,cycle_time_s,frequency_hz"));
    assert_eq!(lines.count(), 20);
    assert!(dir.path().join("summary.txt").exists());
    assert_eq!(fs::read_to_string(dir.path().join("summary.txt")).unwrap(), stdout(&o));
}

#[test]
fn chopper_run_reports_amplitudes() {
    let dir = tempfile::tempdir().unwrap();
    let o = capsense(&["chopper-run", "--accel-g", "1", "--out", out_arg(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("modulated amplitude: 24.7360 mV"), "{s}");
    assert!(s.contains("dc_out: 12.3680 mV"), "{s}");
    let mut r = csv::Reader::from_path(dir.path().join("result.csv")).unwrap();
    let row = r.records().next().unwrap().unwrap();
    let amp: f64 = row[2].parse().unwrap();
    assert!((amp / 24.736e-3 - 1.0).abs() < 1e-3);
    assert!(dir.path().join("waveforms.csv").exists());
}

#[test]
fn negative_acceleration_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = capsense(&["chopper-run", "--accel-g", "-2", "--out", out_arg(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("dc_out: -24.7360 mV"), "{}", stdout(&o));
}

#[test]
fn csv_values_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(capsense(&["cfc-sweep", "--out", out_arg(dir.path())]).status.success());
    let mut r = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let caps = capsense_core::cfc::log_space(18e-12, 1e-9, 20);
    let cfg = capsense_core::cfc::CfcConfig::default();
    for (row, c) in r.records().zip(caps) {
        let row = row.unwrap();
        let parsed: f64 = row[0].parse().unwrap();
        let t: f64 = row[1].parse().unwrap();
        assert!((parsed - c).abs() <= 1e-12 * c);
        let law = capsense_core::cfc::cycle_time_analytic(&cfg, c).unwrap();
        assert!((t - law).abs() <= 1e-12 * law);
    }
}

#[test]
fn stochastic_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mc.toml");
    fs::write(
        &config,
        "[montecarlo]\nn_samples = 50\nrel_spread_sensitivity = 0.0477\n\n[noise]\nwhite_density = 1e-7\n\n[chopper]\nsample_rate = 200e3\nlpf_cutoff = 1e3\nduration = 0.03\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for rep in ["a", "b"] {
        let out = dir.path().join(rep);
        let o = capsense(&["montecarlo", "--config", config.to_str().unwrap(), "--seed", "5", "--out", out_arg(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((fs::read(out.join("samples.csv")).unwrap(), fs::read(out.join("stats.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let other = dir.path().join("c");
    capsense(&["montecarlo", "--config", config.to_str().unwrap(), "--seed", "6", "--out", out_arg(&other)]);
    assert_ne!(fs::read(other.join("samples.csv")).unwrap(), outputs[0].0);
}

#[test]
fn seed_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "seed = 17\n\n[montecarlo]\nn_samples = 4\n\n[chopper]\nsample_rate = 200e3\nlpf_cutoff = 1e3\nduration = 0.02\n").unwrap();
    let o = capsense(&["montecarlo", "--config", config.to_str().unwrap(), "--out", out_arg(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("seed: 17"));
}

#[test]
fn stochastic_without_seed_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = capsense(&["montecarlo", "--out", out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_exits_two() {
    let o = capsense(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn invalid_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "[cfc]\nv_supply = -5.0\n").unwrap();
    let o = capsense(&["cfc-sweep", "--config", config.to_str().unwrap(), "--out", out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cfc.v_supply"), "{}", stderr(&o));

    fs::write(&config, "[cfc]\nv_suply = 5.0\n").unwrap();
    let o = capsense(&["cfc-sweep", "--config", config.to_str().unwrap(), "--out", out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("v_suply"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = capsense(&["cfc-sweep", "--config", "/nonexistent/capsense.toml", "--out", out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn every_experiment_writes_its_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("all.toml");
    fs::write(
        &config,
        "[noise]\nflicker_a1hz = 10e-6\n\n[transient]\nn_cycles = 20\n\n[montecarlo]\nn_samples = 4\n\n[psd]\nsamples = 65536\nsegment_len = 4096\n",
    )
    .unwrap();
    let cases = [
        ("cfc-transient", "cycles.csv", "cycle_index,cycle_time_s,charge_time_s,discharge_time_s"),
        ("chopper-suppression", "suppression.csv", "metric_db,error_rms_chopped_v,error_rms_baseline_v,ideal_output_v"),
        ("montecarlo", "stats.csv", "n_samples,mean_v,std_v,cv"),
        (
            "compare",
            "comparison.csv",
            "interface,range_min_f,range_max_f,smallest_resolvable_f,linearity_r2,stage_count,noise_robustness_db",
        ),
        ("psd", "psd.csv", "frequency_hz,psd_v2_per_hz"),
    ];
    for (kind, file, header) in cases {
        let out = dir.path().join(kind);
        let o = capsense(&[kind, "--config", config.to_str().unwrap(), "--seed", "1", "--out", out_arg(&out)]);
        assert!(o.status.success(), "{kind}: {}", stderr(&o));
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{kind}");
        assert!(text.lines().count() > 1, "{kind}");
    }
}

#[test]
fn shipped_default_config_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let parsed = capsense_cli::config::FileConfig::load(&path).unwrap();
    assert_eq!(parsed, capsense_cli::config::FileConfig::default());
}
