//! End-to-end tests of the `spopo` binary: exit codes, reproducibility and
//! output formats.

use std::path::Path;
use std::process::{Command, Output};

fn spopo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spopo"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const OSC: &str = r#""oscillator": {
    "roundtrip_time_s": 1e-8,
    "loss_rate_signal_hz": 1e6,
    "loss_rate_pump_hz": 1e8,
    "coupling": 1e-4
}"#;

#[test]
fn steady_state_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.json",
        &format!(
            r#"{{ {OSC}, "task": "steady-state", "steady_state": {{"mu0": 2.0}}, "seed": 1, "output_dir": "out" }}"#
        ),
    );
    let out = spopo(&["--config", &cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/steady_state.csv")).unwrap();
    assert!(csv.starts_with("quantity,value,unit\n"));
    // N_s = 2 kp/ks (mu0-1) N_th = 200 * N_th with N_th = 1e12/4e-8 = 2.5e19
    assert!(csv.contains("threshold_flux,2.5"));
    let manifest = std::fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap();
    assert!(manifest.contains("\"task\": \"steady-state\""));
    assert!(manifest.contains("config_hash"));
}

#[test]
fn spectrum_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.json",
        &format!(
            r#"{{ {OSC}, "spectrum": {{"field": "signal", "quadrature": "y", "mu0": 1.5, "points": 501}}, "seed": 7 }}"#
        ),
    );
    let a = spopo(&["spectrum", "--config", &cfg, "--out", "a"], tmp.path());
    assert!(a.status.success());
    let b = spopo(&["spectrum", "--config", &cfg, "--out", "b"], tmp.path());
    assert!(b.status.success());
    let csv_a = std::fs::read(tmp.path().join("a/spectrum.csv")).unwrap();
    let csv_b = std::fs::read(tmp.path().join("b/spectrum.csv")).unwrap();
    assert_eq!(csv_a, csv_b);

    // Manifests agree on everything except the timestamps and paths.
    let strip = |p: &str| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join(p)).unwrap()).unwrap();
        let o = v.as_object_mut().unwrap();
        o.remove("started_utc");
        o.remove("finished_utc");
        o.remove("outputs");
        v
    };
    assert_eq!(strip("a/manifest.json"), strip("b/manifest.json"));
}

#[test]
fn simulate_seed_controls_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.json",
        &format!(
            r#"{{ {OSC},
                "pump": {{"shape": "rectangular", "mu0": 1.5, "tau_p_s": 2.5e-9}},
                "sim": {{"mode": "adiabatic", "pulses": 40, "slices": 1, "bin_width_s": 2.5e-9, "trajectories": 3}},
                "seed": 11 }}"#
        ),
    );
    let run = |out: &str, seed: Option<&str>| {
        let mut args = vec!["simulate", "--config", &cfg, "--out", out];
        if let Some(s) = seed {
            args.extend_from_slice(&["--seed", s]);
        }
        let o = spopo(&args, tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(tmp.path().join(out).join("signal_record.csv")).unwrap()
    };
    let a = run("a", None);
    let b = run("b", None);
    assert_eq!(a, b, "same seed must reproduce records exactly");
    let c = run("c", Some("99"));
    assert_ne!(a, c, "--seed must override the config seed");
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        &format!(r#"{{ {OSC}, "task": "steady-state", "unknown_key": 1 }}"#),
    );
    let out = spopo(&["--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown_key"), "message should name the key: {err}");

    // Missing task selector is a config error too.
    let cfg = write_config(tmp.path(), "notask.json", &format!(r#"{{ {OSC} }}"#));
    let out = spopo(&["--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn physics_preconditions_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    // Below-threshold steady state has no bright solution.
    let cfg = write_config(
        tmp.path(),
        "below.json",
        &format!(r#"{{ {OSC}, "task": "steady-state", "steady_state": {{"mu0": 0.5}} }}"#),
    );
    let out = spopo(&["--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3));

    // Low-finesse cavity rejected by construction.
    let cfg = write_config(
        tmp.path(),
        "finesse.json",
        r#"{ "oscillator": {"roundtrip_time_s": 1e-8, "loss_rate_signal_hz": 2e7,
             "loss_rate_pump_hz": 1e8, "coupling": 1e-4},
             "task": "steady-state", "steady_state": {"mu0": 1.5} }"#,
    );
    let out = spopo(&["--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failed_comparison_exits_4_and_keeps_report() {
    let tmp = tempfile::tempdir().unwrap();
    // Vacuum-mode records measured against a deeply squeezed prediction:
    // the comparison must fail and the run must exit with code 4.
    let cfg = write_config(
        tmp.path(),
        "run.json",
        &format!(
            r#"{{ {OSC},
                "pump": {{"shape": "rectangular", "mu0": 1.05, "tau_p_s": 2.5e-9}},
                "lo": {{"shape": "rectangular", "peak": 1e18, "tau_lo_s": 2.5e-9, "phase": "y", "target": "signal"}},
                "sim": {{"mode": "vacuum", "pulses": 512, "slices": 4, "bin_width_s": 6.25e-10,
                         "trajectories": 48, "bins_per_period": 16, "step_s": 8.333333333333333e-10}},
                "homodyne": {{"segment_pulses": 128}},
                "seed": 5 }}"#
        ),
    );
    let out = spopo(&["homodyne", "--config", &cfg, "--out", "hm"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(4),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(tmp.path().join("hm/comparison.json")).unwrap();
    assert!(report.contains("\"pass\":false"));
}

#[test]
fn failed_runs_leave_no_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    // The measured spectrum is written before the prediction is evaluated;
    // an amplitude-quadrature prediction for a gaussian pump is unsupported,
    // so the run fails after the first file exists and must clean it up.
    let cfg = write_config(
        tmp.path(),
        "run.json",
        &format!(
            r#"{{ {OSC},
                "pump": {{"shape": "gaussian", "mu0": 2.0, "tau_p_s": 2.5e-9}},
                "lo": {{"shape": "rectangular", "peak": 1e18, "tau_lo_s": 1.25e-9, "phase": "x", "target": "signal"}},
                "sim": {{"mode": "adiabatic", "pulses": 128, "slices": 4, "bin_width_s": 6.25e-10,
                         "trajectories": 8, "bins_per_period": 16}},
                "homodyne": {{"segment_pulses": 128}},
                "seed": 13 }}"#
        ),
    );
    let out = spopo(&["homodyne", "--config", &cfg, "--out", "partial"], tmp.path());
    assert!(!out.status.success());
    let dir = tmp.path().join("partial");
    assert!(
        !dir.join("measured_spectrum.csv").exists(),
        "partial output must be removed on failure"
    );
    assert!(!dir.join("manifest.json").exists());
}

#[test]
fn validity_task_reports_margin() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.json",
        r#"{ "oscillator": {"roundtrip_time_s": 1e-9, "loss_rate_signal_hz": 4e7,
             "loss_rate_pump_hz": 4e8,
             "threshold_power_w": 50.0, "pump_wavelength_m": 4e-7},
             "validity": {"t_f_s": 1e-14, "mu0": 1.1} }"#,
    );
    let out = spopo(&["validity", "--config", &cfg, "--out", "v"], tmp.path());
    assert!(out.status.success());
    let json = std::fs::read_to_string(tmp.path().join("v/validity.json")).unwrap();
    assert!(json.contains("\"verdict\":\"PASS\""));
    let margin: serde_json::Value = serde_json::from_str(&json).unwrap();
    let m = margin["margin"].as_f64().unwrap();
    assert!((m / 3.15e-4 - 1.0).abs() < 0.01, "margin {m}");
    // Manifest carries the same check.
    let manifest = std::fs::read_to_string(tmp.path().join("v/manifest.json")).unwrap();
    assert!(manifest.contains("\"verdict\": \"PASS\""));
}

#[test]
fn fig4_table_has_expected_center_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.json",
        &format!(
            r#"{{ {OSC}, "fig4": {{"mu0_list": [0.5, 2.0], "tau_p_s": 2.5e-9, "delay_points": 41}} }}"#
        ),
    );
    let out = spopo(&["fig4", "--config", &cfg, "--out", "f"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("f/fig4.csv")).unwrap();
    let mut center = Vec::new();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let mu0: f64 = cols[0].parse().unwrap();
        let delay: f64 = cols[1].parse().unwrap();
        let v: f64 = cols[2].parse().unwrap();
        if delay == 0.0 {
            center.push((mu0, v));
        }
    }
    assert_eq!(center.len(), 2);
    assert!((center[0].1 - (1.0 - 2.0 / 2.25)).abs() < 1e-9); // mu0 = 0.5
    assert!((center[1].1 - 0.75).abs() < 1e-9); // mu0 = 2
}

#[test]
fn homodyne_reads_record_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{ {OSC},
            "pump": {{"shape": "rectangular", "mu0": 1.5, "tau_p_s": 2.5e-9}},
            "lo": {{"shape": "rectangular", "peak": 1e18, "tau_lo_s": 2.5e-9, "phase": "y", "target": "signal"}},
            "sim": {{"mode": "adiabatic", "pulses": 256, "slices": 4, "bin_width_s": 6.25e-10,
                     "trajectories": 16, "bins_per_period": 16}},
            "homodyne": {{"segment_pulses": 256, "compare": false, "signal_record": "sim/signal_record.csv"}},
            "seed": 21 }}"#
    );
    let cfg = write_config(tmp.path(), "run.json", &body);
    let out = spopo(&["simulate", "--config", &cfg, "--out", "sim"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Measure from the dump, then inline with the same seed: identical CSVs.
    let out = spopo(&["homodyne", "--config", &cfg, "--out", "from_dump"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let inline_body = body.replace(", \"signal_record\": \"sim/signal_record.csv\"", "");
    let cfg2 = write_config(tmp.path(), "run2.json", &inline_body);
    let out = spopo(&["homodyne", "--config", &cfg2, "--out", "inline"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(tmp.path().join("from_dump/measured_spectrum.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("inline/measured_spectrum.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn combs_task_with_estimates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.json",
        &format!(
            r#"{{ {OSC},
                "pump": {{"shape": "rectangular", "mu0": 1.5, "tau_p_s": 2.5e-9}},
                "sim": {{"mode": "adiabatic", "pulses": 150, "slices": 1, "bin_width_s": 2.5e-9, "trajectories": 1100}},
                "combs": {{"mu0": 1.5, "estimate": true, "max_lag": 40}},
                "seed": 3 }}"#
        ),
    );
    let out = spopo(&["combs", "--config", &cfg, "--out", "c"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("c/combs.csv")).unwrap();
    assert!(csv.contains("est_coefficient"));
    assert!(csv.contains("pump-signal-y"));
    // The Y cross-comb sign discrepancy is flagged in the file header.
    assert!(csv.contains("# note:"));
}
