use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use axion_core::mixing::to_natural_units;
use axion_core::scenarios::fit_log_slope;
use axion_core::units::METER_IN_INV_EV;
use axion_sim::config::{Format, Scale};
use axion_sim::emit::{csv_string, emit, json_string, CSV_COLUMNS};
use axion_sim::{parse_config_str, run, ResultRecord};
use serde_json::Value;

const LAB: &str = r#""lab": {"m": 0, "E_gamma": 1, "g": 1e-10, "B_T": 10, "L": 1}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_axion-sim"));
    c.env_remove("AXION_SIM_THREADS").env_remove("AXION_SIM_OUT");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn coherent_sweep() -> String {
    format!(
        r#"{{
  "scenario": {{"kind": "coherent", {LAB}, "mixing_angle": 1e-3,
                "alpha": {{"abs": 1.5, "phase": 0.4}}, "beta": {{"abs": 1.0, "phase": 0.4}}}},
  "sweep": {{"parameter": "beta_abs", "from": 0.5, "to": 2.5, "points": 9}},
  "output": {{"formats": ["csv", "json", "svg"]}}
}}"#
    )
}

fn records(text: &str) -> Vec<ResultRecord> {
    run(&parse_config_str(text, "mem", &[]).unwrap(), Some(2)).unwrap()
}

#[test]
fn points_equal_one_is_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(
            "{{\n  \"scenario\": {{{LAB}}},\n  \"sweep\": {{\"parameter\": \"L\", \"from\": 1, \"to\": 2,\n    \"points\": 1}}\n}}"
        ),
    );
    let o = bin().args(["single", "--config", &cfg]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("c.json:4: sweep.points"), "{msg}");
}

#[test]
fn unknown_key_is_rejected_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &format!("{{\"scenario\": {{{LAB},\n \"gamma_factor\": 2}}}}"),
    );
    let o = bin().args(["single", "--config", &cfg]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("scenario.gamma_factor") && msg.contains("line 2"), "{msg}");
}

#[test]
fn missing_config_is_a_config_error() {
    let o = bin()
        .args(["single", "--config", "/nonexistent/c.json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn golden_csv_header_and_row() {
    let text = format!(r#"{{"scenario": {{"kind": "single_photon", {LAB}, "mixing_angle": 0.3}}}}"#);
    let csv = csv_string(&records(&text)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_param,sweep_value,p_exact,p_leading,p_classical,enhancement,leakage,flagged"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_COLUMNS.len());
    assert_eq!(&row[..2], ["", ""]);
    let p: f64 = row[2].parse().unwrap();
    assert!((p - 0.3f64.sin().powi(2)).abs() < 1e-10);
    assert_eq!(row[7], "false");
    assert!(lines.next().is_none());
}

#[test]
fn golden_json_schema() {
    let text = format!(r#"{{"scenario": {{"kind": "single_photon", {LAB}, "mixing_angle": 0.01}}}}"#);
    let v: Value = serde_json::from_str(&json_string(&records(&text)).unwrap()).unwrap();
    let rec = v.as_array().unwrap()[0].as_object().unwrap();
    let mut keys: Vec<&str> = rec.keys().map(String::as_str).collect();
    keys.sort_unstable();
    let mut want = [
        "index",
        "sweep_param",
        "sweep_value",
        "config",
        "kind",
        "p_exact",
        "p_leading",
        "p_classical",
        "enhancement",
        "leakage",
        "flagged",
        "error",
        "headline",
        "result",
        "versions",
        "units",
    ];
    want.sort_unstable();
    assert_eq!(keys, want);
    let result = rec["result"].as_object().unwrap();
    for k in [
        "kind",
        "p_exact",
        "p_leading_closed_form",
        "p_series",
        "series_amplitudes",
        "enhancement_vs_single_photon",
        "leakage",
        "flagged",
        "flag_reason",
        "addition",
        "channels",
        "numerics",
        "provenance",
    ] {
        assert!(result.contains_key(k), "missing result.{k}");
    }
    assert_eq!(rec["units"]["tesla_in_ev2"], 195.352771);
    assert_eq!(rec["versions"]["axion_sim"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn empty_and_single_record_emission() {
    let dir = tempfile::tempdir().unwrap();
    emit(
        &[],
        &[Format::Csv, Format::Json, Format::Svg],
        dir.path(),
        Scale::Linear,
    )
    .unwrap();
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv, format!("{}\n", CSV_COLUMNS.join(",")));
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(json, Value::Array(vec![]));
    let svg = fs::read_to_string(dir.path().join("results.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 0);

    let text = format!(r#"{{"scenario": {{"kind": "survival", {LAB}, "mixing_angle": 0.2}}}}"#);
    assert_eq!(csv_string(&records(&text)).unwrap().lines().count(), 2);
}

#[test]
fn svg_has_one_polyline_per_probability_column() {
    let quantum = records(&coherent_sweep());
    let svg = axion_sim::plot::svg(&quantum, Scale::Linear);
    assert_eq!(svg.matches("<polyline").count(), 3);
    for name in ["p_exact", "p_leading", "p_classical"] {
        assert!(svg.contains(&format!("class=\"{name}\"")));
    }
    let classical = records(&format!(
        r#"{{"scenario": {{"kind": "classical", {LAB}}},
            "sweep": {{"parameter": "L", "from": 0.1, "to": 10, "points": 4, "scale": "log"}}}}"#
    ));
    let svg = axion_sim::plot::svg(&classical, Scale::Log);
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert!(svg.contains("log10 L"));
}

#[test]
fn identical_bytes_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &coherent_sweep());
    let mut outputs = Vec::new();
    for (threads, name) in [("1", "a"), ("4", "b"), ("4", "c")] {
        let out = dir.path().join(name);
        let o = bin()
            .args(["coherent", "--config", &cfg, "--threads", threads, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["results.csv", "results.json", "results.svg"]
            .iter()
            .map(|f| fs::read(out.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn rows_are_in_sweep_order() {
    let recs = records(&coherent_sweep());
    let values: Vec<f64> = recs.iter().map(|r| r.sweep_value.unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    assert!(recs.iter().enumerate().all(|(i, r)| r.index == i));
}

#[test]
fn config_echo_round_trips() {
    for r in records(&coherent_sweep()) {
        let echo = serde_json::to_string_pretty(&r.config).unwrap();
        let parsed = parse_config_str(&echo, "echo", &[]).unwrap();
        assert_eq!(parsed, r.config);
        let again = run(&parsed, Some(1)).unwrap();
        assert_eq!(again[0].p_exact, r.p_exact);
    }
}

#[test]
fn overrides_and_env_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(r#"{{"scenario": {{{LAB}, "mixing_angle": 0.1}}}}"#),
    );
    let out = dir.path().join("env-out");
    let o = bin()
        .args([
            "single",
            "--config",
            &cfg,
            "--param",
            "scenario.mixing_angle=0.5",
            "--formats",
            "json",
        ])
        .env("AXION_SIM_OUT", &out)
        .env("AXION_SIM_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!out.join("results.csv").exists());
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    let p = v[0]["p_exact"].as_f64().unwrap();
    assert!((p - 0.5f64.sin().powi(2)).abs() < 1e-10);
    assert_eq!(v[0]["config"]["scenario"]["mixing_angle"], 0.5);
}

#[test]
fn flagged_rows_exit_3_and_stay_in_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"scenario": {{"kind": "coherent", {LAB}, "mixing_angle": 1e-3,
                 "alpha": {{"abs": 0.1}}, "beta": {{"abs": 3}}}},
                "numerics": {{"photon_n_max": 6}},
                "sweep": {{"parameter": "beta_abs", "from": 0.1, "to": 3, "points": 3}}}}"#
        ),
    );
    let out = dir.path().join("o");
    let o = bin()
        .args(["coherent", "--config", &cfg, "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().last().unwrap().ends_with(",true"));
    assert!(csv.lines().nth(1).unwrap().ends_with(",false"));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(r#"{{"scenario": {{{LAB}, "mixing_angle": 0.1}}}}"#),
    );
    let blocker = write(dir.path(), "file", "");
    let o = bin()
        .args(["single", "--config", &cfg, "--out", &format!("{blocker}/sub")])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn subcommand_must_match_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &coherent_sweep());
    let o = bin().args(["single", "--config", &cfg]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let plain = write(
        dir.path(),
        "p.json",
        &format!(r#"{{"scenario": {{"kind": "single", {LAB}}}}}"#),
    );
    let o = bin().args(["sweep", "--config", &plain]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn l_sweep_reproduces_sinc_node() {
    let (m, e) = (1e-4, 1e-3);
    let lab = format!(r#""lab": {{"m": {m}, "E_gamma": {e}, "g": 1e-10, "B_T": 10, "L": 1}}"#);
    let cfg = parse_config_str(
        &format!(r#"{{"scenario": {{"kind": "classical", {lab}}}}}"#),
        "mem",
        &[],
    )
    .unwrap();
    let params = to_natural_units(&cfg.scenario.lab).unwrap();
    let node = 2.0 * PI / params.delta_osc / METER_IN_INV_EV;
    let recs = records(&format!(
        r#"{{"scenario": {{"kind": "classical", {lab}}},
            "sweep": {{"parameter": "L", "from": {}, "to": {}, "points": 41}}}}"#,
        0.5 * node,
        1.5 * node
    ));
    let p: Vec<f64> = recs.iter().map(|r| r.p_classical).collect();
    let peak = p.iter().cloned().fold(0.0, f64::max);
    let (i_min, _) = p.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert_eq!(i_min, 20);
    assert!(p[20] <= 1e-12 * peak, "{} vs {peak}", p[20]);
    assert!(recs.iter().all(|r| r.p_exact.is_none() && !r.flagged));
}

#[test]
fn r_sweep_slope_at_one_added_photon() {
    let recs = records(&format!(
        r#"{{"scenario": {{"kind": "squeezed", {LAB}, "mixing_angle": 1e-3,
                "beta": {{"abs": 3}}, "squeeze": {{"r": 1, "phi": 0}}, "photons_added": 1}},
            "sweep": {{"parameter": "r", "from": 1.0, "to": 1.6, "points": 4}}}}"#
    ));
    let xs: Vec<f64> = recs.iter().map(|r| r.sweep_value.unwrap()).collect();
    let ps: Vec<f64> = recs.iter().map(|r| r.p_exact.unwrap()).collect();
    let fit = fit_log_slope(&xs, &ps).unwrap();
    assert!((fit.slope / 4.0 - 1.0).abs() < 0.02, "slope {}", fit.slope);
    assert!(recs.iter().all(|r| r.headline.is_some()));
}

#[test]
fn units_reports_benchmark_combinations() {
    let o = bin().arg("units").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let gbl = v["g_B_L"].as_f64().unwrap();
    let phase = v["mass_phase"].as_f64().unwrap();
    assert!((gbl / 9.89995e-7 - 1.0).abs() < 1e-5);
    assert!((phase / 2533.865 - 1.0).abs() < 1e-5);
    assert_eq!(v["lab"]["B_T"], 10.0);
}

#[test]
fn verify_coefficients_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["verify-coefficients", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("coefficients.json")).unwrap()).unwrap();
    let checks = v["checks"].as_array().unwrap();
    let all_ok = checks.iter().all(|c| {
        let (got, want) = (c["recovered"].as_f64().unwrap(), c["expected"].as_i64().unwrap());
        (got - want as f64).abs() < 1e-6
    });
    assert_eq!(o.status.code(), Some(if all_ok { 0 } else { 1 }));
    assert_eq!(
        String::from_utf8_lossy(&o.stdout).matches("MISMATCH").count() > 0,
        !all_ok
    );
}
