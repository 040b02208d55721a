use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const LINEAR: &str = r#"
[device]
kind = "ideal-linear"
a_kOhm = 1.0
b_kOhm_per_nC = 100.0

[task]
t_f_us = 5.0
R_i_kOhm = 1.0
R_f_kOhm = 100.0

[solver]
grid = 201
"#;

fn memopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memopt")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("task.toml");
    fs::write(&path, text).unwrap();
    path_str(&path).to_string()
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

#[test]
fn fig2_ratio_table_ends_at_asymptote() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig2");
    assert!(memopt(&["scenario", "fig2", "--out", path_str(&out)]).status.success());
    let mut reader = csv::Reader::from_path(out.join("ratios.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "ratio").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let first: f64 = rows[0][0].parse().unwrap();
    let last = rows.last().unwrap();
    let rho: f64 = last[0].parse().unwrap();
    let ratio: f64 = last[col].parse().unwrap();
    assert_eq!(first, 1e-3);
    assert_eq!(rho, 1e6);
    assert!((ratio - 0.888889).abs() < 1e-3, "{ratio}");
    let s = summary(&out);
    assert_eq!(s["oracle"][0]["grid"], 128);
    assert!(s["oracle"][0]["relative_delta"].as_f64().unwrap() < 2e-3);
}

#[test]
fn fig3_orders_protocols_and_flags_tail() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig3");
    assert!(memopt(&["scenario", "fig3", "--out", path_str(&out), "--grid", "501"]).status.success());
    let e = &summary(&out)["energy"];
    let (opt, cv, ci) = (
        e["Q_opt_nJ"].as_f64().unwrap(),
        e["Q_constant_voltage_nJ"].as_f64().unwrap(),
        e["Q_constant_current_nJ"].as_f64().unwrap(),
    );
    assert!(opt < cv && cv < ci);

    let mut reader = csv::Reader::from_path(out.join("trajectories.csv")).unwrap();
    let flags: Vec<(String, bool)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[6].to_string(), r[7].parse().unwrap())
        })
        .collect();
    let optimal: Vec<bool> = flags.iter().filter(|(p, _)| p == "optimal").map(|(_, v)| *v).collect();
    assert_eq!(optimal.len(), 501);
    assert!(optimal[0]);
    assert!(!*optimal.last().unwrap());
    // valid up to one crossing, invalid after
    let first_bad = optimal.iter().position(|v| !v).unwrap();
    assert!(optimal[first_bad..].iter().all(|v| !v));
}

#[test]
fn fig4_reports_switch_point() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig4");
    assert!(memopt(&["scenario", "fig4", "--out", path_str(&out)]).status.success());
    let m = &summary(&out)["metrics"];
    assert!((m["R_c_over_R_f"].as_f64().unwrap() - 0.34).abs() <= 0.005);
    assert!((m["t_c_over_t_f"].as_f64().unwrap() - 0.26).abs() <= 0.005);
    assert_eq!(m["mode"], "clamped-then-interior");
}

#[test]
fn sweep_emits_savings_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    assert!(memopt(&["scenario", "sweep-threshold", "--out", path_str(&out), "--no-oracle"]).status.success());
    let mut reader = csv::Reader::from_path(out.join("ratios.csv")).unwrap();
    assert_eq!(reader.records().count(), 60);
    let s = summary(&out);
    assert_eq!(s["oracle_enabled"], false);
    assert_eq!(s["metrics"]["reference_savings"].as_array().unwrap().len(), 2);
}

#[test]
fn outputs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for scenario in ["fig2", "fig4"] {
        let (a, b) = (tmp.path().join(format!("{scenario}-a")), tmp.path().join(format!("{scenario}-b")));
        for dir in [&a, &b] {
            assert!(memopt(&["scenario", scenario, "--out", path_str(dir), "--seed", "11"]).status.success());
        }
        for file in ["trajectories.csv", "summary.json", "ratios.csv"] {
            if a.join(file).exists() {
                assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{scenario}/{file}");
            }
        }
    }
    let config = write_config(tmp.path(), LINEAR);
    let (a, b) = (tmp.path().join("run-a"), tmp.path().join("run-b"));
    for dir in [&a, &b] {
        assert!(memopt(&["run", &config, "--out", path_str(dir)]).status.success());
    }
    assert_eq!(fs::read(a.join("summary.json")).unwrap(), fs::read(b.join("summary.json")).unwrap());
    assert_eq!(fs::read(a.join("trajectories.csv")).unwrap(), fs::read(b.join("trajectories.csv")).unwrap());
}

#[test]
fn run_dispatches_on_compliance() {
    let tmp = tempfile::tempdir().unwrap();
    let free = write_config(tmp.path(), LINEAR);
    let out = tmp.path().join("free");
    assert!(memopt(&["run", &free, "--out", path_str(&out)]).status.success());
    let s = summary(&out);
    assert!(s["metrics"].get("mode").is_none());
    assert!(s["energy"]["Q_constant_voltage_nJ"].is_number());
    assert_eq!(s["config_sha256"].as_str().unwrap().len(), 64);

    let clamped = write_config(tmp.path(), &LINEAR.replace("R_f_kOhm = 100.0", "R_f_kOhm = 100.0\nI_c_mA = 0.25"));
    let out = tmp.path().join("clamped");
    assert!(memopt(&["run", &clamped, "--out", path_str(&out)]).status.success());
    assert_eq!(summary(&out)["metrics"]["mode"], "clamped-then-interior");
}

#[test]
fn malformed_config_exits_2_without_files() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[device]
kind = "threshold"
R_on_kOhm = -1.0
R_off_kOhm = 100.0
k_per_V_us = 0.5
V_on_V = 1.0
V_off_V = -1.0

[task]
t_f_us = 1.0
R_i_kOhm = 1.0
R_f_kOhm = 50.0
"#;
    let config = write_config(tmp.path(), text);
    let out = tmp.path().join("never");
    let result = memopt(&["run", &config, "--out", path_str(&out)]);
    assert_eq!(result.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(stderr_error(&result)["error"]["kind"], "config");

    let config = write_config(tmp.path(), &LINEAR.replace("grid = 201", "grid = 201\nmesh = 3"));
    let result = memopt(&["run", &config, "--out", path_str(&out)]);
    assert_eq!(result.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn infeasible_task_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    // 99 nC in 5 µs needs at least 0.198 mA
    let config = write_config(tmp.path(), &LINEAR.replace("R_f_kOhm = 100.0", "R_f_kOhm = 100.0\nI_c_mA = 0.1"));
    let out = tmp.path().join("never");
    let result = memopt(&["run", &config, "--out", path_str(&out)]);
    assert_eq!(result.status.code(), Some(3));
    assert_eq!(stderr_error(&result)["error"]["kind"], "infeasible");
    assert!(!out.exists());
}

#[test]
fn missing_config_exits_2() {
    let result = memopt(&["run", "/nonexistent/task.toml"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn verify_prints_table() {
    let result = memopt(&["verify"]);
    assert!(result.status.success());
    let text = String::from_utf8_lossy(&result.stdout);
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.starts_with("[PASS]") || l.starts_with("[NOTE]")));
}

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().unwrap();
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = tmp.path().join(path.file_stem().unwrap());
        let result = memopt(&["run", path_str(&path), "--out", path_str(&out), "--grid", "201"]);
        assert!(result.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&result.stderr));
        assert!(out.join("summary.json").exists());
        count += 1;
    }
    assert!(count >= 4);
}
