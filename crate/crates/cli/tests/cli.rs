use std::fs;
use std::process::{Command, Output};

fn quadrics(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadrics"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_clifford_passes() {
    let o = quadrics(&["verify", "--family", "clifford", "--n", "2", "--k", "1", "--r", "0.6"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json = stdout(&o);
    assert!(json.contains("\"schema\": 1"));
    assert!(json.contains("\"curvature-closed-forms\""));
}

#[test]
fn radius_out_of_range_is_config_error() {
    let o = quadrics(&["verify", "--r", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
}

#[test]
fn unknown_flag_is_config_error() {
    assert_eq!(quadrics(&["verify", "--radius", "0.5"]).status.code(), Some(2));
    assert_eq!(quadrics(&["verify", "--n", "two"]).status.code(), Some(2));
}

#[test]
fn counterexample_skips_laplacian_f() {
    let o = quadrics(&["counterexample"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    let lf = checks.iter().find(|c| c["id"] == "laplacian-f").unwrap();
    assert_eq!(lf["status"], "skip");
    assert!(checks.iter().any(|c| c["id"] == "non-cmc" && c["status"] == "pass"));
}

#[test]
fn empty_sweep_is_config_error() {
    assert_eq!(quadrics(&["index-sweep", "--r", ""]).status.code(), Some(2));
}

#[test]
fn minimal_torus_spectrum_reports_failure() {
    let o = quadrics(&["spectrum", "--r", "0.7071067811865476"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL family-orthogonality"));
}

#[test]
fn out_dir_receives_report_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = quadrics(&["index-sweep", "--r", "0.3,0.5,0.7", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS plateau-values"));
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"schema\": 1"));
    let csv = fs::read_to_string(dir.path().join("index_sweep.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    assert!(dir.path().join("index_sweep.tsv").exists());
}

#[test]
fn spectrum_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = quadrics(&["spectrum", "--r", "0.6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("p,q,mu,mult,jac,class"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# sweep\nr = 0.3, 0.5\nn = 2\n").unwrap();
    let o = quadrics(&["index-sweep", "--config", cfg.to_str().unwrap(), "--r", "0.6,0.8"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["r"], "0.6,0.8");

    fs::write(&cfg, "not a pair\n").unwrap();
    let o = quadrics(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tolerance_flag_can_force_failure() {
    let o = quadrics(&["verify", "--r", "0.6", "--tol-laplacian", "1e-20"]);
    assert_eq!(o.status.code(), Some(1));
}
