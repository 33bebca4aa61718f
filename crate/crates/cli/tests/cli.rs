use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::{json, Value};

fn bsq(dir: &Path, args: &[&str], config: Option<Value>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bsq"));
    cmd.current_dir(dir).args(args).arg("--out").arg(dir.join("out"));
    if let Some(cfg) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, cfg.to_string()).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().expect("failed to run bsq")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn print_defaults_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = bsq(dir.path(), &["--print-defaults"], None);
    assert!(out.status.success());
    let cfg: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["potential"]["builtin"], "paper-sec5");
    assert_eq!(cfg["nystrom"]["panels"], 12);
    let mut small = cfg.clone();
    small["k_grid"] = json!({"min": 0.5, "max": 1.0, "count": 2, "spacing": "linear"});
    small["k_args"] = json!([0.3]);
    assert!(bsq(dir.path(), &["scatter"], Some(small)).status.success());
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bsq"))
        .args(["scatter", "--config"])
        .arg(dir.path().join("bad.json"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");

    let out = bsq(dir.path(), &["scatter"], Some(json!({"no_such_field": 1})));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_tolerance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bsq(dir.path(), &["verify", "fast"], Some(json!({"volterra": {"rtol": -1e-10}})));
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("volterra.rtol"));
}

#[test]
fn unknown_builtin_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bsq(dir.path(), &["scatter"], Some(json!({"potential": {"builtin": "soliton"}})));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "invalid-input");
}

fn scatter_config(builtin: &str) -> Value {
    json!({
        "potential": {"builtin": builtin},
        "k_grid": {"min": 0.3, "max": 3.0, "count": 4, "spacing": "geometric"},
        "k_args": [0.2, 1.3, 2.9, 4.4]
    })
}

#[test]
fn scatter_zero_data_gives_identity() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bsq(dir.path(), &["scatter"], Some(scatter_config("zero"))).status.success());
    let rows = read_csv(&dir.path().join("out/scatter.csv"));
    assert_eq!(rows.len(), 16 * 18);
    for r in rows {
        let want = if r[3].as_bytes()[0] == r[3].as_bytes()[1] { 1.0 } else { 0.0 };
        assert!((f(&r[4]) - want).abs() < 1e-14 && f(&r[5]).abs() < 1e-14, "{r:?}");
    }
}

#[test]
fn scatter_bump_has_unit_determinant() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bsq(dir.path(), &["scatter"], Some(scatter_config("paper-sec5"))).status.success());
    let rows = read_csv(&dir.path().join("out/scatter.csv"));
    for block in rows.chunks(18) {
        let s: Vec<num_complex::Complex64> =
            block[..9].iter().map(|r| num_complex::Complex64::new(f(&r[4]), f(&r[5]))).collect();
        let det = s[0] * (s[4] * s[8] - s[5] * s[7]) - s[1] * (s[3] * s[8] - s[5] * s[6])
            + s[2] * (s[3] * s[7] - s[4] * s[6]);
        assert!((det - 1.0).norm() < 1e-9, "{det}");
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bsq(dir.path(), &["scatter"], Some(scatter_config("paper-sec5"))).status.success());
    let first = std::fs::read(dir.path().join("out/scatter.csv")).unwrap();
    let out = bsq(dir.path(), &["scatter", "--threads", "1"], Some(scatter_config("paper-sec5")));
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(dir.path().join("out/scatter.csv")).unwrap());
}

#[test]
fn reflect_shows_r1_above_one_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "k_grid": {"min": 0.05, "max": 2.0, "count": 40, "spacing": "linear"},
        "assumption_grid": {"radii": 8, "angles": 6, "r_min": 0.01, "r_max": 20.0}
    });
    let out = bsq(dir.path(), &["reflect"], Some(cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("out/reflection.csv"));
    assert!(rows.iter().any(|r| r[0] == "r1" && f(&r[1]) > 0.0 && f(&r[1]) < 1.0 && f(&r[4]) > 1.0));
    let ex: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/rh_export.json")).unwrap()).unwrap();
    assert_eq!(ex["r1"].as_array().unwrap().len(), 40);
    assert_eq!(ex["checks"]["assumption1"], true);
}

#[test]
fn expand_zero_delta13_tends_to_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"x_grid": {"min": -3.0, "max": 4.0, "count": 15, "spacing": "linear"}});
    assert!(bsq(dir.path(), &["expand-zero"], Some(cfg)).status.success());
    let rows = read_csv(&dir.path().join("out/zero_expansion.csv"));
    let tail: Vec<f64> = rows.iter().filter(|r| r[0] == "X" && f(&r[1]) >= 2.0).map(|r| f(&r[7])).collect();
    assert!(!tail.is_empty());
    for d in tail {
        assert!((d - 1.0 / 3.0).abs() < 1e-10, "{d}");
    }
}

#[test]
fn recover_zero_data() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bsq(dir.path(), &["recover"], Some(json!({"potential": {"builtin": "zero"}}))).status.success());
    let rows = read_csv(&dir.path().join("out/recover.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| f(&r[3]) <= 1e-12));
}

#[test]
fn jump_rows_per_ray() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"k_grid": {"min": 0.2, "max": 2.0, "count": 5, "spacing": "linear"}, "rays": [1, 4]});
    assert!(bsq(dir.path(), &["jump"], Some(cfg)).status.success());
    let rows = read_csv(&dir.path().join("out/jump.csv"));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0].len(), 24);
}

#[test]
fn evolve_writes_history_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "times": [0.05],
        "evolution": {"n": 2048, "l": 20.0},
        "evolve_check_k": {"min": 0.5, "max": 3.0, "count": 6, "spacing": "linear"}
    });
    let out = bsq(dir.path(), &["evolve"], Some(cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let hist = read_csv(&dir.path().join("out/history.csv"));
    assert_eq!(hist.len(), 2 * 2048);
    let rep: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/evolution_report.json")).unwrap())
            .unwrap();
    assert!(rep["evolution"]["mass_drift"].as_f64().unwrap() < 1e-8);
    assert!(rep["phase_deviation"].as_f64().unwrap() < 1e-3);
}

#[test]
fn fast_suite_on_zero_data() {
    let dir = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let out = bsq(dir.path(), &["verify", "fast"], Some(json!({"potential": {"builtin": "zero"}})));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(t0.elapsed().as_secs_f64() < 10.0);
    let rep: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/verify.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);
    assert!(String::from_utf8_lossy(&out.stdout).lines().all(|l| l.starts_with("[PASS]")));
}

#[test]
fn missing_command_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bsq(dir.path(), &[], None).status.code(), Some(2));
}
