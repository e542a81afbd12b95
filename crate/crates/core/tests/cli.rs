use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nevrand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nevrand")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn row(o: &Output, key: &str) -> String {
    stdout(o)
        .lines()
        .find_map(|l| {
            let mut parts = l.split_whitespace();
            (parts.next() == Some(key)).then(|| parts.collect::<Vec<_>>().join(" "))
        })
        .unwrap_or_else(|| panic!("no row {key} in:\n{}", stdout(o)))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn eval_exponential_at_one() {
    let o = nevrand(&["eval", "exponential", "--r", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sigma: f64 = row(&o, "sigma").parse().unwrap();
    assert!((sigma - 1.509829560690897).abs() < 1e-12, "sigma = {sigma}");
    let log_m: f64 = row(&o, "log_M").parse().unwrap();
    assert!((log_m - 1.0).abs() < 1e-9);
}

#[test]
fn eval_monomial() {
    let o = nevrand(&["eval", "explicit-list:0,1", "--r", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let sigma: f64 = row(&o, "sigma").parse().unwrap();
    let log_m: f64 = row(&o, "log_M").parse().unwrap();
    assert!((sigma - 5.0).abs() < 1e-12);
    assert!((log_m - 5f64.ln()).abs() < 1e-12);
}

#[test]
fn eval_sample_rows() {
    let o = nevrand(&["eval", "exponential", "--r", "4", "--model", "gaussian", "--seed", "7", "--a", "1+1i"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for key in ["n_zero", "N_zero", "N_a", "T_omega", "X_r", "jensen_residual"] {
        row(&o, key);
    }
    let residual: f64 = row(&o, "jensen_residual").parse().unwrap();
    assert!(residual <= 1e-7);
}

#[test]
fn eval_root_on_circle_is_numeric_failure() {
    // f_ω = χ z with |χ| = 1, so f_ω = 2 has its root on |z| = 2.
    let o = nevrand(&["eval", "explicit-list:0,1", "--r", "2", "--model", "steinhaus", "--seed", "1", "--a", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("CircleRootProximity"));
}

#[test]
fn eval_validation_failures() {
    assert_eq!(nevrand(&["eval", "exponential", "--r", "-1"]).status.code(), Some(2));
    assert_eq!(nevrand(&["eval", "no-such-base", "--r", "1"]).status.code(), Some(2));
    assert_eq!(nevrand(&["eval", "exponential", "--r", "1", "--a", "1"]).status.code(), Some(2));
    assert_eq!(nevrand(&["bogus"]).status.code(), Some(2));
}

#[test]
fn smoke_verify_passes_with_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("smoke.toml");
    let o = nevrand(&["verify", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--workers", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "header plus one row");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 1);
    assert_eq!(report["pass"], true);
    assert_eq!(report["config"]["trials"], 1);
    assert!(report["version"].as_str().unwrap().starts_with("0.1.0"));
}

#[test]
fn seed_and_format_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("smoke.toml");
    let o = nevrand(&[
        "verify", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap(),
        "--seed", "99", "--format", "jsonl", "--workers", "auto",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let jsonl = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["trial_index"], 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn c_not_above_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.toml",
        "seed = 1\ntrials = 1\nradii = [5.0]\nmodel = \"gaussian\"\n[base]\nkind = \"exponential\"\n[constants]\nA = 1.8\nB = 1.0\nC = 1.0\n",
    );
    let o = nevrand(&["verify", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("C > 1 required"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "typo.toml",
        "seed = 1\ntrails = 1\nradii = [5.0]\nmodel = \"gaussian\"\n[base]\nkind = \"exponential\"\n[constants]\nA = 1.8\nB = 1.0\nC = 1.2\n",
    );
    let o = nevrand(&["verify", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trails"), "{}", stderr(&o));
}

#[test]
fn tails_below_statistical_floor() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("tails_steinhaus.toml");
    let body = std::fs::read_to_string(&config).unwrap();
    let body = body
        .lines()
        .map(|l| if l.starts_with("trials") { "trials = 10" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    let config = write_config(dir.path(), "few.toml", &body);
    let o = nevrand(&["tails", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("statistical floor"), "{}", stderr(&o));
}

#[test]
fn impossible_threshold_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "strict.toml",
        "seed = 3\ntrials = 20\nradii = [5.0, 10.0]\nmodel = \"gaussian\"\n[base]\nkind = \"exponential\"\n\
         [constants]\nA = 1.8181818181818181\nB = 1.0\nC = 1.2\n[thresholds]\nmax_violation_fraction = -1.0\n",
    );
    let o = nevrand(&["verify", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(dir.path().join("records.csv").exists());
    assert!(dir.path().join("report.json").exists());
}
