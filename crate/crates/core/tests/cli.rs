use std::path::Path;
use std::process::{Command, Output};

use specgap::cli::{validate, ExperimentKind};

fn specgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specgap")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("stderr carries one JSON document")
}

#[test]
fn empty_config_exits_with_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let o = specgap(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["kind"], "schema");
    assert!(!err["errors"].as_array().unwrap().is_empty());
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"gauss","n":4,"colour":"red"}"#);
    let o = specgap(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn failed_hypothesis_exits_with_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    // phi' vanishes at 0
    let cfg = write_config(dir.path(), r#"{"experiment":"theorem_a","phase":{"phi":[0,0,1]}}"#);
    let out = dir.path().join("out");
    let o = specgap(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["kind"], "precondition");
    assert!(!out.join("metadata.json").exists());
}

#[test]
fn io_failures_exit_with_code_four() {
    let o = specgap(&["run", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"gauss","n":4}"#);
    // output directory collides with an existing file
    let o = specgap(&["run", &cfg, "--out", &cfg]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn picket_fence_pcf_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment":"pcf","phase":{"phi":[0,1]},"window":{"kind":"fejer","c":0.8},"n":256,"t":0.00390625}"#,
    );
    let out = dir.path().join("out");
    let o = specgap(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = std::fs::read_to_string(out.join("stats.jsonl")).unwrap();
    let row: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert!((row["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(row["params"]["ell_max"], 205);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 0);
    assert_eq!(meta["config"]["ell_max"], 205);
    assert!(meta["rng"].as_str().unwrap().contains("ChaCha20"));
    assert!(meta["wall_time_seconds"].is_number());
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn gauss_table_follows_residue_classes() {
    let dir = tempfile::tempdir().unwrap();
    let list: Vec<String> = (1..=64).map(|n| n.to_string()).collect();
    let cfg = write_config(dir.path(), &format!(r#"{{"experiment":"gauss","n_list":[{}]}}"#, list.join(",")));
    let out = dir.path().join("out");
    assert!(specgap(&["run", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let mut rdr = csv::Reader::from_path(out.join("gauss.csv")).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let ell: u64 = rec[0].parse().unwrap();
        let n: u64 = rec[1].parse().unwrap();
        let mag: f64 = rec[2].parse().unwrap();
        if num_integer::gcd(ell, n) == 1 {
            let expected = match n % 4 {
                1 | 3 => (n as f64).sqrt(),
                0 => (2.0 * n as f64).sqrt(),
                _ => 0.0,
            };
            assert!((mag - expected).abs() < 1e-12, "l={ell} n={n}");
        }
        rows += 1;
    }
    assert_eq!(rows, 64 * 65 / 2);
}

#[test]
fn validate_prints_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"sweep","phase":{"phi":[0,0,1]},"n":64}"#);
    let o = specgap(&["validate", &cfg]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 0);
    assert_eq!(v["num_samples"], 200);
    assert_eq!(v["T"], 1.0);
    // the printed config validates to itself
    let again = validate(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(&again).unwrap(), v);
}

#[test]
fn validate_reports_each_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"pcf","n":0,"window":{"kind":"fejer","c":0}}"#);
    let o = specgap(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let errs = stderr_json(&o)["errors"].as_array().unwrap().clone();
    assert!(errs.iter().any(|e| e == "n must be ≥ 1"));
    assert!(errs.iter().any(|e| e.as_str().unwrap().starts_with("window.c")));
    assert!(errs.len() >= 3);
}

#[test]
fn list_experiments_names_all_twelve() {
    let o = specgap(&["list-experiments"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    for k in ExperimentKind::ALL {
        assert!(text.lines().any(|l| l.starts_with(k.name())));
    }
}
