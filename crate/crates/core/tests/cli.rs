use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-forge"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SPECTRAL_FORGE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn two_point_distance_prints_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["distance", "--model", "two_point", "--pair", "delta1,delta2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "1.000000000");
    assert!(dir.path().join("distance.json").exists());
    assert!(dir.path().join("distance.meta.json").exists());
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"model": {"model": "podles", "Q": 0.5}}"#).unwrap();
    let out = dir.path().join("out");
    let o = run(&out, &["--config", cfg.to_str().unwrap(), "build"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["build", "--model", "torus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["verify"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["verify", "--suite", "bounds7", "--model", "podles", "--lambda", "0", "--N", "4"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"model": {"model": "podles", "N": 4, "q": 0.3}, "output": {"format": "json"}}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "build", "--N", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["model"]["N"], 6);
    assert_eq!(v["config"]["model"]["q"].as_f64(), Some(0.3));
    assert_eq!(v["kind"], "build");
}

#[test]
fn payloads_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "--suite", "bounds7", "--model", "podles", "--N", "6", "--samples", "12", "--seed", "3"];
    let mut one = vec!["--threads", "1"];
    one.extend(args);
    let mut four = vec!["--threads", "4"];
    four.extend(args);
    assert_eq!(run(a.path(), &one).status.code(), Some(0));
    assert_eq!(run(b.path(), &four).status.code(), Some(0));
    let pa = fs::read(a.path().join("verify-bounds7.json")).unwrap();
    let pb = fs::read(b.path().join("verify-bounds7.json")).unwrap();
    assert_eq!(pa, pb);
}

#[test]
fn report_lists_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["verify", "--suite", "relations", "--model", "suq2", "--N", "8", "--W", "8"]).status.code(), Some(0));
    let o = run(dir.path(), &["report", "--expect", "verify-relations,distance"]);
    assert_eq!(o.status.code(), Some(0));
    let md = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("verify-relations"));
    assert!(md.contains("distance"));
    let idx: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("index.json")).unwrap()).unwrap();
    assert_eq!(idx["absent"][0], "distance");
}

#[test]
fn sweep_q_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["sweep-q", "--model", "podles", "--N", "4", "--degree-cap", "1", "--fourier-degree", "2", "--from", "0.3", "--to", "0.4", "--step", "0.05", "--max-iter", "2000"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep-q.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("q,pair_id,distance"));
}
