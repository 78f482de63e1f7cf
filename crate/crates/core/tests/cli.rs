use std::fs;
use std::path::PathBuf;

use wigner_lab::cli::{run_cli, EXIT_DIAGNOSTICS, EXIT_EXPECTATION, EXIT_OK};

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
        .display()
        .to_string()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut all = vec!["wigner-lab"];
    all.extend_from_slice(args);
    let code = run_cli(all, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn temp_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wigner-lab-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn check_passes_on_default() {
    let (code, out, _) = cli(&["check", &example("fr_default.scn")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("SQ_W"));
}

#[test]
fn run_json_reports_the_twelfth() {
    let (code, out, _) = cli(&["run", "--json", "--exact", &example("fr_default.scn")]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["scenario"], "fr_default");
    assert_eq!(out.matches("1/12").count(), 3);
}

#[test]
fn expectation_mismatch_exits_two() {
    let text = fs::read_to_string(example("fr_default.scn"))
        .unwrap()
        .replacen("expect HOLDS", "expect FAILS", 1);
    let path = temp_file("mismatch.scn", &text);
    let (code, out, _) = cli(&["check", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_EXPECTATION);
    assert!(out.contains("MISMATCH"));
}

#[test]
fn diagnostics_exit_one() {
    let path = temp_file("empty.scn", "");
    let (code, _, err) = cli(&["check", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_DIAGNOSTICS);
    assert!(err.contains("no preparation"));

    let path = temp_file("decimal.scn", "factor coin { heads, tails }\nprepare coin = 0.5 heads\n");
    let (code, _, err) = cli(&["run", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_DIAGNOSTICS);
    assert!(err.contains("decimal.scn:2:"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cli(&["frobnicate"]).0, EXIT_DIAGNOSTICS);
    assert_eq!(cli(&["run", "/nonexistent/x.scn"]).0, EXIT_DIAGNOSTICS);
    assert_eq!(cli(&["--tolerance", "-1", "matrix"]).0, EXIT_DIAGNOSTICS);
    assert_eq!(cli(&["matrix", "--suite", "other"]).0, EXIT_DIAGNOSTICS);
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
}

#[test]
fn matrix_and_sample_succeed() {
    let (code, out, _) = cli(&["matrix", "--json"]);
    assert_eq!(code, EXIT_OK);
    serde_json::from_str::<serde_json::Value>(&out).unwrap();
    let log = temp_file("log.jsonl", "");
    let (code, out, _) = cli(&[
        "sample",
        &example("fr_beable_flip.scn"),
        "--n",
        "200",
        "--seed",
        "7",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(fs::read_to_string(&log).unwrap().lines().count(), 200);
    let again = cli(&["sample", &example("fr_beable_flip.scn"), "--n", "200", "--seed", "7"]).1;
    assert_eq!(out, again);
}
