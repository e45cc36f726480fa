use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hstruct")).arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn run_text(text: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, text).unwrap();
    let out = run(&config, &dir.path().join("out"), extra);
    (out, dir)
}

#[test]
fn shipped_configs_exit_as_documented() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let dir = tempfile::tempdir().unwrap();
        let out = run(&path, dir.path(), &["--jobs", "2"]);
        let expected = if name == "bad_modulus" { 1 } else { 0 };
        assert_eq!(out.status.code(), Some(expected), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        if expected == 0 {
            assert!(dir.path().join("summary.json").exists(), "{name}");
        }
    }
}

#[test]
fn non_prime_modulus_is_a_config_error() {
    let (out, dir) = run_text(r#"{"family": {"p": [4], "m": [2]}, "task": "count", "formulas": {"a": "H(x)"}}"#, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-prime modulus"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_json_and_missing_files_are_config_errors() {
    let (out, _dir) = run_text("{ not json", &[]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = run(&dir.path().join("absent.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn wrong_expectation_is_a_verification_failure() {
    let text = r#"{
        "family": {"p": [5], "m": [8]},
        "task": "check-measuring",
        "candidates": {"c": {"target": "exists z1 in H. exists z2 in H. x = z1 + 2*z2", "phi": "x = z1 + 2*z2", "expect": "pass"}}
    }"#;
    let (out, dir) = run_text(text, &[]);
    assert_eq!(out.status.code(), Some(2));
    let report = fs::read_to_string(dir.path().join("out/check-measuring.json")).unwrap();
    assert!(report.contains("\"iii\": false"), "{report}");
}

#[test]
fn overlapping_parts_fail_additivity() {
    let text = r#"{
        "family": {"p": [5], "m": [4, 8, 16]},
        "task": "verify-additivity",
        "formulas": {"h": "H(x)", "first": "x = e1"},
        "pairs": [["h", "first"]]
    }"#;
    let (out, _dir) = run_text(text, &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tiny_budget_exits_three() {
    let text = r#"{
        "family": {"p": [5], "m": [4, 8]},
        "task": "count",
        "formulas": {"hh": "exists z1 in H. exists z2 in H. x = z1 + z2"},
        "strategy": "enumerate"
    }"#;
    let (out, dir) = run_text(text, &["--budget", "10"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/summary.json").exists());
}

#[test]
fn config_error_outranks_budget() {
    let (out, _dir) = run_text(r#"{"family": {"p": [9], "m": [4]}, "task": "count", "formulas": {"a": "H(x)"}}"#, &["--budget", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_do_not_depend_on_jobs() {
    let config = configs().join("check_measuring.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(&config, a.path(), &["--jobs", "1"]).status.code(), Some(0));
    assert_eq!(run(&config, b.path(), &["--jobs", "4"]).status.code(), Some(0));
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}
