//! Black-box tests of the `occulaw` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_occulaw"))
}

fn write_generator(dir: &tempfile::TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path
}

const THETA11: &str = r#"{"m": 2, "entries": [[-1.0, 1.0], [1.0, -1.0]]}"#;
const G_RIGHT: &str = r#"{"m": 3, "entries": [[-0.4, 0.2, 0.2], [0.3, -0.6, 0.3], [0.5, 0.5, -1.0]]}"#;

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn validate_reports_ok() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", THETA11);
    let out = bin().args(["validate", "--generator"]).arg(&g).output().unwrap();
    let text = stdout_of(&out);
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["ok"], true);
    assert_eq!(parsed["m"], 2);
}

#[test]
fn validate_rejects_bad_rows_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "bad.json", r#"{"m": 2, "entries": [[-1.0, 0.5], [1.0, -1.0]]}"#);
    let out = bin().args(["validate", "--generator"]).arg(&g).output().unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "row_sum_violation");
}

#[test]
fn missing_generator_file_fails_cleanly() {
    let out = bin()
        .args(["validate", "--generator", "/nonexistent/g.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "io");
}

#[test]
fn stationary_csv_has_metadata_line() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", G_RIGHT);
    let out = bin()
        .args(["stationary", "--format", "csv", "--generator"])
        .arg(&g)
        .output()
        .unwrap();
    let text = stdout_of(&out);
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# occulaw "));
    assert!(meta.contains("config_hash="));
    assert_eq!(lines.next().unwrap(), "state,nu");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert!((first[1].parse::<f64>().unwrap() - 15.0 / 31.0).abs() < 1e-12);
}

#[test]
fn moments_csv_reports_known_value() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", THETA11);
    let out = bin()
        .args(["moments", "--gamma", "2,0", "--generator"])
        .arg(&g)
        .output()
        .unwrap();
    let text = stdout_of(&out);
    let row = text.lines().nth(2).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "2;0");
    assert!((fields[1].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(fields[2], "permutation_formula");
}

#[test]
fn ensemble_runs_are_byte_identical_for_equal_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", G_RIGHT);
    let run = |out_name: &str, seed: &str| {
        let path = dir.path().join(out_name);
        let status = bin()
            .args(["ensemble", "--zeta", "1", "--n", "500", "--replicas", "20", "--seed", seed])
            .arg("--generator")
            .arg(&g)
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&path).unwrap()
    };
    let a = run("a.csv", "42");
    let b = run("b.csv", "42");
    let c = run("c.csv", "43");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().next().unwrap().contains("seed=42"));
    assert_eq!(text.lines().nth(1).unwrap(), "replica_index,Z_1,Z_2,Z_3,switch_count,final_state");
    // header + metadata + 20 replicas
    assert_eq!(text.lines().count(), 22);
}

#[test]
fn thread_env_var_does_not_change_ensemble_output() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", G_RIGHT);
    let run = |threads: &str| {
        let out = bin()
            .args(["ensemble", "--zeta", "1", "--n", "300", "--replicas", "8", "--seed", "9"])
            .arg("--generator")
            .arg(&g)
            .env("OCCULAW_THREADS", threads)
            .output()
            .unwrap();
        stdout_of(&out)
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn exact_law_csv_sums_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", THETA11);
    let out = bin()
        .args(["exact", "--zeta", "1", "--n", "6", "--generator"])
        .arg(&g)
        .output()
        .unwrap();
    let text = stdout_of(&out);
    let mass: f64 = text
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn spec_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", THETA11);
    let spec_path = dir.path().join("exp.json");
    std::fs::write(
        &spec_path,
        format!(
            r#"{{"generator": "{}", "zeta": 1.0, "n": 6, "gamma": "1,0"}}"#,
            g.display()
        ),
    )
    .unwrap();
    let out = bin().arg("exact").arg("--spec").arg(&spec_path).output().unwrap();
    let text = stdout_of(&out);
    assert!(text.lines().nth(1).unwrap().starts_with("gamma"));
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[0], "1;0");
    assert!((row[1].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);

    // unknown fields are rejected
    std::fs::write(&spec_path, r#"{"generator": "g.json", "bogus": 1}"#).unwrap();
    let out = bin().arg("validate").arg("--spec").arg(&spec_path).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn figure2_csv_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", G_RIGHT);
    let out = bin()
        .args(["figure2", "--n", "200", "--replicas", "30", "--seed", "5", "--bins", "4"])
        .arg("--generator")
        .arg(&g)
        .output()
        .unwrap();
    let text = stdout_of(&out);
    assert_eq!(text.lines().nth(1).unwrap(), "bin_x,bin_y,count");
    let total: u64 = text
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 30);
}

#[test]
fn regime_report_emits_all_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_generator(&dir, "g.json", G_RIGHT);
    let out = bin()
        .args(["regime-report", "--zeta", "0.5,1,1.5", "--n", "400", "--replicas", "10", "--seed", "2"])
        .arg("--generator")
        .arg(&g)
        .output()
        .unwrap();
    let text = stdout_of(&out);
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let blocks = report["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 3);
    assert_eq!(blocks[0]["regime"], "subcritical");
    assert_eq!(blocks[1]["regime"], "critical");
    assert_eq!(blocks[2]["regime"], "supercritical");
    assert!(blocks[1]["moment_table"].as_array().is_some());
    assert!(blocks[0]["moment_table"].is_null());
}

#[test]
fn dirichlet_check_is_self_consistent() {
    let out = bin()
        .args(["dirichlet-check", "--theta", "0.8,1.2,2.5", "--max-degree", "3", "--format", "json"])
        .output()
        .unwrap();
    let text = stdout_of(&out);
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(parsed["max_abs_error"].as_f64().unwrap() < 1e-12);
}
