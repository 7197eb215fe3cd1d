//! End-to-end tests for the command-line interface: counts, exit codes,
//! determinism of reports, resumption, and aggregation.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bdtwist"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn scratch(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("bdtwist-cli-test-{}-{name}", std::process::id()));
    let _ = fs::remove_file(&p);
    p
}

#[test]
fn enumerate_counts() {
    let out = run(&["enumerate", "--n", "2"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["count"], 1);

    let out = run(&["enumerate", "--n", "3"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["count"], 3);
}

#[test]
fn enumerate_generalized_cg_filter_counts_phi() {
    let out = run(&["enumerate", "--n", "5", "--filter", "generalized-cg"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["count"], 4, "phi(5) = 4");
}

#[test]
fn enumerate_rejects_dimension_over_cap() {
    let out = run(&["enumerate", "--n", "12"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_small_sweep_passes() {
    let out = run(&["verify", "--n", "4", "--checks", "qybe,hecke,twist-eq"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_single_triple_classical_limit() {
    let out = run(&["verify", "--n", "3", "--triple", "a1->a2", "--checks", "classical-limit"]);
    assert_eq!(out.status.code(), Some(0));
    let line = stdout(&out);
    assert!(line.contains("\"classical-ggs\":{\"status\":\"pass\"}"));
}

#[test]
fn verify_accepts_json_triple() {
    let out = run(&["verify", "--triple", r#"{"n":3,"tau":{"1":2}}"#, "--checks", "twist-eq"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_rejects_unknown_check() {
    let out = run(&["verify", "--n", "3", "--checks", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_rejects_invalid_triple() {
    let out = run(&["verify", "--triple", "n=3; a1->a1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_fixture_fails_with_witness() {
    let out = run(&["verify", "--n", "3", "--inject-corruption"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("\"status\":\"fail\""));
    assert!(text.contains("\"witness\""));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = run(&["verify", "--n", "4", "--jobs", "2"]);
    let b = run(&["verify", "--n", "4", "--jobs", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn resume_skips_completed_triples() {
    let path = scratch("resume.ndjson");
    let out = run(&["verify", "--n", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let first = fs::read_to_string(&path).unwrap();
    assert_eq!(first.lines().count(), 3);

    let out = run(&["verify", "--n", "3", "--out", path.to_str().unwrap(), "--resume"]);
    assert_eq!(out.status.code(), Some(0));
    let second = fs::read_to_string(&path).unwrap();
    assert_eq!(first, second, "resumed run must not duplicate reports");
    let _ = fs::remove_file(&path);
}

#[test]
fn report_aggregates_and_formats_agree() {
    let path = scratch("report.ndjson");
    let out = run(&["verify", "--n", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let json_out = run(&["report", "--input", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(json_out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    assert_eq!(doc["count"], 3);
    let rows = doc["rows"].as_array().unwrap();

    let csv_out = run(&["report", "--input", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(csv_out.status.code(), Some(0));
    let csv_text = stdout(&csv_out);
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let data: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
    assert_eq!(data.len(), rows.len());
    // Row-for-row agreement between the two renderings.
    for (line, row) in data.iter().zip(rows) {
        let cells: Vec<&str> = line.split(',').collect();
        let triple = row.pointer("/triple/text").unwrap().as_str().unwrap();
        assert_eq!(cells[1].replace('"', ""), triple);
        for (idx, name) in header.iter().enumerate() {
            if let Some(status) = row.pointer(&format!("/checks/{name}/status")) {
                assert_eq!(cells[idx], status.as_str().unwrap());
            }
        }
    }

    let missing = run(&["report", "--input", "/nonexistent/path"]);
    assert_eq!(missing.status.code(), Some(2));
    let _ = fs::remove_file(&path);
}

#[test]
fn report_on_empty_directory_is_empty() {
    let mut dir = std::env::temp_dir();
    dir.push(format!("bdtwist-cli-test-{}-empty", std::process::id()));
    let _ = fs::create_dir_all(&dir);
    let out = run(&["report", "--input", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["count"], 0);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn io_failure_exits_3() {
    let out = run(&["verify", "--n", "3", "--out", "/nonexistent-dir/report.ndjson"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn emit_twist_includes_layers() {
    let out = run(&["verify", "--n", "3", "--triple", "a1->a2", "--emit-twist"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(stdout(&out).lines().next().unwrap()).unwrap();
    let layers = doc["twist"]["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 1);
    assert_eq!(layers[0]["support"][0]["k"], serde_json::json!(["1", "2"]));
}

#[test]
fn classify_reports_flags() {
    let out = run(&["classify", "--triple", "n=3; a1->a2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("cg"));
    assert!(text.contains("disjoint"));
}

#[test]
fn perturbed_r0_checks_pass() {
    let out = run(&["verify", "--n", "3", "--perturb-r0", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("qybe-ggs-perturbed"));
}
