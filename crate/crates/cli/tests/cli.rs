use std::path::Path;
use std::process::{Command, Output};

use formdef_cli::commands::{cmd_obstruction, cmd_relations};
use formdef_cli::Status;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formdef"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const PLANAR: &str = r#"{
  "n": 2,
  "t0": ["0", "0", "s"],
  "t1": ["u", "0"],
  "t1tilde": ["-s", "v"],
  "t2": ["v"]
}"#;

const WITNESS: &str =
    r#"{"n": 2, "t0": ["0", "1", "0"], "t1": ["0", "0"], "t1tilde": ["0", "1"], "t2": ["0"]}"#;

#[test]
fn planar_document_relations_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "planar.json", PLANAR);
    let out = run(&["relations", "--params", &p]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("R1^0 = 0") && text.contains("R2~^0 = 0"));
}

#[test]
fn zero_document_has_zero_defect() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "zero.json",
        r#"{"n": 3, "t0": ["0","0","0","0"], "t1": ["0","0","0"], "t1tilde": ["0","0","0"], "t2": ["0","0"]}"#,
    );
    let out = run(&[
        "defect",
        "--params",
        &p,
        "--x",
        "[x1*x2, x3^2, 1]",
        "--y",
        "[x3, 0, x1^3]",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("defect vanishes"));
}

#[test]
fn witness_document_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "w.json", WITNESS);
    let report = dir.path().join("report.json");
    let out = run(&[
        "--out",
        report.to_str().unwrap(),
        "defect",
        "--params",
        &p,
        "--x",
        "[x1^2, 0]",
        "--y",
        "[0, x2^2]",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("R1^1 = 1"), "{stdout}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["status"], "flagged");
    assert!(!json["details"]["blocks"].as_array().unwrap().is_empty());
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify-cocycles", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let short = write(
        dir.path(),
        "short.json",
        r#"{"n": 2, "t0": ["0","0"], "t1": ["0","0"], "t1tilde": ["0","0"], "t2": ["0"]}"#,
    );
    let out = run(&["relations", "--params", &short]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t0"));

    let spatial = write(
        dir.path(),
        "x.json",
        r#"{"n": 2, "t0": ["0","0","x1"], "t1": ["0","0"], "t1tilde": ["0","0"], "t2": ["0"]}"#,
    );
    let out = run(&["relations", "--params", &spatial]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t0[2], column 1"));

    let undeclared = write(
        dir.path(),
        "u.json",
        r#"{"n": 2, "params": ["s"], "t0": ["0","0","q"], "t1": ["0","0"], "t1tilde": ["0","0"], "t2": ["0"]}"#,
    );
    let out = run(&["relations", "--params", &undeclared]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('q'));

    let out = run(&["obstruction", "--n", "2", "--k", "1", "--shift", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shift 2: k = 0..=0"));

    let out = run(&["mc2", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn obstruction_gamma1_not_a_coboundary() {
    let r = cmd_obstruction(2, 0, 1, 3, 2).unwrap();
    assert_eq!(r.status, Status::Pass);
    assert_eq!(r.details["cells"][0]["status"], "NOT-A-COBOUNDARY");
    assert!(r.details["cells"][0]["certificate"]["rows"]
        .as_array()
        .is_some_and(|a| !a.is_empty()));
}

#[test]
fn examples_by_numeric_id() {
    let out = run(&["examples", "--which", "6.1", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("densities, n = 2"));
    let out = run(&["examples", "--which", "6.3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn uniform_three_dimensions_lists_examples_and_flags_extra() {
    let out = run(&["--json", "uniform", "--n", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["status"], "flagged");
    let comps = json["details"]["solution"]["components"]
        .as_array()
        .unwrap();
    let examples: Vec<&str> = comps.iter().filter_map(|c| c["example"].as_str()).collect();
    assert_eq!(examples, ["densities", "second-order"]);
    assert!(comps.iter().any(|c| c["discrepancy"] == true));
}

#[test]
fn mc2_three_dimensions_has_shift_three_row() {
    let out = run(&["--json", "mc2", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let blocks = json["details"]["sign_table"].as_array().unwrap();
    let shift3: Vec<_> = blocks.iter().filter(|b| b["shift"] == 3).collect();
    assert_eq!(shift3.len(), 1);
    assert_eq!(shift3[0]["matrix"], serde_json::json!([["1"]]));
}

#[test]
fn relations_report_echoes_command() {
    let r = cmd_relations(WITNESS, "w.json").unwrap();
    assert_eq!(r.command, "relations --params w.json");
    assert_eq!(r.status, Status::Flagged);
    assert_eq!(r.details["relations"].as_array().unwrap().len(), 4);
}
