use std::path::Path;
use std::process::{Command, Output};

fn kop(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kop"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn scenario_without_out_prints_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = kop(dir.path(), &["scenario", "lamp"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("AGENTS 1"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("3 runs"));
    let sys = kop_cli::document::parse(&text).unwrap();
    assert_eq!(kop_cli::document::render(&sys), text);
}

#[test]
fn random_scenarios_depend_only_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = stdout(&kop(dir.path(), &["scenario", "random", "--seed", "11"]));
    let b = stdout(&kop(dir.path(), &["scenario", "random", "--seed", "11"]));
    let c = stdout(&kop(dir.path(), &["scenario", "random", "--seed", "12"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn eval_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    kop(dir.path(), &["scenario", "message", "--out", "m.sys"]);
    let yes = kop(dir.path(), &["eval", "m.sys", "delivered", "--at", "r_del,2"]);
    assert_eq!((code(&yes), stdout(&yes).trim()), (0, "T"));
    let no = kop(dir.path(), &["eval", "m.sys", "K[Alice] delivered", "--at", "r_del,2"]);
    assert_eq!((code(&no), stdout(&no).trim()), (1, "F"));
    let never = kop(dir.path(), &["eval", "m.sys", "K[Alice] delivered", "--earliest", "r_del"]);
    assert_eq!(stdout(&never).trim(), "never");
    assert_eq!(code(&kop(dir.path(), &["eval", "m.sys", "delivered", "--at", "nope,0"])), 3);
    assert_eq!(code(&kop(dir.path(), &["eval", "m.sys", "delivered", "--at", "r_del,9"])), 3);
}

#[test]
fn check_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    kop(dir.path(), &["scenario", "lamp", "--out", "l.sys"]);
    let out = kop(dir.path(), &["check", "l.sys", "local", "switch", "lit"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAILS at ("));
}

#[test]
fn verify_writes_report_with_null_conclusion_on_hypothesis_failure() {
    let dir = tempfile::tempdir().unwrap();
    kop(dir.path(), &["scenario", "chain", "--k", "3", "--forgetful", "--out", "c.sys"]);
    let out = kop(
        dir.path(),
        &["--report", "r.json", "verify", "c.sys", "nkop", "--psi", "psi_input"],
    );
    assert_eq!(code(&out), 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(json["conclusion"].is_null());
    assert!(json["note"].as_str().unwrap().contains("conclusion not asserted"));
}

#[test]
fn malformed_document_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.sys"), "AGENTS 1\nHORIZON x\n").unwrap();
    let out = kop(dir.path(), &["eval", "bad.sys", "true"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn budget_exceeded() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&kop(dir.path(), &["--budget", "10", "scenario", "ctm"])), 4);
    assert_eq!(code(&kop(dir.path(), &["--budget", "10", "scenario", "lamp"])), 0);
}

#[test]
fn usage_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&kop(dir.path(), &["frobnicate"])), 3);
    assert_eq!(code(&kop(dir.path(), &["--help"])), 0);
}
