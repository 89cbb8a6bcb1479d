//! End-to-end runs of the `echo-squeeze` binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_echo-squeeze"))
}

#[test]
fn verify_passes_every_suite() {
    let out = bin().arg("verify").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
    assert!(text.trim_end().ends_with("all invariants pass"));
}

#[test]
fn fringe_writes_csv_to_stdout() {
    let out = bin().args(["fringe", "--n", "20", "--protocol", "gesp-e", "--phi-grid", "-0.1:0.1:5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let columns = lines.next().unwrap().split(',').count();
    assert!(lines.all(|l| l.split(',').count() == columns));
}

#[test]
fn bad_arguments_exit_with_code_two() {
    let out = bin().args(["scan-mu", "--mu-grid", "1:0:x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}
