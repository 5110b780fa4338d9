//! Exit-code contract and cross-subcommand behavior.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_confip"))
}

fn run_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn confip");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().expect("confip run")
}

#[test]
fn usage_errors_exit_64() {
    let out = run_with_stdin(&["frobnicate"], "");
    assert_eq!(out.status.code(), Some(64));
    let out = run_with_stdin(&["gen", "--seed", "1"], "");
    assert_eq!(out.status.code(), Some(64));
    let out = run_with_stdin(&["solve", "--eps", "0.3"], "1 1\n5\n");
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn decide_exit_codes() {
    // p = [3,3,2,2,2] on two machines packs at 6 (OPT). The decision is
    // one-sided, so the certified "no" needs a target whose slacked
    // capacity cannot hold the volume; 3 is one (OPT = 6 > 3).
    let instance = "2 5\n3\n3\n2\n2\n2\n";
    let yes = run_with_stdin(&["decide", "--T", "6", "--eps", "1/4"], instance);
    assert_eq!(yes.status.code(), Some(0));
    let no = run_with_stdin(&["decide", "--t", "3", "--eps", "1/4"], instance);
    assert_eq!(no.status.code(), Some(1));
    // A tiny node budget is exhaustion (2), not a verdict.
    let capped = run_with_stdin(
        &["decide", "--t", "6", "--eps", "1/8", "--max-nodes", "1"],
        instance,
    );
    assert_eq!(capped.status.code(), Some(2));
}

#[test]
fn solve_output_passes_verify() {
    let dir = std::env::temp_dir().join(format!("confip-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let gen = run_with_stdin(&["gen", "--seed", "3", "--n", "12", "--m", "3", "--pmax", "30"], "");
    let instance = String::from_utf8(gen.stdout).unwrap();
    let instance_path = dir.join("instance.txt");
    std::fs::write(&instance_path, &instance).unwrap();

    for mode in ["paper", "oracle"] {
        let solved = run_with_stdin(&["solve", "--eps", "1/4", "--mode", mode], &instance);
        assert_eq!(solved.status.code(), Some(0));
        let schedule_path = dir.join(format!("schedule-{mode}.txt"));
        std::fs::write(&schedule_path, &solved.stdout).unwrap();
        let verified = run_with_stdin(
            &[
                "verify",
                "--instance",
                instance_path.to_str().unwrap(),
                "--schedule",
                schedule_path.to_str().unwrap(),
            ],
            "",
        );
        assert_eq!(verified.status.code(), Some(0), "{mode} schedule failed verify");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_rejects_tampered_schedule() {
    let dir = std::env::temp_dir().join(format!("confip-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let instance_path = dir.join("instance.txt");
    std::fs::write(&instance_path, "2 2\n1\n1\n").unwrap();
    let schedule_path = dir.join("schedule.txt");
    std::fs::write(&schedule_path, "makespan 2\n0 1\n").unwrap();
    let out = run_with_stdin(
        &[
            "verify",
            "--instance",
            instance_path.to_str().unwrap(),
            "--schedule",
            schedule_path.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mismatch"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_writes_decision_trace() {
    let dir = std::env::temp_dir().join(format!("confip-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace_path = dir.join("trace.txt");
    let out = run_with_stdin(
        &["solve", "--eps", "1/4", "--trace", trace_path.to_str().unwrap()],
        "2 5\n3\n3\n2\n2\n2\n",
    );
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    for line in trace.lines() {
        assert!(line.starts_with("step="), "bad trace line {line:?}");
        assert!(line.contains("kind=decide"));
        assert!(line.contains("verdict="));
    }
    assert!(!trace.is_empty());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn thin_reports_properties() {
    let out = run_with_stdin(&["thin"], "3 3\n1 1 1\n2 2 2\n2\n1\n(1,1,1) 2\n");
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("properties multiplicity=ok support=ok mass=ok"));
    assert!(text.contains("kind=split"));
}

#[test]
fn gen_rejects_degenerate_parameters() {
    let out = run_with_stdin(&["gen", "--seed", "1", "--n", "0", "--m", "2", "--pmax", "5"], "");
    assert_eq!(out.status.code(), Some(64));
}
