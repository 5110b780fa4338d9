//! Criterion 10 (determinism) and the fixed CSV golden: every subcommand is
//! byte-identical across two runs with the same seed and flags.

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

fn instance_text() -> String {
    let out = run_with_stdin(&["gen", "--seed", "11", "--n", "14", "--m", "3", "--pmax", "40"], "");
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn criterion_10_determinism() {
    let instance = instance_text();
    let confip_input = "3 3\n1 1 1\n2 2 2\n2\n1\n(1,1,1) 2\n";
    let manifest = env!("CARGO_MANIFEST_DIR").to_string() + "/../../bench/manifest.csv";
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["gen", "--seed", "7", "--n", "5", "--m", "2", "--pmax", "50"], ""),
        (vec!["configs", "--sizes", "1,2,3", "--capacity", "6"], ""),
        (
            vec!["sparsify", "--sizes", "1,1,1,1", "--capacity", "4", "--config", "(1,1,1,1)"],
            "",
        ),
        (vec!["decide", "--t", "80", "--eps", "1/4"], instance.as_str()),
        (vec!["decide", "--t", "80", "--eps", "1/4", "--mode", "oracle"], instance.as_str()),
        (vec!["solve", "--eps", "1/4"], instance.as_str()),
        (vec!["solve", "--eps", "1/5", "--mode", "oracle"], instance.as_str()),
        (vec!["solve", "--eps", "1/8"], instance.as_str()),
        (
            vec!["solve-obj", "--kind", "sum-min", "--f", "power:2", "--eps", "1/4"],
            instance.as_str(),
        ),
        (
            vec!["solve-obj", "--kind", "max-min", "--f", "identity", "--eps", "1/4"],
            instance.as_str(),
        ),
        (vec!["thin"], confip_input),
        (vec!["bench", "--manifest", &manifest, "--zero-ms"], ""),
    ];
    for (args, stdin) in cases {
        let a = run_with_stdin(&args, stdin);
        let b = run_with_stdin(&args, stdin);
        assert_eq!(
            a.status.code(),
            b.status.code(),
            "exit codes differ for {args:?}"
        );
        assert_eq!(a.stdout, b.stdout, "stdout differs for {args:?}");
        assert_eq!(a.stderr, b.stderr, "stderr differs for {args:?}");
    }
    println!("criterion 10 determinism: PASS (12 subcommand invocations byte-identical)");
}

#[test]
fn bench_csv_header_is_pinned() {
    let manifest = env!("CARGO_MANIFEST_DIR").to_string() + "/../../bench/manifest.csv";
    let out = run_with_stdin(&["bench", "--manifest", &manifest, "--zero-ms", "--no-oracle"], "");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "id,n,m,eps,mode,value,oracle,ratio,ms,budget_hit"
    );
    // Rows are sorted by id and complete.
    let ids: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert_eq!(ids.len(), 24);
}
