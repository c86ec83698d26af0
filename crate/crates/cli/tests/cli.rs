use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn csrr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csrr")).args(args).output().expect("binary runs")
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_csrr"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn reports(out: &Output) -> Vec<Value> {
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    v.as_array().expect("array of reports").clone()
}

fn statuses(out: &Output) -> Vec<String> {
    reports(out).iter().map(|r| r["status"].as_str().unwrap().to_string()).collect()
}

#[test]
fn both_sides_agree_on_the_degree_two_example() {
    let path = problem("degree_two.json");
    let out = csrr(&["verify-rr", "--n", "2", "--symbolic", "--numeric", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(statuses(&out), ["pass", "pass"]);
    let r = &reports(&out)[0];
    assert_eq!(r["check"], "verify-rr-symbolic");
    assert!(!r["params"]["value"].as_array().unwrap().is_empty());
}

#[test]
fn trace_monomials_by_number_or_name() {
    let path = problem("nonabelian.json");
    for name in ["4.3", "trace-monomials"] {
        let out = csrr(&["verify-identities", "--lemma", name, "--len", "3", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let s = statuses(&out);
        assert_eq!(s.len(), 14, "words of length 1..=3");
        assert!(s.iter().all(|x| x == "pass"));
    }
}

#[test]
fn problem_free_identities() {
    let out = csrr(&["verify-identities", "--lemma", "dlog-wedge", "--len", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let out = csrr(&["verify-identities", "--lemma", "root-sums", "--len", "3", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(statuses(&out).len(), 11, "every J for δ ≤ 3");
}

#[test]
fn pushforward_of_the_square_root() {
    let out = csrr(&["pushforward", problem("quadratic.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let det = reports(&out).into_iter().find(|r| r["check"] == "pushforward-det-duality").unwrap();
    assert_eq!(det["params"]["value"], "4*s");
    let out = csrr(&["pushforward", problem("split.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(reports(&out).iter().any(|r| r["check"] == "pushforward-split-case"));
}

#[test]
fn grid_runs_without_a_problem() {
    let out = csrr(&["verify-rr", "--grid", "2,2,2", "--seed", "3", "--symbolic"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(statuses(&out).len() >= 4);
}

#[test]
fn reports_are_deterministic() {
    let path = problem("degree_two.json");
    let args = ["verify-rr", "--n", "2", "--numeric", "--seed", "11", path.to_str().unwrap()];
    let strip = |o: &Output| {
        let mut v = reports(o);
        for r in &mut v {
            r.as_object_mut().unwrap().remove("millis");
        }
        v
    };
    assert_eq!(strip(&csrr(&args)), strip(&csrr(&args)));
}

#[test]
fn stdin_problem() {
    let text = std::fs::read_to_string(problem("degree_two.json")).unwrap();
    let out = with_stdin(&["check-basic", "-"], &text);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(reports(&out)[0]["check"], "check-basic");
}

#[test]
fn bad_input_exits_with_two() {
    let out = with_stdin(&["gm", "-"], "{\"connection\": {\"N\": 1,}}");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let clash = r#"{"connection": {"N": 1, "delta": 2,
        "points": [{"symbol": "a1"}, {"symbol": "a1"}],
        "residues": [[["1"]], [["1", "2"]]], "phi": [[[]]]}}"#;
    let out = with_stdin(&["gm", "-"], clash);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    // every violation is listed, not only the first
    assert!(err.contains("a1"), "{err}");
    assert!(err.contains("residues"), "{err}");

    let out = csrr(&["verify-identities", "--lemma", "9.9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = csrr(&["gm", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_with_one() {
    // curvature with a fiber component: not basic, but a well-formed problem
    let text = r#"{"parameters": ["t1"], "connection": {"N": 1, "delta": 1,
        "points": [{"symbol": "a1"}], "residues": [[["t1"]]], "phi": [[[]]]}}"#;
    let out = with_stdin(&["check-basic", "-"], text);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(statuses(&out), ["fail"]);
}
