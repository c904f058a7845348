use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use wittfield_core::textio::from_json;
use wittfield_core::StabilizationReport;

fn wittfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wittfield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("wittfield-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

fn json_error(o: &Output) -> Value {
    let v: Value = serde_json::from_str(stdout(o).trim()).expect("JSON error object");
    v["error"].clone()
}

#[test]
fn bracket_example() {
    let o = wittfield(&["bracket", "d1", "x1 d2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "d2\n");
}

#[test]
fn h1_example() {
    let o = wittfield(&["h1", "--n", "2", "--k", "-1", "--max-var", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0\n");
}

#[test]
fn solve_inner_example() {
    let o = wittfield(&[
        "solve-inner",
        "--gens",
        "L",
        "--n",
        "2",
        "--from-ad",
        "x1^2 d2",
        "--deg-max",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "x1^2 d2\n");
}

#[test]
fn solve_inner_json_reports_kernel() {
    // vars <= 3 by default, so f(x3) d/dx3 commutes with L_2
    let o = wittfield(&["--format", "json", "solve-inner", "--n", "2", "--from-ad", "x1^2 d2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["text"], "x1^2 d2");
    assert_eq!(v["unique"], false);
    assert_eq!(v["kernel"].as_array().unwrap().len(), 4);
    let o = wittfield(&["solve-inner", "--n", "2", "--max-var", "2", "--from-ad", "x1^2 d2"]);
    assert!(String::from_utf8(o.stderr).unwrap().is_empty());
}

#[test]
fn apply_and_closure_and_centralizer() {
    let o = wittfield(&["apply", "x1 d2", "x2^2 + 1/2"]);
    assert_eq!(stdout(&o), "2*x1*x2\n");
    let o = wittfield(&["closure", "x1 d1", "--n", "2", "--deg-min", "0", "--deg-max", "0"]);
    assert_eq!(stdout(&o).lines().next(), Some("dim 4"));
    let o = wittfield(&["centralizer", "--n", "3", "--max-var", "3", "--deg-max", "3"]);
    assert_eq!(stdout(&o), "dim 1\nx1 d1 + x2 d2 + x3 d3\n");
}

#[test]
fn usage_errors_exit_2() {
    let o = wittfield(&["bracket", "d1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = wittfield(&["bracket", "d0", "d1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = wittfield(&["--format", "json", "bracket", "x1", "d1"]);
    assert_eq!(o.status.code(), Some(2));
    let e = json_error(&o);
    assert_eq!(e["kind"], "usage");
    assert!(e["message"].as_str().unwrap().contains("A: 1:3"));
    let o = wittfield(&["--format", "json", "frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json_error(&o)["kind"], "usage");
}

#[test]
fn window_violation_exits_3() {
    // d/dx_i maps degree-0 fields to degree -1, outside the window
    let o = wittfield(&[
        "--format",
        "json",
        "centralizer",
        "--n",
        "2",
        "--gens",
        "L",
        "--deg-min",
        "0",
        "--deg-max",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json_error(&o)["kind"], "computation");
    let o = wittfield(&[
        "centralizer",
        "--n",
        "2",
        "--gens",
        "L",
        "--deg-min",
        "0",
        "--deg-max",
        "1",
        "--mode",
        "project",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn inconsistent_spec_exits_3_with_certificate() {
    // [d/dx1, w] = x1 d/dx1 has no solution among fields of degree <= 0
    let spec = r#"{"generators":[{"components":{"1":[{"monomial":{},"coeff":"1"}]}}],
                  "values":[{"components":{"1":[{"monomial":{"1":1},"coeff":"1"}]}}]}"#;
    let path = temp_file("inconsistent.json", spec);
    let p = path.to_str().unwrap();
    let o = wittfield(&[
        "--format",
        "json",
        "solve-inner",
        "--spec",
        p,
        "--max-var",
        "1",
        "--deg-max",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let e = json_error(&o);
    assert_eq!(e["detail"]["term"], "x1 d1");
    assert_eq!(e["detail"]["generator"], 0);
    let o = wittfield(&["solve-inner", "--spec", p, "--max-var", "1", "--deg-max", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1/2*x1^2 d1\n");
    std::fs::remove_file(path).unwrap();
}

#[test]
fn spec_breaking_derivation_rule_exits_3() {
    let spec = r#"{"family":"L","n":2,"values":[
        {"components":{"2":[{"monomial":{},"coeff":"1"}]}},
        {"components":{}},{"components":{}},{"components":{}},{"components":{}},{"components":{}}]}"#;
    let path = temp_file("cocycle.json", spec);
    let o = wittfield(&["solve-inner", "--spec", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::remove_file(path).unwrap();
    let path = temp_file("garbage.json", "{\"values\": 3}");
    let o = wittfield(&["solve-inner", "--spec", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::remove_file(path).unwrap();
}

#[test]
fn verify_is_deterministic_and_prints_seed() {
    let a = wittfield(&["verify", "--suite", "textio", "--seed", "5"]);
    let b = wittfield(&["verify", "--suite", "textio", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("suite textio seed 5\n"));
    let ids: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(1).unwrap())
        .collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn verify_all_passes() {
    let o = wittfield(&["--format", "json", "verify", "--suite", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["seed"], 1);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 25);
}

#[test]
fn stabilize_json_round_trips() {
    let o = wittfield(&[
        "--format",
        "json",
        "stabilize",
        "--task",
        "solve-inner",
        "--n-from",
        "2",
        "--n-to",
        "4",
        "--w",
        "x2^2 d1 - d2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report: StabilizationReport = from_json(stdout(&o).trim()).unwrap();
    assert!(report.all_stabilized());
    assert_eq!(report.limit().unwrap().to_string(), "x2^2 d1 - d2");

    let o = wittfield(&[
        "stabilize",
        "--task",
        "centralizer",
        "--gens",
        "sl",
        "--n-from",
        "2",
        "--n-to",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("task centralizer"));
    let o = wittfield(&[
        "stabilize",
        "--task",
        "solve-inner",
        "--n-from",
        "3",
        "--n-to",
        "2",
        "--w",
        "d1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rigidity_one_variable() {
    let o = wittfield(&["rigidity", "--n", "1", "--max-var", "1", "--deg-max", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0\n");
    // L_2 has degree-0 terms outside a window starting at degree 1
    let o = wittfield(&["rigidity", "--n", "2", "--deg-min", "1"]);
    assert_eq!(o.status.code(), Some(3));
}
