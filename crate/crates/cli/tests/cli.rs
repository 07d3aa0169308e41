use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equidistants")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const CUSP: &str = r#"{"source_dim": 2, "target_dim": 1, "components": [[
    {"coeff": "1", "exponents": [3, 0]}, {"coeff": "1", "exponents": [0, 2]}]]}"#;

const FLAT: &str = r#"{"source_dim": 1, "target_dim": 1, "order": 6, "components": [[]]}"#;

// a curve {u = y^2} against {u = 3 y^2}: ordinary contact
const PAIR: &str = r#"{"n": 1, "q": 2, "k": 1, "lambda": "1/3",
    "phi": [[{"coeff": "1", "exponents": [2]}]], "psi": [],
    "eta": [], "zeta": [[{"coeff": "3", "exponents": [2]}]]}"#;

#[test]
fn enumerate_prints_rows() {
    let o = run(&["enumerate", "--n", "2", "--q", "4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "k=1: A1 A2 A3 A4 | k=2: C2,2+ C2,2-");
}

#[test]
fn enumerate_json_and_table() {
    let o = run(&["enumerate", "--n", "3", "--q", "6", "--json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\"interpretations\""));
    assert!(text.contains("Ctilde6"));
    let o = run(&["enumerate", "--n", "3", "--q", "6", "--table"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("C6*"));
}

#[test]
fn enumerate_rejects_bad_dimensions() {
    let o = run(&["enumerate", "--n", "4", "--q", "6"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("NOT_NICE_DIMENSIONS"));
    let o = run(&["enumerate", "--n", "2", "--q", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn classify_and_mu() {
    let dir = TempDir::new().unwrap();
    let germ = write(&dir, "cusp.json", CUSP);
    let o = run(&["classify", "--germ", &germ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "A2 mu=2");
    let o = run(&["mu", "--germ", &germ]);
    assert_eq!(stdout(&o).trim(), "2");
}

#[test]
fn infinite_germ_is_a_math_error() {
    let dir = TempDir::new().unwrap();
    let germ = write(&dir, "flat.json", FLAT);
    let o = run(&["mu", "--germ", &germ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error: "));
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let o = run(&["classify", "--germ", &dir.path().join("missing.json").to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write(&dir, "bad.json", "{\"source_dim\": 1");
    assert_eq!(run(&["mu", "--germ", &bad]).status.code(), Some(2));
    let constant = write(&dir, "c.json", r#"{"source_dim": 1, "target_dim": 1, "components": [[{"coeff": "1", "exponents": [0]}]]}"#);
    assert_eq!(run(&["mu", "--germ", &constant]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["enumerate", "--n", "2"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn contact_reports_class() {
    let dir = TempDir::new().unwrap();
    let pair = write(&dir, "pair.json", PAIR);
    let o = run(&["contact", "--input", &pair]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("lambda: 1/3\n"));
    assert!(text.contains("kappa: "));
    assert!(text.contains("theta: "));
    assert!(text.contains("class: A1"), "{text}");
}

#[test]
fn contact_lambda_must_be_exact() {
    let dir = TempDir::new().unwrap();
    let pair = write(&dir, "pair.json", PAIR);
    assert_eq!(run(&["contact", "--input", &pair, "--lambda", "0.5"]).status.code(), Some(1));
    assert_eq!(run(&["contact", "--input", &pair, "--lambda", "1"]).status.code(), Some(1));
    assert!(run(&["contact", "--input", &pair, "--lambda", "2/5"]).status.success());
}

#[test]
fn ringdims_agree() {
    let dir = TempDir::new().unwrap();
    let pair = write(&dir, "pair.json", PAIR);
    let o = run(&["ringdims", "--input", &pair]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    let tail = |l: &str| l.split_once(": ").unwrap().1.to_string();
    assert_eq!(tail(&lines[0]), tail(&lines[1]));
    assert_eq!(tail(&lines[1]), tail(&lines[2]));
    // R[y]/(y^2)
    assert!(lines[0].starts_with("pi: 2 "));
}

#[test]
fn trace_writes_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    let oval = write(&dir, "oval.json", r#"{"kind": "fourier_oval", "a": [0, 0, 0.2]}"#);
    let prefix = dir.path().join("out");
    let o = run(&["trace", "--input", &oval, "--lambda", "0.5", "--out", &prefix.to_string_lossy(), "--cross-check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.lines().any(|l| l.contains("closed, cusps 3")), "{report}");
    let csv = fs::read_to_string(Path::new(&format!("{}.csv", prefix.display()))).unwrap();
    assert!(csv.starts_with("branch_id,sigma,s,t,x1,x2,label"));
    assert!(csv.contains("A2_cusp"));
    let svg = fs::read_to_string(Path::new(&format!("{}.svg", prefix.display()))).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("polyline"));
}

#[test]
fn trace_marks_degenerate_ellipse() {
    let dir = TempDir::new().unwrap();
    let ellipse = write(&dir, "e.json", r#"{"kind": "ellipse", "a": 2, "b": 1}"#);
    let prefix = dir.path().join("e");
    let o = run(&["trace", "--input", &ellipse, "--lambda", "1/2", "--out", &prefix.to_string_lossy()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("DEGENERATE"));
    let csv = fs::read_to_string(format!("{}.csv", prefix.display())).unwrap();
    assert!(csv.contains("DEGENERATE"));
}
