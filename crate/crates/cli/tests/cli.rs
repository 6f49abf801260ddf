use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use vesseltop::io::write_labels;
use vesseltop::phantoms::{generate, PhantomSpec};
use vesseltop::{BinaryField, GridShape, LabelGrid};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vesseltop")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, mask: &BinaryField) -> String {
    let path = dir.join(name);
    write_labels(&path, &LabelGrid::from_mask(mask)).unwrap();
    path.display().to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn numbers(v: &Value, out: &mut Vec<(String, f64)>, path: String) {
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| numbers(v, out, format!("{path}/{k}"))),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| numbers(v, out, format!("{path}/{i}"))),
        Value::Number(n) => out.push((path, n.as_f64().unwrap())),
        _ => {}
    }
}

#[test]
fn identical_inputs_score_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let tube = generate(&PhantomSpec::tube(&[40, 30], 3.0, 20.0)).unwrap();
    let p = write(dir.path(), "a.vgrid", &tube);
    let v = json(&run(&["metrics", "--pred", &p, "--ref", &p, "--variants", "clDice,cbDice,cl-M-D"]));
    let mut all = Vec::new();
    numbers(&v, &mut all, String::new());
    let scores: Vec<_> = all
        .iter()
        .filter(|(k, _)| ["dice", "nsd", "clDice", "cbDice", "cl-M-D"].iter().any(|m| k.ends_with(&format!("/{m}"))))
        .collect();
    assert!(!scores.is_empty(), "no scores found in {v}");
    for (k, s) in scores {
        assert_eq!(*s, 1.0, "{k}");
    }
    for (k, e) in all.iter().filter(|(k, _)| k.contains("betti_err")) {
        assert_eq!(*e, 0.0, "{k}");
    }
}

#[test]
fn disjoint_inputs_have_zero_dice() {
    let dir = tempfile::tempdir().unwrap();
    let shape = GridShape::plane(20, 10);
    let left = BinaryField::from_fn(shape.clone(), |x, y, _| x < 6 && (2..8).contains(&y));
    let right = BinaryField::from_fn(shape, |x, y, _| x >= 14 && (2..8).contains(&y));
    let (p, r) = (write(dir.path(), "p.vgrid", &left), write(dir.path(), "r.vgrid", &right));
    let v = json(&run(&["metrics", "--pred", &p, "--ref", &r]));
    let mut all = Vec::new();
    numbers(&v, &mut all, String::new());
    let dice: Vec<_> = all.iter().filter(|(k, _)| k.ends_with("/dice")).collect();
    assert!(!dice.is_empty());
    assert!(dice.iter().all(|(_, d)| *d == 0.0), "{dice:?}");
}

#[test]
fn csv_output_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let tube = generate(&PhantomSpec::tube(&[40, 30], 3.0, 20.0)).unwrap();
    let p = write(dir.path(), "a.vgrid", &tube);
    let out = run(&["metrics", "--pred", &p, "--ref", &p, "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 2, "{text}");
}

#[test]
fn phantom_round_trip_keeps_topology() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ring.vgrid");
    let o = out.display().to_string();
    let v = json(&run(&["phantom", "--kind", "ring", "--dims", "32,32", "--out", &o]));
    assert_eq!(v["betti"], serde_json::json!([1, 1, 0]));
    let grid = vesseltop::io::read_labels(&out).unwrap();
    assert_eq!(grid.shape().extent()[..2], [32, 32]);

    let v = json(&run(&["phantom", "--kind", "ybranch", "--dims", "64,64", "--out", &o]));
    assert_eq!(v["betti"], serde_json::json!([1, 0, 0]));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let tube = generate(&PhantomSpec::tube(&[40, 30], 3.0, 20.0)).unwrap();
    let small = generate(&PhantomSpec::tube(&[30, 30], 3.0, 20.0)).unwrap();
    let p = write(dir.path(), "a.vgrid", &tube);
    let q = write(dir.path(), "b.vgrid", &small);
    let missing = dir.path().join("missing.vgrid").display().to_string();
    let cases: Vec<Vec<&str>> = vec![
        vec!["metrics", "--pred", &missing, "--ref", &p],
        vec!["metrics", "--pred", &p, "--ref", &q],
        vec!["metrics", "--pred", &p, "--ref", &p, "--variants", "cl-Q-D"],
        vec!["metrics", "--pred", &p, "--ref", &p, "--groups", "vessels"],
        vec!["metrics", "--pred", &p, "--ref", &p, "--groups", "a:1;a:1"],
        vec!["metrics", "--pred", &p, "--ref", &p, "--groups", "a:x"],
        vec!["metrics", "--pred", &p, "--ref", &p, "--tol", "0"],
        vec!["experiment", "--name", "rotation"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("no/such/dir/x.vgrid").display().to_string();
    let out = run(&["phantom", "--kind", "tube", "--out", &o]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn gradcheck_reports_pass() {
    let v = json(&run(&["gradcheck", "--loss", "cbDice", "--instances", "2", "--dims", "6,6"]));
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(v["instances"].as_array().unwrap().len(), 2);
}

#[test]
fn impossible_tolerance_fails_gradcheck() {
    let out = run(&["gradcheck", "--loss", "dice", "--instances", "1", "--dims", "6,6", "--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(3));
}
