use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn acmpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acmpc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_feasible_toy() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.mpc", "MPC 1 1 1 1 1\nP 0 0 1.0\nC 0 0 1.0\n");
    let trace = dir.path().join("trace.csv");
    let out = acmpc(&[
        "solve",
        "--input",
        s(&input),
        "--eps",
        "0.1",
        "--trace",
        s(&trace),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = json(&out);
    assert_eq!(doc["status"], "feasible");
    let x = doc["x"][0].as_f64().unwrap();
    assert!((0.9..=1.0).contains(&x), "x = {x}");
    assert!(doc["certificate"].is_null());
    for key in ["eps", "iterations", "gap_final", "timings", "instance"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["instance"]["nnz"], 2);
    // solved by inspection: the trace has only its header
    assert_eq!(std::fs::read_to_string(&trace).unwrap(), "t,gap,envelope\n");
}

#[test]
fn trace_rows_stay_under_envelope() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "tight.mpc",
        "MPC 2 1 2 2 2\nP 0 0 1\nP 0 1 1\nC 0 0 2\nC 1 1 2\n",
    );
    let trace = dir.path().join("trace.csv");
    let out = acmpc(&[
        "solve",
        "--input",
        s(&input),
        "--eps",
        "0.1",
        "--trace",
        s(&trace),
        "--trace-every",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,gap,envelope"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(
        rows.len() as u64,
        json(&out)["iterations"].as_u64().unwrap()
    );
    for row in rows {
        assert!(row[1] <= row[2] + 1e-6, "{row:?}");
    }
}

#[test]
fn solve_infeasible_toy() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.mpc", "MPC 1 1 1 1 1\nP 0 0 1.0\nC 0 0 0.5\n");
    let out = acmpc(&["solve", "--input", s(&input), "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out);
    assert_eq!(doc["status"], "infeasible_certified");
    let cert = &doc["certificate"];
    assert!(cert["margin"].as_f64().unwrap() > 0.0);
    assert!(cert["y"].is_array() && cert["z"].is_array());
    assert!(doc["x"].is_null());
}

#[test]
fn solve_undetermined_when_budget_is_tiny() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "two.mpc",
        "MPC 2 1 2 2 2\nP 0 0 1\nP 0 1 1\nC 0 0 2\nC 1 1 2\n",
    );
    let out = acmpc(&[
        "solve",
        "--input",
        s(&input),
        "--eps",
        "0.01",
        "--max-iters",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["status"], "undetermined");
}

#[test]
fn solve_text_output() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.mpc", "MPC 1 1 1 1 1\nP 0 0 1.0\nC 0 0 1.0\n");
    let out = acmpc(&[
        "solve",
        "--input",
        s(&input),
        "--eps",
        "0.1",
        "--output",
        "text",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("status: feasible"));
}

#[test]
fn usage_and_io_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.mpc");
    assert_eq!(
        acmpc(&["solve", "--input", s(&missing), "--eps", "0.1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(acmpc(&["solve", "--eps", "0.1"]).status.code(), Some(1));
    assert_eq!(acmpc(&["frobnicate"]).status.code(), Some(1));
    let input = write(&dir, "toy.mpc", "MPC 1 1 1 1 1\nP 0 0 1.0\nC 0 0 1.0\n");
    assert_eq!(
        acmpc(&["solve", "--input", s(&input), "--eps", "1.5"])
            .status
            .code(),
        Some(1)
    );
    let bad = write(&dir, "bad.mpc", "MPC 1 1 1 1 1\nP 0 0 1.0\nC 0 0 -1.0\n");
    let out = acmpc(&["solve", "--input", s(&bad), "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(acmpc(&["--help"]).status.code(), Some(0));
}

#[test]
fn dsg_triangle_and_k4() {
    let dir = TempDir::new().unwrap();
    let tri = write(&dir, "tri.txt", "# triangle\n0 1\n1 2\n2 0\n");
    let out = acmpc(&["dsg", "--graph", s(&tri), "--eps", "0.1"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = json(&out);
    assert!(doc["density_low"].as_f64().unwrap() <= 1.0);
    assert!(doc["density_high"].as_f64().unwrap() >= 1.0);
    assert!(doc["density_high"].as_f64().unwrap() / doc["density_low"].as_f64().unwrap() <= 1.1);

    let k4 = write(&dir, "k4.txt", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n3 3\n");
    let out = acmpc(&["dsg", "--graph", s(&k4), "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("self-loop"));
    let doc = json(&out);
    assert!(doc["density_low"].as_f64().unwrap() <= 1.5);
    assert!(doc["density_high"].as_f64().unwrap() >= 1.5);
}

#[test]
fn dsg_empty_graph_exits_one() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.txt", "# nothing\n");
    assert_eq!(
        acmpc(&["dsg", "--graph", s(&empty), "--eps", "0.1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn normalize_splits_and_eliminates() {
    let dir = TempDir::new().unwrap();
    // column 0: covering entry 4 against packing max 1; column 1: covering only
    let input = write(&dir, "in.mpc", "MPC 2 1 2 1 2\nP 0 0 1\nC 0 0 4\nC 1 1 2\n");
    let output = dir.path().join("out.mpc");
    let out = acmpc(&["normalize", "--input", s(&input), "--output", s(&output)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&output).unwrap();
    assert!(text.starts_with("MPC 2 1 1 "), "{text}");
    let side: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out.mpc.colmap.json")).unwrap(),
    )
    .unwrap();
    let columns = side["map"]["columns"].as_array().unwrap();
    assert_eq!(columns.len(), 2);
    assert!(columns.iter().all(|c| c["original"] == 0));
    let eliminated = side["map"]["eliminated"].as_array().unwrap();
    assert_eq!(eliminated.len(), 1);
    assert_eq!(eliminated[0]["original"], 1);
    assert_eq!(side["covering_rows"], serde_json::json!([0]));
}

#[test]
fn normalize_unit_entries_only_rescales() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "in.mpc",
        "MPC 2 1 1 2 2\nP 0 0 0.5\nP 0 1 1\nC 0 0 0.25\nC 0 1 1\n",
    );
    let output = dir.path().join("out.mpc");
    assert_eq!(
        acmpc(&["normalize", "--input", s(&input), "--output", s(&output)])
            .status
            .code(),
        Some(0)
    );
    let text = std::fs::read_to_string(&output).unwrap();
    assert_eq!(
        text,
        "MPC 2 1 1 2 2\nP 0 0 1.0\nP 0 1 1.0\nC 0 0 0.5\nC 0 1 1.0\n"
    );
}

#[test]
fn bench_csv_columns_and_determinism() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        acmpc(&[
            "bench",
            "--suite",
            "random",
            "--n",
            "8,16",
            "--density",
            "0.25",
            "--eps",
            "0.2,0.1",
            "--seed",
            "7",
            "--omit-timings",
            "--out",
            s(out),
        ])
    };
    assert_eq!(args(&a).status.code(), Some(0));
    assert_eq!(args(&b).status.code(), Some(0));
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,p,c,nnz,width,eps,iterations,oracle_rounds,matvec_count,wall_time,multiply_adds,budget,status")
    );
    assert_eq!(lines.count(), 4);
}
