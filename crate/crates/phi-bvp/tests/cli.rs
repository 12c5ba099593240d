//! Black-box tests of the command-line interface: exit codes, round trips,
//! and output hygiene.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phi-bvp"))
}

fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn solve_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let problem = problems_dir().join("linear_oracle.prob");
    let out = run(&[
        "solve",
        problem.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("verify = PASS"));
    assert!(text.contains("remark_lhs = 2.0000000000000000"));

    let csv = dir.path().join("linear_oracle.solution.csv");
    let content = std::fs::read_to_string(&csv).unwrap();
    let mut lines = content.lines();
    assert_eq!(lines.next(), Some("t,u,du,phi_du,ode_residual"));
    assert_eq!(content.lines().count(), 1 + 513);

    // u(1/2) = -1 - 1/2 + 1/4 = -1.25 on the exact oracle.
    let mid = content.lines().nth(257).unwrap();
    let u_mid: f64 = mid.split(',').nth(1).unwrap().parse().unwrap();
    assert!((u_mid + 1.25).abs() < 1e-8);

    let out = run(&["verify", problem.to_str().unwrap(), csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verify = PASS"));
}

#[test]
fn solve_worked_example_reports_degree() {
    let dir = tempfile::tempdir().unwrap();
    let problem = problems_dir().join("cubic_exponential.prob");
    let out = run(&[
        "solve",
        problem.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("degree = -1"));
    assert!(text.contains("certificate = DEGREE_CERTIFIED"));
    assert!(out.stderr.is_empty(), "stderr must stay clean on success");

    let report = std::fs::read_to_string(dir.path().join("cubic_exponential.report.txt")).unwrap();
    assert!(report.contains("degree = -1"));
}

#[test]
fn invalid_problem_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.prob");
    std::fs::write(
        &bad,
        "[problem]\nT = 1.0\nb = 0.0\n\n[phi]\nkind = \"identity\"\n\n[f]\nexpr = \"2\"\n",
    )
    .unwrap();
    let out = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.b"));
    assert!(out.stdout.is_empty());
}

#[test]
fn degree_exit_codes() {
    let problem = problems_dir().join("cubic_exponential.prob");
    let out = run(&["degree", problem.to_str().unwrap(), "--rho", "4.327"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("degree = -1"));

    // f = 0 with b = 1: the reduced map vanishes on every disc boundary.
    let dir = tempfile::tempdir().unwrap();
    let degenerate = dir.path().join("degenerate.prob");
    std::fs::write(
        &degenerate,
        "[problem]\nT = 1.0\nb = 1.0\n\n[phi]\nkind = \"identity\"\n\n[f]\nexpr = \"0\"\n",
    )
    .unwrap();
    let out = run(&["degree", degenerate.to_str().unwrap(), "--rho", "1.0"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn bounds_prints_formula_values() {
    let out = run(&["bounds", problems_dir().join("linear_oracle.prob").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("beta_ball = 6.0000000000000000"));
    assert!(text.contains("L = 4.0000000000000000"));
}

#[test]
fn malformed_csv_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let problem = problems_dir().join("linear_oracle.prob");

    let bad_header = dir.path().join("bad_header.csv");
    std::fs::write(&bad_header, "time,u,du\n0,1,2\n").unwrap();
    let out = run(&["verify", problem.to_str().unwrap(), bad_header.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let bad_row = dir.path().join("bad_row.csv");
    std::fs::write(
        &bad_row,
        "t,u,du,phi_du,ode_residual\n0,1,2\n0.5,1,2,3,4\n1,1,2,3,4\n",
    )
    .unwrap();
    let out = run(&["verify", problem.to_str().unwrap(), bad_row.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed CSV"));
}

#[test]
fn verify_fails_on_wrong_function() {
    let dir = tempfile::tempdir().unwrap();
    let problem = problems_dir().join("cubic_exponential.prob");
    // The zero function on a coarse grid: well-formed CSV, wrong solution.
    let mut csv = String::from("t,u,du,phi_du,ode_residual\n");
    for i in 0..=8 {
        let t = i as f64 / 8.0;
        csv.push_str(&format!("{t},0.0,0.0,0.0,0.0\n"));
    }
    let path = dir.path().join("zero.csv");
    std::fs::write(&path, csv).unwrap();
    let out = run(&["verify", problem.to_str().unwrap(), path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("verify = FAIL"));
}

#[test]
fn flags_override_file_settings() {
    let dir = tempfile::tempdir().unwrap();
    let problem = problems_dir().join("linear_oracle.prob");
    let out = run(&[
        "solve",
        problem.to_str().unwrap(),
        "--n",
        "64",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let content =
        std::fs::read_to_string(dir.path().join("linear_oracle.solution.csv")).unwrap();
    assert_eq!(content.lines().count(), 1 + 65);
}
