use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_msd-relax"));
    cmd.env_remove("MSD_RELAX_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ABS_NORM: &str = r#""energies": {"bulk": {"kind": "abs"}, "surface": {"kind": "norm"}}"#;

fn density_grid() -> String {
    let mut cells = Vec::new();
    for a in [-2.0, -0.5, 0.0, 1.0, 2.0] {
        for b in [-1.5, 0.0, 0.5, 2.0] {
            cells.push(format!(r#"{{"A": {a}, "B": {b}}}"#));
        }
    }
    format!(r#"{{"schema": 1, {ABS_NORM}, "cell": [{}]}}"#, cells.join(", "))
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn density_grid_matches_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "grid.json", &density_grid());
    let out = dir.path().join("grid.csv");
    let res = run(&["density", "--spec", s(&spec), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows[0], ["A11", "B11", "value", "lower", "upper", "certificate_id"]);
    assert_eq!(rows.len(), 21);
    for row in &rows[1..] {
        let (a, b, v): (f64, f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!((v - (b.abs() + (a - b).abs())).abs() <= 1e-3, "{row:?}");
    }
}

#[test]
fn density_output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "grid.json", &density_grid());
    let (o1, o2) = (dir.path().join("1.csv"), dir.path().join("2.csv"));
    assert_eq!(code(&run(&["density", "--spec", s(&spec), "--out", s(&o1), "--threads", "3"])), 0);
    let res = bin().env("MSD_RELAX_THREADS", "1").args(["density", "--spec", s(&spec), "--out", s(&o2)]).output().unwrap();
    assert_eq!(code(&res), 0);
    assert_eq!(std::fs::read(&o1).unwrap(), std::fs::read(&o2).unwrap());
}

#[test]
fn bad_thread_variable_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "grid.json", &density_grid());
    let res = bin().env("MSD_RELAX_THREADS", "many").args(["density", "--spec", s(&spec)]).output().unwrap();
    assert_eq!(code(&res), 1);
}

#[test]
fn non_unit_normal_is_rejected() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "nu.json", &format!(r#"{{"schema": 1, {ABS_NORM}, "cell": {{"A": 1, "B": 0, "nu": [2]}}}}"#));
    let res = run(&["density", "--spec", s(&spec)]);
    assert_eq!(code(&res), 1);
}

#[test]
fn recession_at_the_origin_is_zero() {
    let dir = TempDir::new().unwrap();
    let spec =
        write(&dir, "rec.json", &format!(r#"{{"schema": 1, {ABS_NORM}, "cell": {{"A": 0, "B": 0, "mode": "recession"}}}}"#));
    let res = run(&["density", "--spec", s(&spec)]);
    assert_eq!(code(&res), 0);
    let rows = csv_rows(&String::from_utf8(res.stdout).unwrap());
    assert_eq!(&rows[1][..5], ["0", "0", "0", "0", "0"]);
}

#[test]
fn jump_rows_report_the_tensor_argument() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "hj.json",
        &format!(r#"{{"schema": 1, {ABS_NORM}, "cell": {{"A": [1, 0], "B": [[0, 0], [0, 0]], "nu": [0, 1]}}}}"#),
    );
    let res = run(&["density", "--spec", s(&spec)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rows = csv_rows(&String::from_utf8(res.stdout).unwrap());
    assert_eq!(&rows[0][..4], ["A11", "A12", "A21", "A22"]);
    assert_eq!(&rows[1][..4], ["0", "1", "0", "0"]);
    assert_eq!(rows[1][8], "1");
}

#[test]
fn open_sandwich_is_flagged() {
    let dir = TempDir::new().unwrap();
    let spec =
        write(&dir, "rank2.json", &format!(r#"{{"schema": 1, {ABS_NORM}, "cell": {{"A": [[1, 0], [0, 1]], "B": [[0, 0], [0, 0]]}}}}"#));
    let res = run(&["density", "--spec", s(&spec)]);
    assert_eq!(code(&res), 2);
}

#[test]
fn malformed_specs_name_the_key() {
    let dir = TempDir::new().unwrap();
    let typo = write(&dir, "typo.json", &format!(r#"{{"schema": 1, {ABS_NORM}, "cells": []}}"#));
    let res = run(&["density", "--spec", s(&typo)]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("cells"));
    let missing = write(&dir, "missing.json", r#"{"schema": 1, "cell": {"A": 1, "B": 0}}"#);
    let res = run(&["density", "--spec", s(&missing)]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("energies"));
    let res = run(&["density", "--spec", s(&dir.path().join("absent.json"))]);
    assert_eq!(code(&res), 1);
    assert_eq!(code(&run(&["density", "--bogus"])), 1);
}

fn functional(dir: &TempDir, body: &str) -> serde_json::Value {
    let spec = write(dir, "f.json", body);
    let res = run(&["functional", "--spec", s(&spec)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    serde_json::from_slice(&res.stdout).unwrap()
}

#[test]
fn limit_of_the_unstable_sequence() {
    let dir = TempDir::new().unwrap();
    let v = functional(
        &dir,
        &format!(
            r#"{{"schema": 1, {ABS_NORM}, "msd": {{
                "g": {{"domain": [-1, 1], "left_value": 0}},
                "G": {{"domain": [-1, 1], "atoms": [{{"x": 0, "w": 1}}]}}}}}}"#
        ),
    );
    assert_eq!(v["schema"], 1);
    // h^c(0, 1) = |1| + |0 - 1| under the cell formula.
    assert_eq!(v["gsg_term"], 2.0);
    assert_eq!(v["total"], 2.0);
    assert_eq!(v["forms_agree"], true);
}

#[test]
fn smooth_pair_forms_agree() {
    let dir = TempDir::new().unwrap();
    let v = functional(
        &dir,
        r#"{"schema": 1, "energies": {"bulk": {"kind": "double-well"}, "surface": {"kind": "norm"}}, "msd": {
            "g": {"domain": [0, 1], "left_value": 0, "density": {"breakpoints": [0, 1], "pieces": [[0.5, 1]]}},
            "G": {"domain": [0, 1], "density": {"breakpoints": [0, 0.5, 1], "pieces": [[1], [-0.25, 2]]}}}}"#,
    );
    let (four, measure) = (v["total"].as_f64().unwrap(), v["measure_total"].as_f64().unwrap());
    assert!((four - measure).abs() < 1e-6, "{v}");
    assert_eq!(v["forms_agree"], true);
}

#[test]
fn dirichlet_constant_field() {
    let dir = TempDir::new().unwrap();
    let v = functional(
        &dir,
        &format!(
            r#"{{"schema": 1, {ABS_NORM}, "msd": {{
                "g": {{"domain": [0, 1], "left_value": 0.7}},
                "G": {{"domain": [0, 1]}}}},
                "dirichlet": {{"u0": {{"domain": [0, 1], "left_value": 0}}, "gamma": ["left", "right"]}}}}"#
        ),
    );
    assert!((v["dirichlet"]["total"].as_f64().unwrap() - 1.4).abs() < 1e-12, "{v}");
}

#[test]
fn penalty_reports_the_threshold() {
    let dir = TempDir::new().unwrap();
    let v = functional(
        &dir,
        &format!(
            r#"{{"schema": 1, {ABS_NORM}, "msd": {{
                "g": {{"domain": [0, 1], "left_value": 0, "atoms": [{{"x": 0.5, "w": 1}}]}},
                "G": {{"domain": [0, 1], "density": {{"breakpoints": [0, 1], "pieces": [[1]]}}}}}},
                "penalty": {{"R": 4}}}}"#
        ),
    );
    assert_eq!(v["penalty"]["R0"], 3.0);
    assert_eq!(v["penalty"]["above_threshold"], true);
    // E(g) = 1 and the penalty is R int |0 - 1| = 4.
    assert_eq!(v["penalty"]["E_R"], 5.0);
}

#[test]
fn decompose_splits_atoms_by_the_jump_set() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "d.json",
        r#"{"schema": 1, "msd": {
            "g": {"domain": [-1, 1], "left_value": 0, "atoms": [{"x": 0.2, "w": 1}]},
            "G": {"domain": [-1, 1], "atoms": [{"x": 0.2, "w": 2}, {"x": -0.5, "w": 3}]}}}"#,
    );
    let res = run(&["decompose", "--spec", s(&spec)]);
    assert_eq!(code(&res), 0);
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["jump"]["atoms"][0]["x"], 0.2);
    assert_eq!(v["singular_rest"]["atoms"][0]["w"], 3.0);
    assert_eq!(v["absolutely_continuous"]["atoms"].as_array().unwrap().len(), 0);
}

#[test]
fn approximation_experiment_csv() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "a.json",
        &format!(
            r#"{{"schema": 1, {ABS_NORM}, "msd": {{
                "g": {{"domain": [-1, 1], "left_value": 0}},
                "G": {{"domain": [-1, 1], "atoms": [{{"x": 0, "w": 1}}]}}}},
                "approx": {{"schedule": [16, 64, 256]}}}}"#
        ),
    );
    let res = run(&["approx", "--spec", s(&spec)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rows = csv_rows(&String::from_utf8(res.stdout).unwrap());
    assert_eq!(rows[0], ["n", "E_value", "J_value", "weakstar_gap_g", "weakstar_gap_G", "tv_ratio"]);
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r[2] == "2"));
}

#[test]
fn paper_cases_write_three_passing_reports() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("reports");
    let res = run(&["paper-cases", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    for name in ["unstable_sequence", "rank_one_sandwich", "area_recession_rate"] {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join(format!("{name}.json"))).unwrap()).unwrap();
        assert_eq!((v["schema"].as_u64(), v["passed"].as_bool()), (Some(1), Some(true)), "{name}");
    }
}

#[test]
fn paper_cases_need_a_writable_directory() {
    let dir = TempDir::new().unwrap();
    let blocker = write(&dir, "file", "");
    let res = run(&["paper-cases", "--out", s(&blocker.join("reports"))]);
    assert_eq!(code(&res), 1);
}

#[test]
fn verify_enforces_the_budget() {
    assert_eq!(code(&run(&["verify", "--budget", "50"])), 1);
}

#[test]
fn verify_passes_and_writes_its_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("verify.json");
    let res = run(&["verify", "--seed", "3", "--budget", "100", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 6);
}
