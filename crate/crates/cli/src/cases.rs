//! Three machine-checked reports: the unstable jump sequence in exact
//! arithmetic, the rank-one sandwich in the plane, and the recession rate of
//! the area density.

use std::path::Path;

use msd_relax::cell::{lower_bound_h, recession_rate_check, solve_h, SolveOptions};
use msd_relax::functional::{eval_j_fourterm, ClosedFormAbsNorm, DensityProvider};
use msd_relax::measure::{decompose, BvFunction1D, Measure1D, MsdPair};
use msd_relax::{Energies, ExactMeasure, Mat, Matrix, Rational};
use serde_json::{json, Value};

use crate::report::json_bytes;
use crate::{CliError, Settings, Status};

pub const SEQUENCE_LENGTH: i64 = 16;
pub const SANDWICH_SCALES: [f64; 3] = [0.5, 1.0, 2.0];
pub const RATE_SCALES: [f64; 3] = [10.0, 100.0, 1000.0];

pub struct CaseReport {
    pub name: &'static str,
    pub passed: bool,
    pub body: Value,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// `g_k = (1/k) chi_(0,1)` and `G = delta_0` on `(-1, 1)` with `W = psi = |.|`:
/// the part of `G` singular to `Dg` is empty for every `k` and is all of `G`
/// at the limit `(0, delta_0)`, where it costs `h^c(0, 1)`.
pub fn unstable_sequence() -> Result<CaseReport, CliError> {
    let dom = (q(-1, 1), q(1, 1));
    let delta: ExactMeasure = Measure1D::dirac(dom, q(0, 1), Mat::scalar(q(1, 1)))?;
    let provider = ClosedFormAbsNorm { d: 1 };
    let mut rows = Vec::new();
    let mut passed = true;
    for k in 1..=SEQUENCE_LENGTH {
        let g = BvFunction1D::step(dom, Mat::scalar(q(0, 1)), q(0, 1), Mat::scalar(q(1, k)))?;
        let pair = MsdPair::new(g, delta.clone())?;
        let parts = decompose(&pair)?;
        let j = eval_j_fourterm(&pair, &provider)?;
        let ok = parts.singular_rest.is_zero() && j.gsg_term == q(0, 1);
        passed &= ok;
        rows.push(json!({
            "k": k,
            "singular_rest_is_zero": parts.singular_rest.is_zero(),
            "gsg_term": j.gsg_term.to_string(),
            "jump_term": j.jump_term.to_string(),
            "total": j.total.to_string(),
            "passed": ok,
        }));
    }
    let zero = BvFunction1D::constant(dom, Mat::scalar(q(0, 1)));
    let limit = MsdPair::new(zero, delta.clone())?;
    let parts = decompose(&limit)?;
    let j = eval_j_fourterm(&limit, &provider)?;
    let expected = provider.recession(&Mat::scalar(q(0, 1)), &Mat::scalar(q(1, 1)))?.value;
    let limit_ok = parts.singular_rest == delta && j.gsg_term == expected && j.gsg_term != q(0, 1);
    passed &= limit_ok;
    let body = json!({
        "sequence": rows,
        "limit": {
            "singular_rest_is_delta": parts.singular_rest == delta,
            "gsg_term": j.gsg_term.to_string(),
            "expected_hc_0_1": expected.to_string(),
            "total": j.total.to_string(),
            "passed": limit_ok,
        },
    });
    Ok(CaseReport { name: "unstable_sequence", passed, body })
}

/// `H(t e1 (x) e2, 0)` for `W = psi = |.|` in the plane: the sequence upper
/// bound and the Jensen lower bound both equal `t`.
pub fn rank_one_sandwich(tol: f64) -> Result<CaseReport, CliError> {
    let energies = Energies::abs_norm(2, 2)?;
    let options = SolveOptions { tol, ..SolveOptions::default() };
    let zero = Matrix::zeros(2, 2);
    let mut rows = Vec::new();
    let mut passed = true;
    for t in SANDWICH_SCALES {
        let a = Matrix::from_rows(2, 2, &[0.0, t, 0.0, 0.0]);
        let est = solve_h(&energies, &a, &zero, options)?;
        let lower = lower_bound_h(&energies, &a, &zero)?;
        let ok = est.upper - lower <= tol && (est.upper - t).abs() <= tol && (lower - t).abs() <= tol;
        passed &= ok;
        rows.push(json!({
            "t": t,
            "lower": lower,
            "upper": est.upper,
            "gap": est.upper - lower,
            "certificate_id": est.certificate.id(),
            "passed": ok,
        }));
    }
    Ok(CaseReport { name: "rank_one_sandwich", passed, body: json!({"tol": tol, "rows": rows}) })
}

/// `|H(tA, tB)/t - h^c(A, B)|` for the area density at `(A, B) = (1, 1/2)`.
pub fn area_recession_rate(tol: f64) -> Result<CaseReport, CliError> {
    let energies = Energies::area_norm(1, 1)?;
    let options = SolveOptions { tol, ..SolveOptions::default() };
    let (a, b) = (Matrix::scalar(1.0), Matrix::scalar(0.5));
    let rate = recession_rate_check(&energies, &a, &b, &RATE_SCALES, options)?;
    let body = json!({
        "A": 1.0,
        "B": 0.5,
        "t": rate.ts,
        "errors": rate.errors,
        "constant": rate.constant,
    });
    Ok(CaseReport { name: "area_recession_rate", passed: rate.passed, body })
}

pub fn all_cases(settings: &Settings) -> Result<Vec<CaseReport>, CliError> {
    Ok(vec![unstable_sequence()?, rank_one_sandwich(settings.tol)?, area_recession_rate(settings.tol)?])
}

/// Writes `<name>.json` per case into `out_dir`, which is created if needed.
pub fn cmd_paper_cases(out_dir: &Path, settings: &Settings) -> Result<Status, CliError> {
    if !(settings.tol > 0.0) {
        return Err(CliError::Spec(format!("--tol must be positive, got {}", settings.tol)));
    }
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", out_dir.display()));
    std::fs::create_dir_all(out_dir).map_err(io)?;
    let cases = all_cases(settings)?;
    let mut failing = Vec::new();
    for case in &cases {
        let doc = json!({
            "schema": crate::problem::SCHEMA_VERSION,
            "case": case.name,
            "passed": case.passed,
            "report": case.body,
        });
        let path = out_dir.join(format!("{}.json", case.name));
        std::fs::write(&path, json_bytes(&doc)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        println!("{} {}", if case.passed { "PASS" } else { "FAIL" }, case.name);
        if !case.passed {
            failing.push(case.name);
        }
    }
    Ok(if failing.is_empty() { Status::Ok } else { Status::Failed(format!("failing cases: {}", failing.join(", "))) })
}
