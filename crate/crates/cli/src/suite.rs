//! Seeded property suite over the energy catalog: homogeneity of recession
//! densities, closed sandwiches, additivity of `J`, exactness of the
//! decomposition of `G`, and closure spot tests.

use std::path::Path;

use msd_relax::cell::{qcc_spot_test, CellSolver, Mode, SolveOptions};
use msd_relax::energy::{BulkDensity, EnergyPair, SurfaceDensity};
use msd_relax::functional::{eval_j_measure, OracleDensities};
use msd_relax::measure::{decompose, total_variation, MsdPair};
use msd_relax::samples::random_pair;
use msd_relax::{Energies, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::report::{emit, json_bytes};
use crate::{CliError, Settings, Status};

pub const MIN_BUDGET: usize = 100;

/// Point inside neither an atom site nor a Cantor carrier of the sampled pairs.
const SPLIT_POINT: f64 = 0.0;
const ADDITIVITY_TOL: f64 = 1e-6;
const DECOMPOSITION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Largest violation measure seen, in the units of the check.
    pub worst: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// One-dimensional catalog pairs with closed-form densities.
fn scalar_catalog() -> Result<Vec<Energies>, CliError> {
    Ok(vec![
        Energies::abs_norm(1, 1)?,
        Energies::double_well_norm()?,
        Energies::area_norm(1, 1)?,
        Energies::abs_norm(2, 1)?,
        Energies::area_norm(2, 1)?,
    ])
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let v: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
    Matrix::from_rows(rows, cols, &v)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn tally(name: &'static str, margins: Vec<f64>) -> CheckResult {
    CheckResult {
        name,
        cases: margins.len(),
        violations: margins.iter().filter(|m| !(**m <= 0.0)).count(),
        worst: margins.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// `h^c(tA, tB) = t h^c(A, B)`; margin is the excess over `tol (1 + t)`.
fn homogeneity(cases: usize, seed: u64, options: SolveOptions<f64>) -> Result<CheckResult, CliError> {
    let catalog = scalar_catalog()?;
    let solvers = catalog.iter().map(|e| CellSolver::new(e, options)).collect::<Result<Vec<_>, _>>()?;
    let mut rng = rng_for(seed, 1);
    let draws: Vec<(usize, Matrix, Matrix, f64)> = (0..cases)
        .map(|i| {
            let k = i % solvers.len();
            let d = catalog[k].d();
            let t = 10f64.powf(rng.gen_range(-1.0..1.0));
            (k, random_matrix(&mut rng, d, 1), random_matrix(&mut rng, d, 1), t)
        })
        .collect();
    let margins = draws
        .par_iter()
        .map(|(k, a, b, t)| {
            let s = &solvers[*k];
            let scaled = s.solve(&a.scale(*t), &b.scale(*t), Mode::Recession)?.value;
            let base = s.solve(a, b, Mode::Recession)?.value;
            Ok((scaled - t * base).abs() - options.tol * (1.0 + t))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(tally("homogeneity", margins))
}

/// `lower <= upper <= lower + tol` where the sandwich is closed: every
/// one-dimensional catalog pair, and rank-one `A - B` for `|.|` in the plane.
fn sandwich(cases: usize, seed: u64, options: SolveOptions<f64>) -> Result<CheckResult, CliError> {
    let mut catalog = scalar_catalog()?;
    catalog.push(Energies::abs_norm(2, 2)?);
    let solvers = catalog.iter().map(|e| CellSolver::new(e, options)).collect::<Result<Vec<_>, _>>()?;
    let mut rng = rng_for(seed, 2);
    let draws: Vec<(usize, Matrix, Matrix)> = (0..cases)
        .map(|i| {
            let k = i % solvers.len();
            let (d, n) = (catalog[k].d(), catalog[k].n());
            let b = random_matrix(&mut rng, d, n);
            let a = if n == 1 {
                random_matrix(&mut rng, d, 1)
            } else {
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let nu = Matrix::col(&[theta.cos(), theta.sin()]);
                b + Matrix::outer(&random_matrix(&mut rng, d, 1), &nu)
            };
            (k, a, b)
        })
        .collect();
    let margins = draws
        .par_iter()
        .map(|(k, a, b)| {
            let est = solvers[*k].solve(a, b, Mode::Bulk)?;
            let lower = solvers[*k].lower_bound(a, b, Mode::Bulk)?;
            Ok((est.upper - lower - options.tol).max(lower - est.upper - 1e-12))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(tally("sandwich", margins))
}

/// `J` over the domain equals the sum over the two halves split at `SPLIT_POINT`.
fn additivity(cases: usize, seed: u64) -> Result<CheckResult, CliError> {
    let scalar = Energies::double_well_norm()?;
    let vector = Energies::abs_norm(2, 1)?;
    let oracles = [OracleDensities::new(&scalar)?, OracleDensities::new(&vector)?];
    let mut rng = rng_for(seed, 3);
    let pairs = (0..cases)
        .map(|i| Ok((i % 2, random_pair(&mut rng, 1 + i % 2)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let margins = pairs
        .par_iter()
        .map(|(k, pair)| {
            let oracle = &oracles[*k];
            let (a, b) = pair.domain();
            let part = |lo: f64, hi: f64| -> Result<f64, CliError> {
                let p = MsdPair::new(pair.g.restrict(lo, hi)?, pair.big_g.restrict(lo, hi)?)?;
                Ok(eval_j_measure(&p, oracle)?.0)
            };
            let whole = eval_j_measure(pair, oracle)?.0;
            let split = part(a, SPLIT_POINT)? + part(SPLIT_POINT, b)?;
            Ok((split - whole).abs() - ADDITIVITY_TOL * (1.0 + whole.abs()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(tally("additivity", margins))
}

/// The four parts of `G` sum back to `G`, and the jump part sits on jumps of `g`.
fn decomposition_sum(cases: usize, seed: u64) -> Result<CheckResult, CliError> {
    let mut rng = rng_for(seed, 4);
    let mut margins = Vec::with_capacity(cases);
    for i in 0..cases {
        let pair = random_pair(&mut rng, 1 + i % 2)?;
        let parts = decompose(&pair)?;
        let residual = total_variation(&parts.sum()?.sub(&pair.big_g)?)?;
        let on_jumps = parts.jump.atoms().iter().all(|a| pair.g.derivative().atom_at(a.x).is_some());
        let off_jumps = parts.singular_rest.atoms().iter().all(|a| pair.g.derivative().atom_at(a.x).is_none());
        let margin = residual - DECOMPOSITION_TOL;
        margins.push(if on_jumps && off_jumps { margin } else { f64::INFINITY });
    }
    Ok(tally("decomposition-sum", margins))
}

/// `H(A, B) <= int_Q H(A + grad v, B + w)` on random mesh perturbations;
/// every eighth case uses `|.|` in the plane.
fn qcc(cases: usize, seed: u64, options: SolveOptions<f64>) -> Result<CheckResult, CliError> {
    let mut catalog = scalar_catalog()?;
    let planar = catalog.len();
    catalog.push(Energies::abs_norm(2, 2)?);
    let mut rng = rng_for(seed, 5);
    let draws: Vec<(usize, Matrix, Matrix, u64)> = (0..cases)
        .map(|i| {
            let k = if i % 8 == 7 { planar } else { i % planar };
            let (d, n) = (catalog[k].d(), catalog[k].n());
            (k, random_matrix(&mut rng, d, n), random_matrix(&mut rng, d, n), rng.gen())
        })
        .collect();
    let margins = draws
        .par_iter()
        .map(|(k, a, b, s)| {
            let report = qcc_spot_test(&catalog[*k], a, b, 1, *s, options)?;
            Ok(if report.violations == 0 { report.worst_margin.min(0.0) } else { report.worst_margin })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(tally("qcc", margins))
}

/// A surface density declaring `C_psi = 1/2` while `psi = |.|` must be rejected.
fn adversarial_rejection() -> Result<CheckResult, CliError> {
    let mut psi = SurfaceDensity::norm(1, 1)?;
    psi.constants.cap_psi = 0.5;
    let rejected = EnergyPair::new(BulkDensity::abs(1, 1)?, psi).is_err();
    Ok(CheckResult { name: "validation", cases: 1, violations: usize::from(!rejected), worst: 0.0 })
}

/// Runs every check with `budget` cases split evenly among the five properties.
pub fn run_suite(seed: u64, budget: usize, tol: f64) -> Result<Vec<CheckResult>, CliError> {
    if budget < MIN_BUDGET {
        return Err(CliError::Spec(format!("budget must be at least {MIN_BUDGET}, got {budget}")));
    }
    if !(tol > 0.0) {
        return Err(CliError::Spec(format!("--tol must be positive, got {tol}")));
    }
    let options = SolveOptions { tol, ..SolveOptions::default() };
    let per = budget / 5;
    Ok(vec![
        homogeneity(per, seed, options)?,
        sandwich(per, seed, options)?,
        additivity(per, seed)?,
        decomposition_sum(per, seed)?,
        qcc(budget - 4 * per, seed, options)?,
        adversarial_rejection()?,
    ])
}

pub fn table(results: &[CheckResult]) -> String {
    let mut out = format!("{:<18} {:>6} {:>10} {:>14}  status\n", "check", "cases", "violations", "worst");
    for r in results {
        out.push_str(&format!(
            "{:<18} {:>6} {:>10} {:>14.6e}  {}\n",
            r.name,
            r.cases,
            r.violations,
            r.worst,
            if r.passed() { "PASS" } else { "FAIL" }
        ));
    }
    out
}

/// Prints the pass/fail table; with `out`, also writes it as JSON.
pub fn cmd_verify(seed: u64, budget: usize, out: Option<&Path>, settings: &Settings) -> Result<Status, CliError> {
    let results = run_suite(seed, budget, settings.tol)?;
    print!("{}", table(&results));
    if let Some(path) = out {
        let checks: Vec<_> = results
            .iter()
            .map(|r| json!({"check": r.name, "cases": r.cases, "violations": r.violations, "worst": r.worst, "passed": r.passed()}))
            .collect();
        let doc = json!({"schema": crate::problem::SCHEMA_VERSION, "seed": seed, "budget": budget, "checks": checks});
        emit(Some(path), &json_bytes(&doc))?;
    }
    let failing: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    Ok(if failing.is_empty() { Status::Ok } else { Status::Failed(format!("failing checks: {}", failing.join(", "))) })
}
