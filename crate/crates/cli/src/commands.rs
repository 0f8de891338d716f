//! `density`, `functional`, `decompose` and `approx`.

use std::path::Path;

use msd_relax::approx::{default_schedule, energy_convergence_experiment};
use msd_relax::cell::{estimate_hc, estimate_hj, solve_h, SolveOptions};
use msd_relax::functional::{
    eval_e_r, eval_j_dirichlet, eval_j_fourterm, eval_j_measure, threshold_r0, ClosedFormAbsNorm, DensityProvider,
    OracleDensities, SolverDensities, DEFAULT_ALBERTI_CONSTANT,
};
use msd_relax::measure::decompose;
use msd_relax::{Energies, Estimate, Matrix};
use rayon::prelude::*;
use serde_json::json;

use crate::problem::{to_matrix, CellJson, ModeJson, Problem};
use crate::report::{csv_bytes, emit, fmt_sig, json_bytes, measure_json};
use crate::{CliError, Settings, Status};

/// Default scales for `H(tA, tB)/t`.
pub const RECESSION_SCHEDULE: [f64; 3] = [10.0, 100.0, 1000.0];

/// Relative agreement required between the two forms of `J`.
const FORM_TOL: f64 = 1e-6;

enum Query {
    Bulk,
    Recession,
    Jump(Matrix),
}

struct Cell {
    a: Matrix,
    b: Matrix,
    query: Query,
}

fn parse_cell(i: usize, cell: &CellJson) -> Result<Cell, CliError> {
    let key = format!("cell[{i}]");
    let a = to_matrix(&cell.a, &format!("{key}.A"))?;
    let b = to_matrix(&cell.b, &format!("{key}.B"))?;
    let query = match (&cell.nu, cell.mode) {
        (Some(_), Some(ModeJson::Bulk)) => {
            return Err(CliError::Spec(format!("{key}.nu: jump densities are recession quantities, mode must not be bulk")))
        }
        (Some(nu), _) => Query::Jump(to_matrix(&crate::problem::MatJson::Column(nu.clone()), &format!("{key}.nu"))?),
        (None, Some(ModeJson::Recession)) => Query::Recession,
        (None, _) => Query::Bulk,
    };
    Ok(Cell { a, b, query })
}

impl Cell {
    /// Shape `(d, N)` of the gradients in the cell problem.
    fn shape(&self) -> (usize, usize) {
        match &self.query {
            Query::Jump(nu) => (self.a.rows(), nu.rows()),
            _ => self.a.shape(),
        }
    }

    /// The matrix argument `A` of the cell problem (`lambda (x) nu` for jumps).
    fn matrix_a(&self) -> Matrix {
        match &self.query {
            Query::Jump(nu) => Matrix::outer(&self.a, nu),
            _ => self.a,
        }
    }
}

fn solve_cell(energies: &Energies, cell: &Cell, schedule: &[f64], options: SolveOptions<f64>) -> Result<Estimate, CliError> {
    Ok(match &cell.query {
        Query::Bulk => solve_h(energies, &cell.a, &cell.b, options)?,
        Query::Recession => estimate_hc(energies, &cell.a, &cell.b, schedule, options)?,
        Query::Jump(nu) => estimate_hj(energies, &cell.a, &cell.b, nu, options)?,
    })
}

fn solver_options(settings: &Settings) -> Result<SolveOptions<f64>, CliError> {
    if !(settings.tol > 0.0) {
        return Err(CliError::Spec(format!("--tol must be positive, got {}", settings.tol)));
    }
    Ok(SolveOptions { tol: settings.tol, ..SolveOptions::default() })
}

/// Density table: one CSV row per cell query.
pub fn cmd_density(spec: &Path, out: Option<&Path>, settings: &Settings) -> Result<Status, CliError> {
    let problem = Problem::read(spec)?;
    let energies_json = Problem::require(&problem.energies, "energies")?;
    let cells = Problem::require(&problem.cell, "cell")?
        .to_vec()
        .iter()
        .enumerate()
        .map(|(i, c)| parse_cell(i, c))
        .collect::<Result<Vec<_>, _>>()?;
    let shape = cells.first().ok_or_else(|| CliError::Spec("cell: no queries".into()))?.shape();
    if let Some(i) = cells.iter().position(|c| c.shape() != shape) {
        return Err(CliError::Spec(format!("cell[{i}]: shape differs from cell[0]")));
    }
    let (d, n) = shape;
    let energies = energies_json.build(d, n)?;
    let options = solver_options(settings)?;
    let schedule = problem.recession_schedule.clone().unwrap_or_else(|| RECESSION_SCHEDULE.to_vec());
    let estimates = cells
        .par_iter()
        .map(|c| solve_cell(&energies, c, &schedule, options))
        .collect::<Result<Vec<_>, _>>()?;

    let entries = |name: &str| -> Vec<String> {
        (1..=d).flat_map(|i| (1..=n).map(move |j| (i, j))).map(|(i, j)| format!("{name}{i}{j}")).collect()
    };
    let mut header = entries("A");
    header.extend(entries("B"));
    header.extend(["value", "lower", "upper", "certificate_id"].map(String::from));
    let rows: Vec<Vec<String>> = cells
        .iter()
        .zip(&estimates)
        .map(|(c, est)| {
            let mut row: Vec<String> = c.matrix_a().as_slice().iter().map(|x| fmt_sig(*x)).collect();
            row.extend(c.b.as_slice().iter().map(|x| fmt_sig(*x)));
            row.extend([fmt_sig(est.value), fmt_sig(est.lower), fmt_sig(est.upper), est.certificate.id()]);
            row
        })
        .collect();
    emit(out, &csv_bytes(&header, &rows)?)?;
    let flagged: Vec<String> =
        estimates.iter().enumerate().filter(|(_, e)| e.flagged).map(|(i, _)| format!("cell[{i}]")).collect();
    Ok(if flagged.is_empty() { Status::Ok } else { Status::Flagged(format!("flagged estimates: {}", flagged.join(", "))) })
}

/// Closed forms where available, then the one-dimensional oracle, then the cell solver.
pub fn densities_for(energies: &Energies, tol: f64) -> Result<Box<dyn DensityProvider<f64> + Sync>, CliError> {
    if energies.bulk().name() == "abs" && energies.surface().is_isotropic_norm() {
        return Ok(Box::new(ClosedFormAbsNorm { d: energies.d() }));
    }
    if let Ok(oracle) = OracleDensities::new(energies) {
        return Ok(Box::new(oracle));
    }
    Ok(Box::new(SolverDensities::new(energies, SolveOptions { tol, ..SolveOptions::default() })?))
}

fn pair_and_energies(problem: &Problem) -> Result<(msd_relax::MsdPair, Energies), CliError> {
    let pair = Problem::require(&problem.msd, "msd")?.build()?;
    let energies = Problem::require(&problem.energies, "energies")?.build(pair.dim(), 1)?;
    Ok((pair, energies))
}

/// `J` in both forms, plus the Dirichlet and penalised variants when requested.
pub fn cmd_functional(spec: &Path, out: Option<&Path>, settings: &Settings) -> Result<Status, CliError> {
    let problem = Problem::read(spec)?;
    let (pair, energies) = pair_and_energies(&problem)?;
    solver_options(settings)?;
    let densities = densities_for(&energies, settings.tol)?;
    let four = eval_j_fourterm(&pair, densities.as_ref())?;
    let (measure_total, measure_flagged) = eval_j_measure(&pair, densities.as_ref())?;
    let forms_agree = (four.total - measure_total).abs() <= FORM_TOL * (1.0 + measure_total.abs());
    let mut flagged = four.flagged || measure_flagged;
    let mut doc = json!({
        "schema": crate::problem::SCHEMA_VERSION,
        "bulk_term": four.bulk_term,
        "jump_term": four.jump_term,
        "cantor_term": four.cantor_term,
        "gsg_term": four.gsg_term,
        "total": four.total,
        "measure_total": measure_total,
        "forms_agree": forms_agree,
    });
    if let Some(dirichlet) = &problem.dirichlet {
        let spec = dirichlet.build(pair.dim())?;
        let (total, f) = eval_j_dirichlet(&pair, densities.as_ref(), &spec)?;
        flagged |= f;
        doc["dirichlet"] = json!({"total": total, "flagged": f});
    }
    if let Some(penalty) = &problem.penalty {
        let r0 = threshold_r0(&energies, 1, penalty.alberti.unwrap_or(DEFAULT_ALBERTI_CONSTANT))?;
        let e_r = eval_e_r(&pair.g, &pair.big_g, penalty.r, &energies)?;
        doc["penalty"] = json!({"R": penalty.r, "R0": r0, "above_threshold": penalty.r > r0, "E_R": e_r});
    }
    doc["flagged"] = json!(flagged);
    emit(out, &json_bytes(&doc))?;
    Ok(match (flagged, forms_agree) {
        (false, true) => Status::Ok,
        (true, _) => Status::Flagged("density estimates were flagged".into()),
        (false, false) => Status::Flagged(format!("forms disagree: {} vs {measure_total}", four.total)),
    })
}

/// Parts of `G` relative to `Dg`.
pub fn cmd_decompose(spec: &Path, out: Option<&Path>, _settings: &Settings) -> Result<Status, CliError> {
    let problem = Problem::read(spec)?;
    let pair = Problem::require(&problem.msd, "msd")?.build()?;
    let parts = decompose(&pair)?;
    let doc = json!({
        "schema": crate::problem::SCHEMA_VERSION,
        "absolutely_continuous": measure_json(&parts.absolutely_continuous),
        "jump": measure_json(&parts.jump),
        "cantor": measure_json(&parts.cantor),
        "singular_rest": measure_json(&parts.singular_rest),
    });
    emit(out, &json_bytes(&doc))?;
    Ok(Status::Ok)
}

/// Energies of the approximating sequence against `J`.
pub fn cmd_approx(spec: &Path, out: Option<&Path>, settings: &Settings) -> Result<Status, CliError> {
    let problem = Problem::read(spec)?;
    let (pair, energies) = pair_and_energies(&problem)?;
    solver_options(settings)?;
    let schedule =
        problem.approx.as_ref().and_then(|a| a.schedule.clone()).unwrap_or_else(default_schedule);
    if schedule.first().is_some_and(|n| *n < 2) {
        return Err(CliError::Spec("approx.schedule: entries must be at least 2".into()));
    }
    let densities = densities_for(&energies, settings.tol)?;
    let report = energy_convergence_experiment(&pair, &energies, densities.as_ref(), &schedule, settings.tol)?;
    let header = ["n", "E_value", "J_value", "weakstar_gap_g", "weakstar_gap_G", "tv_ratio"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt_sig(r.e_value),
                fmt_sig(r.j_value),
                fmt_sig(r.weakstar_gap_g),
                fmt_sig(r.weakstar_gap_big_g),
                fmt_sig(r.tv_ratio),
            ]
        })
        .collect();
    emit(out, &csv_bytes(&header, &rows)?)?;
    Ok(if !report.passed || !report.bounds_passed {
        Status::Failed(format!(
            "liminf {} against J = {} (bounds {})",
            report.liminf,
            report.j_value,
            if report.bounds_passed { "hold" } else { "exceeded" }
        ))
    } else if report.flagged {
        Status::Flagged("density estimates were flagged".into())
    } else {
        Status::Ok
    })
}
