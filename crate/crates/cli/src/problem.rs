//! JSON problem files. Every file carries `"schema": 1`; unknown keys are
//! rejected so typos surface as errors naming the key.

use std::path::Path;

use msd_relax::cell::Mode;
use msd_relax::energy::{BulkDensity, EnergyPair, SurfaceDensity};
use msd_relax::functional::{DirichletSpec, Endpoint};
use msd_relax::measure::{Atom, CantorPart};
use msd_relax::poly::PiecewisePoly;
use msd_relax::{BvFunction, Energies, Matrix, Measure, MsdPair};
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u64 = 1;

/// A vector given as a bare number (one component) or an array.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum VecJson {
    One(f64),
    Many(Vec<f64>),
}

/// A matrix given as a bare number, an array of rows, or a column.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum MatJson {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
    Column(Vec<f64>),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsJson {
    #[serde(rename = "c_W")]
    pub c_w: Option<f64>,
    #[serde(rename = "C_W")]
    pub cap_w: Option<f64>,
    #[serde(rename = "L")]
    pub lip: Option<f64>,
    pub alpha: Option<f64>,
    pub c_rec: Option<f64>,
    pub c_psi: Option<f64>,
    #[serde(rename = "C_psi")]
    pub cap_psi: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityJson {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub constants: Option<ConstantsJson>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergiesJson {
    pub bulk: DensityJson,
    pub surface: DensityJson,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecesJson {
    pub breakpoints: Vec<f64>,
    /// Coefficients of each piece in the local coordinate `x - left break`.
    pub pieces: Vec<Vec<VecJson>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub x: f64,
    pub w: VecJson,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorJson {
    /// `[scale, offset]` of the carrier `offset + scale * C`.
    pub map: [f64; 2],
    pub w: VecJson,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    pub domain: [f64; 2],
    #[serde(default)]
    pub density: Option<PiecesJson>,
    #[serde(default)]
    pub atoms: Vec<AtomJson>,
    #[serde(default)]
    pub cantor: Vec<CantorJson>,
}

/// A BV function: its left trace and the measure fields of its derivative.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvJson {
    pub domain: [f64; 2],
    pub left_value: VecJson,
    #[serde(default)]
    pub density: Option<PiecesJson>,
    #[serde(default)]
    pub atoms: Vec<AtomJson>,
    #[serde(default)]
    pub cantor: Vec<CantorJson>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsdJson {
    pub g: BvJson,
    #[serde(rename = "G")]
    pub big_g: MeasureJson,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeJson {
    Bulk,
    Recession,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellJson {
    #[serde(rename = "A")]
    pub a: MatJson,
    #[serde(rename = "B")]
    pub b: MatJson,
    #[serde(default)]
    pub mode: Option<ModeJson>,
    /// Jump normal; `A` is then the jump vector of `h^j`.
    #[serde(default)]
    pub nu: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum EndpointJson {
    Left,
    Right,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletJson {
    /// Boundary datum; its one-sided traces at the endpoints are used.
    pub u0: BvJson,
    pub gamma: Vec<EndpointJson>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyJson {
    #[serde(rename = "R")]
    pub r: f64,
    /// Constant `C(1)` of the threshold `L + C_psi C(1)`.
    #[serde(default)]
    pub alberti: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxJson {
    #[serde(default)]
    pub schedule: Option<Vec<usize>>,
}

/// One problem file; each subcommand reads the keys it needs.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub schema: u64,
    #[serde(default)]
    pub energies: Option<EnergiesJson>,
    #[serde(default)]
    pub cell: Option<OneOrMany<CellJson>>,
    /// Scales `t` for the recession estimates `H(tA, tB)/t`.
    #[serde(default)]
    pub recession_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub msd: Option<MsdJson>,
    #[serde(default)]
    pub dirichlet: Option<DirichletJson>,
    #[serde(default)]
    pub penalty: Option<PenaltyJson>,
    #[serde(default)]
    pub approx: Option<ApproxJson>,
}

fn spec_err(msg: impl Into<String>) -> CliError {
    CliError::Spec(msg.into())
}

impl Problem {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let problem: Problem = serde_json::from_str(text).map_err(|e| spec_err(e.to_string()))?;
        if problem.schema != SCHEMA_VERSION {
            return Err(spec_err(format!("schema: unsupported version {}, expected {SCHEMA_VERSION}", problem.schema)));
        }
        Ok(problem)
    }

    pub fn require<'a, T>(field: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| spec_err(format!("missing key `{key}`")))
    }
}

pub fn to_vector(v: &VecJson, d: usize, key: &str) -> Result<Matrix, CliError> {
    let values = match v {
        VecJson::One(x) => vec![*x],
        VecJson::Many(xs) => xs.clone(),
    };
    if values.len() != d {
        return Err(spec_err(format!("{key}: expected {d} components, got {}", values.len())));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(spec_err(format!("{key}: non-finite entry")));
    }
    Ok(Matrix::col(&values))
}

fn vector_len(v: &VecJson) -> usize {
    match v {
        VecJson::One(_) => 1,
        VecJson::Many(xs) => xs.len(),
    }
}

pub fn to_matrix(m: &MatJson, key: &str) -> Result<Matrix, CliError> {
    let rows: Vec<Vec<f64>> = match m {
        MatJson::Scalar(x) => vec![vec![*x]],
        MatJson::Rows(rows) => rows.clone(),
        MatJson::Column(col) => col.iter().map(|x| vec![*x]).collect(),
    };
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || rows.len() > 2 || cols == 0 || cols > 2 || rows.iter().any(|r| r.len() != cols) {
        return Err(spec_err(format!("{key}: expected a rectangular matrix with 1 or 2 rows and columns")));
    }
    let flat: Vec<f64> = rows.concat();
    if flat.iter().any(|x| !x.is_finite()) {
        return Err(spec_err(format!("{key}: non-finite entry")));
    }
    Ok(Matrix::from_rows(rows.len(), cols, &flat))
}

fn check_domain(domain: [f64; 2], key: &str) -> Result<(f64, f64), CliError> {
    if !(domain[0].is_finite() && domain[1].is_finite() && domain[0] < domain[1]) {
        return Err(spec_err(format!("{key}.domain: expected finite a < b")));
    }
    Ok((domain[0], domain[1]))
}

fn build_measure(
    domain: [f64; 2],
    density: &Option<PiecesJson>,
    atoms: &[AtomJson],
    cantor: &[CantorJson],
    d: usize,
    key: &str,
) -> Result<Measure, CliError> {
    let (a, b) = check_domain(domain, key)?;
    let poly = match density {
        None => PiecewisePoly::zero(a, b, d, 1),
        Some(p) => {
            if p.breakpoints.first() != Some(&a) || p.breakpoints.last() != Some(&b) {
                return Err(spec_err(format!("{key}.density.breakpoints: must start at {a} and end at {b}")));
            }
            let pieces = p
                .pieces
                .iter()
                .enumerate()
                .map(|(i, coeffs)| {
                    coeffs
                        .iter()
                        .map(|c| to_vector(c, d, &format!("{key}.density.pieces[{i}]")))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            PiecewisePoly::new(p.breakpoints.clone(), pieces, d, 1)
                .map_err(|e| spec_err(format!("{key}.density: {e}")))?
        }
    };
    let atoms = atoms
        .iter()
        .enumerate()
        .map(|(i, at)| Ok(Atom { x: at.x, weight: to_vector(&at.w, d, &format!("{key}.atoms[{i}].w"))? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let cantor = cantor
        .iter()
        .enumerate()
        .map(|(i, part)| {
            Ok(CantorPart {
                scale: part.map[0],
                offset: part.map[1],
                weight: to_vector(&part.w, d, &format!("{key}.cantor[{i}].w"))?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Measure::new(poly, atoms, cantor).map_err(|e| spec_err(format!("{key}: {e}")))
}

impl MeasureJson {
    /// Vector dimension implied by the first atom, Cantor part or coefficient.
    pub fn dim(&self) -> Option<usize> {
        self.atoms
            .first()
            .map(|a| vector_len(&a.w))
            .or_else(|| self.cantor.first().map(|c| vector_len(&c.w)))
            .or_else(|| self.density.as_ref().and_then(|p| p.pieces.iter().flatten().next().map(vector_len)))
    }

    pub fn build(&self, d: usize, key: &str) -> Result<Measure, CliError> {
        build_measure(self.domain, &self.density, &self.atoms, &self.cantor, d, key)
    }
}

impl BvJson {
    pub fn dim(&self) -> usize {
        vector_len(&self.left_value)
    }

    pub fn build(&self, key: &str) -> Result<BvFunction, CliError> {
        let d = self.dim();
        let left = to_vector(&self.left_value, d, &format!("{key}.left_value"))?;
        let derivative = build_measure(self.domain, &self.density, &self.atoms, &self.cantor, d, key)?;
        BvFunction::new(left, derivative).map_err(|e| spec_err(format!("{key}: {e}")))
    }
}

impl MsdJson {
    pub fn build(&self) -> Result<MsdPair, CliError> {
        let g = self.g.build("msd.g")?;
        let big_g = self.big_g.build(g.dim(), "msd.G")?;
        MsdPair::new(g, big_g).map_err(|e| spec_err(format!("msd: {e}")))
    }
}

impl DirichletJson {
    pub fn build(&self, d: usize) -> Result<DirichletSpec<f64>, CliError> {
        let u0 = self.u0.build("dirichlet.u0")?;
        if u0.dim() != d {
            return Err(spec_err(format!("dirichlet.u0: expected {d} components")));
        }
        let gamma = self
            .gamma
            .iter()
            .map(|e| match e {
                EndpointJson::Left => (Endpoint::Left, u0.trace_left()),
                EndpointJson::Right => (Endpoint::Right, u0.trace_right()),
            })
            .collect();
        Ok(DirichletSpec { gamma })
    }
}

impl From<ModeJson> for Mode {
    fn from(m: ModeJson) -> Self {
        match m {
            ModeJson::Bulk => Mode::Bulk,
            ModeJson::Recession => Mode::Recession,
        }
    }
}

impl EnergiesJson {
    /// The validated pair for gradients of shape `d x n`.
    pub fn build(&self, d: usize, n: usize) -> Result<Energies, CliError> {
        let bulk = self.bulk_density(d, n)?;
        let surface = self.surface_density(d, n)?;
        EnergyPair::new(bulk, surface).map_err(|e| spec_err(format!("energies: {e}")))
    }

    fn bulk_density(&self, d: usize, n: usize) -> Result<BulkDensity<f64>, CliError> {
        let spec = &self.bulk;
        let p = &spec.params;
        let fail = |e: msd_relax::Error| spec_err(format!("energies.bulk: {e}"));
        let mut w = match spec.kind.as_str() {
            "abs" => BulkDensity::abs(d, n).map_err(fail)?,
            "area" => BulkDensity::area(d, n).map_err(fail)?,
            "double-well" if (d, n) == (1, 1) => BulkDensity::double_well(),
            "custom-grid" if (d, n) == (1, 1) => {
                if p.len() % 2 != 0 {
                    return Err(spec_err("energies.bulk.params: custom-grid expects abscissae then values"));
                }
                let (xs, ws) = p.split_at(p.len() / 2);
                BulkDensity::custom_grid(xs.to_vec(), ws.to_vec(), None).map_err(fail)?
            }
            "double-well" | "custom-grid" => {
                return Err(spec_err(format!("energies.bulk.kind: {} is scalar, got {d}x{n} gradients", spec.kind)))
            }
            other => return Err(spec_err(format!("energies.bulk.kind: unknown density `{other}`"))),
        };
        if let Some(k) = &spec.constants {
            if k.c_psi.is_some() || k.cap_psi.is_some() {
                return Err(spec_err("energies.bulk.constants: c_psi and C_psi belong to the surface density"));
            }
            let slot = &mut w.constants;
            for (field, value) in [
                (&mut slot.c_w, k.c_w),
                (&mut slot.cap_w, k.cap_w),
                (&mut slot.lip, k.lip),
                (&mut slot.alpha, k.alpha),
                (&mut slot.c_rec, k.c_rec),
            ] {
                if let Some(v) = value {
                    *field = v;
                }
            }
        }
        Ok(w)
    }

    fn surface_density(&self, d: usize, n: usize) -> Result<SurfaceDensity<f64>, CliError> {
        let spec = &self.surface;
        let fail = |e: msd_relax::Error| spec_err(format!("energies.surface: {e}"));
        let mut psi = match spec.kind.as_str() {
            "norm" => SurfaceDensity::norm(d, n).map_err(fail)?,
            "anisotropic-norm" => {
                let (kappa, weights) = spec
                    .params
                    .split_last()
                    .ok_or_else(|| spec_err("energies.surface.params: expected weights followed by kappa"))?;
                SurfaceDensity::anisotropic(d, n, weights.to_vec(), *kappa).map_err(fail)?
            }
            other => return Err(spec_err(format!("energies.surface.kind: unknown density `{other}`"))),
        };
        if let Some(k) = &spec.constants {
            if [k.c_w, k.cap_w, k.lip, k.alpha, k.c_rec].iter().any(Option::is_some) {
                return Err(spec_err("energies.surface.constants: only c_psi and C_psi apply"));
            }
            if let Some(v) = k.c_psi {
                psi.constants.c_psi = v;
            }
            if let Some(v) = k.cap_psi {
                psi.constants.cap_psi = v;
            }
        }
        Ok(psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = Problem::parse(r#"{"schema": 1, "energy": {}}"#).unwrap_err();
        assert!(err.to_string().contains("energy"), "{err}");
    }

    #[test]
    fn schema_version_is_required() {
        assert!(Problem::parse(r#"{"cell": []}"#).unwrap_err().to_string().contains("schema"));
        assert!(Problem::parse(r#"{"schema": 2}"#).is_err());
    }

    #[test]
    fn matrices_accept_three_spellings() {
        let parse = |s: &str| to_matrix(&serde_json::from_str(s).unwrap(), "A").unwrap();
        assert_eq!(parse("2.5"), Matrix::scalar(2.5));
        assert_eq!(parse("[[1, 2], [3, 4]]"), Matrix::from_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(parse("[1, 2]"), Matrix::col(&[1.0, 2.0]));
        assert!(to_matrix(&serde_json::from_str("[[1, 2], [3]]").unwrap(), "A").is_err());
    }

    #[test]
    fn measures_round_trip_their_parts() {
        let m: MeasureJson = serde_json::from_str(
            r#"{"domain": [-1, 1], "density": {"breakpoints": [-1, 0, 1], "pieces": [[1], [0, 2]]},
                "atoms": [{"x": 0.5, "w": 3}], "cantor": [{"map": [0.5, 0], "w": [1]}]}"#,
        )
        .unwrap();
        assert_eq!(m.dim(), Some(1));
        let mu = m.build(1, "G").unwrap();
        assert_eq!(mu.atoms().len(), 1);
        assert_eq!(mu.cantor_parts().len(), 1);
        assert_eq!(mu.density().eval(0.5), Matrix::scalar(1.0));
    }

    #[test]
    fn breakpoints_must_span_the_domain() {
        let m: MeasureJson =
            serde_json::from_str(r#"{"domain": [0, 1], "density": {"breakpoints": [0, 0.5], "pieces": [[1]]}}"#).unwrap();
        assert!(m.build(1, "G").unwrap_err().to_string().contains("breakpoints"));
    }

    #[test]
    fn constants_are_checked_against_their_density() {
        let e: EnergiesJson = serde_json::from_str(
            r#"{"bulk": {"kind": "abs", "constants": {"c_psi": 1}}, "surface": {"kind": "norm"}}"#,
        )
        .unwrap();
        assert!(e.build(1, 1).is_err());
        let e: EnergiesJson =
            serde_json::from_str(r#"{"bulk": {"kind": "abs"}, "surface": {"kind": "norm", "constants": {"C_psi": 0.5}}}"#)
                .unwrap();
        assert!(e.build(1, 1).unwrap_err().to_string().contains("psi"));
    }
}
