//! The energy `E`, its recession variant, and the relaxed functional `J` of a
//! pair `(g, G)` on an interval, with Dirichlet and penalised variants.
//!
//! `J` is evaluated in two ways that must agree: term by term over the
//! decomposition of `G` relative to `Dg`, and as a single Goffman-Serrin
//! integral of the stacked measure `(Dg, G)`.

use std::cell::Cell;

use crate::cell::{CellSolver, Mode, SolveOptions};
use crate::energy::EnergyPair;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::measure::{decompose, goffman_serrin, Atom, BvFunction1D, Measure1D, MsdPair};
use crate::poly::PiecewisePoly;
use crate::scalar::{Real, Scalar};

/// Quadrature tolerance for bulk integrals.
pub const BULK_TOL: f64 = 1e-8;

/// Constant `C(1)` with `|Dv| <= C(1) int |grad v|` for the sawtooth corrector.
pub const DEFAULT_ALBERTI_CONSTANT: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityValue<T> {
    pub value: T,
    pub flagged: bool,
}

impl<T> DensityValue<T> {
    pub fn exact(value: T) -> Self {
        Self { value, flagged: false }
    }
}

/// Source of the relaxed densities for `N = 1`: `H(A, B)` and
/// `h^c(A, B)`. The jump density is `h^j(l, L, +1) = h^c(l, L)`.
pub trait DensityProvider<T: Scalar> {
    fn dim(&self) -> usize;
    fn bulk(&self, a: &Mat<T>, b: &Mat<T>) -> Result<DensityValue<T>>;
    fn recession(&self, a: &Mat<T>, b: &Mat<T>) -> Result<DensityValue<T>>;
}

/// `H = h^c = |B| + |A - B|` for `W = psi = |.|`, valid over any scalar type
/// whose norms of the arguments are exact.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormAbsNorm {
    pub d: usize,
}

impl<T: Scalar> DensityProvider<T> for ClosedFormAbsNorm {
    fn dim(&self) -> usize {
        self.d
    }

    fn bulk(&self, a: &Mat<T>, b: &Mat<T>) -> Result<DensityValue<T>> {
        Ok(DensityValue::exact(T::norm(b.as_slice()) + T::norm((*a - *b).as_slice())))
    }

    fn recession(&self, a: &Mat<T>, b: &Mat<T>) -> Result<DensityValue<T>> {
        self.bulk(a, b)
    }
}

/// Closed-form one-dimensional densities `W**(B) + psi(A - B, +1)`.
pub struct OracleDensities<T: Real> {
    solver: CellSolver<T>,
}

impl<T: Real> OracleDensities<T> {
    pub fn new(pair: &EnergyPair<T>) -> Result<Self> {
        if pair.n() != 1 {
            return Err(Error::UnsupportedDimension("relaxed functionals need N = 1".into()));
        }
        // Rejects vector-valued non-convex bulk densities.
        crate::cell::oracle_h_1d(pair, &Mat::zeros(pair.d(), 1), &Mat::zeros(pair.d(), 1))?;
        Ok(Self { solver: CellSolver::new(pair, SolveOptions::default())? })
    }

    fn eval(&self, a: &Mat<T>, b: &Mat<T>, mode: Mode) -> Result<DensityValue<T>> {
        let d = self.solver.pair().d();
        a.check_shape(d, 1, "A")?;
        b.check_shape(d, 1, "B")?;
        Ok(DensityValue::exact(crate::cell::oracle_value(&self.solver, a, b, mode)))
    }
}

impl<T: Real> DensityProvider<T> for OracleDensities<T> {
    fn dim(&self) -> usize {
        self.solver.pair().d()
    }

    fn bulk(&self, a: &Mat<T>, b: &Mat<T>) -> Result<DensityValue<T>> {
        self.eval(a, b, Mode::Bulk)
    }

    fn recession(&self, a: &Mat<T>, b: &Mat<T>) -> Result<DensityValue<T>> {
        self.eval(a, b, Mode::Recession)
    }
}

/// Densities from the cell solver; flagged estimates propagate.
pub struct SolverDensities<T: Real> {
    solver: CellSolver<T>,
}

impl<T: Real> SolverDensities<T> {
    pub fn new(pair: &EnergyPair<T>, options: SolveOptions<T>) -> Result<Self> {
        if pair.n() != 1 {
            return Err(Error::UnsupportedDimension("relaxed functionals need N = 1".into()));
        }
        Ok(Self { solver: CellSolver::new(pair, options)? })
    }

    fn eval(&self, a: &Mat<T>, b: &Mat<T>, mode: Mode) -> Result<DensityValue<T>> {
        let est = self.solver.solve(a, b, mode)?;
        Ok(DensityValue { value: est.value, flagged: est.flagged })
    }
}

impl<T: Real> DensityProvider<T> for SolverDensities<T> {
    fn dim(&self) -> usize {
        self.solver.pair().d()
    }

    fn bulk(&self, a: &Mat<T>, b: &Mat<T>) -> Result<DensityValue<T>> {
        self.eval(a, b, Mode::Bulk)
    }

    fn recession(&self, a: &Mat<T>, b: &Mat<T>) -> Result<DensityValue<T>> {
        self.eval(a, b, Mode::Recession)
    }
}

/// The four contributions to `J`; `total` is their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct JBreakdown<T> {
    pub bulk_term: T,
    pub jump_term: T,
    pub cantor_term: T,
    /// Contribution of the part of `G` singular to both `dx` and `|Dg|`.
    pub gsg_term: T,
    pub total: T,
    pub flagged: bool,
}

fn check_provider<T: Scalar>(pair: &MsdPair<T>, densities: &dyn DensityProvider<T>) -> Result<()> {
    if pair.dim() != densities.dim() {
        return Err(Error::Dimension(format!("pair is {}-valued, densities are {}-valued", pair.dim(), densities.dim())));
    }
    Ok(())
}

/// `int h(x) dx` for `h = f(grad g, G^a)` over the common refinement of both densities.
fn integrate_joint<T: Scalar>(
    g: &PiecewisePoly<T>,
    big_g: &PiecewisePoly<T>,
    flagged: &Cell<bool>,
    f: &dyn Fn(&Mat<T>, &Mat<T>) -> Result<DensityValue<T>>,
) -> Result<T> {
    let d = g.shape().0;
    let joint = g.stack(big_g)?;
    joint.integrate_composed(
        &|v: &Mat<T>| {
            let (a, b) = v.split(d);
            let out = f(&a, &b)?;
            flagged.set(flagged.get() | out.flagged);
            Ok(out.value)
        },
        BULK_TOL,
    )
}

/// `J` as bulk + jump + Cantor + `G^s_g` terms.
pub fn eval_j_fourterm<T: Scalar>(pair: &MsdPair<T>, densities: &dyn DensityProvider<T>) -> Result<JBreakdown<T>> {
    check_provider(pair, densities)?;
    let dec = decompose(pair)?;
    let dg = pair.g.derivative();
    let d = pair.dim();
    let zero = Mat::zeros(d, 1);
    let flagged = Cell::new(false);
    let h_c = |a: &Mat<T>, b: &Mat<T>| -> Result<T> {
        let out = densities.recession(a, b)?;
        flagged.set(flagged.get() | out.flagged);
        Ok(out.value)
    };

    let bulk_term = integrate_joint(dg.density(), pair.big_g.density(), &flagged, &|a, b| densities.bulk(a, b))?;

    // In one dimension dG^j/dH^0 at a jump point is the atom weight of G.
    let mut jump_term = T::zero();
    for jump in dg.atoms() {
        let weight = dec.jump.atom_at(jump.x).unwrap_or(zero);
        jump_term = jump_term + h_c(&jump.weight, &weight)?;
    }

    // Matched carriers: dD^c g/d|D^c g| and dG^c/d|D^c g| are constant per
    // component, so the integral is h^c(m, M) by homogeneity.
    let mut cantor_term = T::zero();
    for own in dg.cantor_parts() {
        let matched = dec
            .cantor
            .cantor_parts()
            .iter()
            .find(|p| p.scale == own.scale && p.offset == own.offset)
            .map_or(zero, |p| p.weight);
        cantor_term = cantor_term + h_c(&own.weight, &matched)?;
    }

    let mut gsg_term = T::zero();
    let rest = &dec.singular_rest;
    for w in rest.atoms().iter().map(|a| a.weight).chain(rest.cantor_parts().iter().map(|p| p.weight)) {
        gsg_term = gsg_term + h_c(&zero, &w)?;
    }

    Ok(JBreakdown {
        bulk_term,
        jump_term,
        cantor_term,
        gsg_term,
        total: bulk_term + jump_term + cantor_term + gsg_term,
        flagged: flagged.get(),
    })
}

/// `J` as the Goffman-Serrin integral of `(Dg, G)` with integrand `H` and
/// recession `h^c`. Returns the value and whether any density was flagged.
pub fn eval_j_measure<T: Real>(pair: &MsdPair<T>, densities: &dyn DensityProvider<T>) -> Result<(T, bool)> {
    check_provider(pair, densities)?;
    let d = pair.dim();
    let joint = pair.g.derivative().stack(&pair.big_g)?;
    let flagged = Cell::new(false);
    let wrap = |out: DensityValue<T>| {
        flagged.set(flagged.get() | out.flagged);
        out.value
    };
    let h = |v: &Mat<T>| {
        let (a, b) = v.split(d);
        densities.bulk(&a, &b).map(wrap)
    };
    let h_inf = |v: &Mat<T>| {
        let (a, b) = v.split(d);
        densities.recession(&a, &b).map(wrap)
    };
    let value = goffman_serrin(&joint, &h, Some(&h_inf))?;
    Ok((value, flagged.get()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Left,
    Right,
}

impl Endpoint {
    /// Outward normal.
    pub fn normal(self) -> i32 {
        match self {
            Endpoint::Left => -1,
            Endpoint::Right => 1,
        }
    }
}

/// Boundary datum `u0` prescribed on the endpoints in `gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSpec<T> {
    pub gamma: Vec<(Endpoint, Mat<T>)>,
}

/// `J` on the open interval plus `h^c((tr g - u0) nu, G({e}))` at every
/// endpoint `e` of `gamma`, where `G({e})` are the boundary atoms of `G`.
pub fn eval_j_dirichlet<T: Real>(
    pair: &MsdPair<T>,
    densities: &dyn DensityProvider<T>,
    spec: &DirichletSpec<T>,
) -> Result<(T, bool)> {
    if spec.gamma.is_empty() {
        return Err(Error::Precondition("Dirichlet part of the boundary is empty".into()));
    }
    let (mut total, mut flagged) = eval_j_measure(pair, densities)?;
    let boundary = pair.big_g.boundary_atoms();
    for (end, u0) in &spec.gamma {
        u0.check_shape(pair.dim(), 1, "boundary datum")?;
        let (trace, atom) = match end {
            Endpoint::Left => (pair.g.trace_left(), boundary[0]),
            Endpoint::Right => (pair.g.trace_right(), boundary[1]),
        };
        let nu = T::from_i32(end.normal()).expect("unit normal");
        let lambda = (trace - *u0).scale(nu);
        let out = densities.recession(&lambda, &atom.unwrap_or(Mat::zeros(pair.dim(), 1)))?;
        total = total + out.value;
        flagged |= out.flagged;
    }
    Ok((total, flagged))
}

fn sbv_energy<T: Real>(u: &BvFunction1D<T>, energies: &EnergyPair<T>, mode: Mode) -> Result<T> {
    if u.dim() != energies.d() || energies.n() != 1 {
        return Err(Error::Dimension("function and energy dimensions differ".into()));
    }
    if !u.is_sbv() {
        return Err(Error::Precondition("the energy is defined on SBV functions only".into()));
    }
    let w = energies.bulk();
    let bulk = u.derivative().density().integrate_real(
        &|a: &Mat<T>| {
            Ok(match mode {
                Mode::Bulk => w.value(a),
                Mode::Recession => w.recession_value(a),
            })
        },
        BULK_TOL,
    )?;
    let nu = Mat::scalar(T::one());
    Ok(u.jumps().iter().fold(bulk, |s, j| s + energies.surface().value(&j.weight, &nu)))
}

/// `E(u) = int W(grad u) dx + sum psi([u], +1)`.
pub fn eval_e<T: Real>(u: &BvFunction1D<T>, energies: &EnergyPair<T>) -> Result<T> {
    sbv_energy(u, energies, Mode::Bulk)
}

/// `E` with `W` replaced by `W^inf`.
pub fn eval_e_infty<T: Real>(u: &BvFunction1D<T>, energies: &EnergyPair<T>) -> Result<T> {
    sbv_energy(u, energies, Mode::Recession)
}

/// `E(g) + R int |grad g - G| dx` for absolutely continuous `G`.
pub fn eval_e_r<T: Real>(g: &BvFunction1D<T>, big_g: &Measure1D<T>, r: T, energies: &EnergyPair<T>) -> Result<T> {
    if !big_g.is_absolutely_continuous() || big_g.boundary_atoms().iter().any(Option::is_some) {
        return Err(Error::Precondition("the penalised energy needs an absolutely continuous G".into()));
    }
    if !(r >= T::zero()) {
        return Err(Error::Precondition("penalty weight must be nonnegative".into()));
    }
    let e = eval_e(g, energies)?;
    if r == T::zero() {
        return Ok(e);
    }
    let mismatch = g.derivative().density().add(&big_g.density().scale(-T::one()))?.abs_integral()?;
    Ok(e + r * mismatch)
}

/// `R_0 = L + C_psi C(1)`; only `N = 1` is supported.
pub fn threshold_r0<T: Real>(energies: &EnergyPair<T>, n: usize, alberti: T) -> Result<T> {
    if n != 1 || energies.n() != 1 {
        return Err(Error::UnsupportedDimension("the penalty threshold is available for N = 1".into()));
    }
    Ok(energies.bulk().constants.lip + energies.surface().constants.cap_psi * alberti)
}

/// Corrector `v` with `grad v = G - grad g`, reset to zero at the nodes of a
/// uniform partition by compensating jumps, so `|Dv| <= 2 int |grad v|` and
/// `grad (g + v) = G`.
pub fn penalty_corrector<T: Real>(g: &BvFunction1D<T>, big_g: &Measure1D<T>, cells: usize) -> Result<BvFunction1D<T>> {
    if !big_g.is_absolutely_continuous() {
        return Err(Error::Precondition("the corrector needs an absolutely continuous G".into()));
    }
    if cells == 0 {
        return Err(Error::Precondition("the corrector needs at least one cell".into()));
    }
    let (a, b) = g.domain();
    let density = big_g.density().add(&g.derivative().density().scale(-T::one()))?;
    let width = (b - a) / T::from_usize_exact(cells);
    let mut atoms = Vec::with_capacity(cells.saturating_sub(1));
    for i in 1..cells {
        let x1 = a + width * T::from_usize_exact(i);
        let x0 = x1 - width;
        let mass = density.integral_to(x1) - density.integral_to(x0);
        atoms.push(Atom { x: x1, weight: -mass });
    }
    let derivative = Measure1D::new(density, atoms, vec![])?;
    BvFunction1D::new(Mat::zeros(g.dim(), 1), derivative)
}
