//! Functions of bounded variation on an interval, stored as a left trace
//! plus a distributional derivative.

use super::analysis::{integrate_test, TestDictionary};
use super::{Atom, CantorPart, Measure1D};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::poly::PiecewisePoly;
use crate::scalar::{Real, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct BvFunction1D<T> {
    left: Mat<T>,
    derivative: Measure1D<T>,
}

impl<T: Scalar> BvFunction1D<T> {
    /// The function `x -> left + Du((a, x))` (precise representative at atoms).
    pub fn new(left: Mat<T>, derivative: Measure1D<T>) -> Result<Self> {
        let (r, c) = derivative.shape();
        if c != 1 {
            return Err(Error::Dimension("BV values must be column vectors".into()));
        }
        left.check_shape(r, 1, "left trace")?;
        left.check_finite("left trace")?;
        Ok(Self { left, derivative: derivative.with_boundary_atoms([None, None]) })
    }

    pub fn constant(domain: (T, T), value: Mat<T>) -> Self {
        let d = value.rows();
        Self::new(value, Measure1D::zero(domain, d, 1)).expect("constant function")
    }

    pub fn affine(domain: (T, T), left: Mat<T>, slope: Mat<T>) -> Self {
        let density = PiecewisePoly::constant(domain.0, domain.1, slope);
        Self::new(left, Measure1D::absolutely_continuous(density)).expect("affine function")
    }

    /// `value_left` before `at`, `value_left + jump` after.
    pub fn step(domain: (T, T), value_left: Mat<T>, at: T, jump: Mat<T>) -> Result<Self> {
        Self::new(value_left, Measure1D::dirac(domain, at, jump)?)
    }

    /// Cantor staircase rising by `weight` across the whole domain.
    pub fn cantor_staircase(domain: (T, T), weight: Mat<T>) -> Self {
        let scale = domain.1 - domain.0;
        let mu = Measure1D::cantor_component(domain, scale, domain.0, weight).expect("staircase");
        Self::new(Mat::zeros(weight.rows(), 1), mu).expect("staircase")
    }

    pub fn domain(&self) -> (T, T) {
        self.derivative.domain()
    }

    pub fn dim(&self) -> usize {
        self.left.rows()
    }

    pub fn derivative(&self) -> &Measure1D<T> {
        &self.derivative
    }

    pub fn trace_left(&self) -> Mat<T> {
        self.left
    }

    pub fn trace_right(&self) -> Mat<T> {
        self.left + self.derivative.mass()
    }

    /// Precise representative: the midpoint of the one-sided limits.
    pub fn eval(&self, x: T) -> Mat<T> {
        let two = T::one() + T::one();
        let below = self.derivative.cumulative(x, false);
        let half_atom = self.derivative.atom_at(x).map_or(self.left.scale(T::zero()), |w| w.scale(T::one() / two));
        self.left + below + half_atom
    }

    pub fn is_sbv(&self) -> bool {
        !self.derivative.has_cantor_part()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::new(self.left + other.left, self.derivative.add(&other.derivative)?)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::new(self.left - other.left, self.derivative.sub(&other.derivative)?)
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.left.scale(s), self.derivative.scale(s)).expect("scaled function")
    }

    /// Jump points with their jumps `u(x+) - u(x-)`.
    pub fn jumps(&self) -> &[Atom<T>] {
        self.derivative.atoms()
    }

    pub fn cantor_parts(&self) -> &[CantorPart<T>] {
        self.derivative.cantor_parts()
    }

    /// Restriction to `(lo, hi)` with the left trace taken at `lo`.
    pub fn restrict(&self, lo: T, hi: T) -> Result<Self> {
        let left = self.left + self.derivative.cumulative(lo, true);
        Self::new(left, self.derivative.restrict(lo, hi)?)
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U + Copy) -> BvFunction1D<U> {
        let v: Vec<U> = self.left.as_slice().iter().map(|x| f(*x)).collect();
        BvFunction1D::new(Mat::col(&v), self.derivative.map_scalar(f)).expect("scalar map keeps validity")
    }
}

/// Distributional derivative `Dg`.
pub fn derivative<T: Scalar>(g: &BvFunction1D<T>) -> Measure1D<T> {
    g.derivative().clone()
}

/// A measure structured deformation `(g, G)` in one space dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MsdPair<T> {
    pub g: BvFunction1D<T>,
    pub big_g: Measure1D<T>,
}

impl<T: Scalar> MsdPair<T> {
    pub fn new(g: BvFunction1D<T>, big_g: Measure1D<T>) -> Result<Self> {
        if g.domain() != big_g.domain() {
            return Err(Error::Precondition("g and G live on different domains".into()));
        }
        if big_g.shape() != (g.dim(), 1) {
            return Err(Error::Dimension(format!(
                "G must be {}x1-valued, got {:?}",
                g.dim(),
                big_g.shape()
            )));
        }
        Ok(Self { g, big_g })
    }

    pub fn domain(&self) -> (T, T) {
        self.g.domain()
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U + Copy) -> MsdPair<U> {
        MsdPair { g: self.g.map_scalar(f), big_g: self.big_g.map_scalar(f) }
    }
}

/// `max_j |int phi_j (u - g) dx|`, integrating by parts against the
/// primitives of the dictionary so singular derivatives are handled exactly.
pub fn bv_weakstar_gap<T: Real>(u: &BvFunction1D<T>, g: &BvFunction1D<T>, dict: &TestDictionary) -> Result<T> {
    let h = u.sub(g)?;
    let (a, b) = h.domain();
    let mut worst = T::zero();
    for j in 1..=dict.size {
        let primitive = |x: T| dict.primitive(j, a, b, x);
        let boundary = h.trace_right().scale(primitive(b));
        let bulk = integrate_test(h.derivative(), &primitive)?;
        worst = worst.max((boundary - bulk).norm());
    }
    Ok(worst)
}
