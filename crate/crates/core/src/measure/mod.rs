//! Matrix-valued measures on an interval, BV functions, and the pairs
//! `(g, G)` on which the relaxed functional acts.
//!
//! A measure is a piecewise-polynomial density, finitely many atoms and
//! finitely many weighted Cantor components `weight * C(offset + scale * .)`.
//! Atoms sit strictly inside the domain; atoms at the endpoints are kept
//! apart as boundary atoms and ignored by every interior operation.

mod analysis;
mod bv;
mod cantor;
mod decompose;
mod mollify;

pub use analysis::{
    area_strict_gap, goffman_serrin, integrate_test, total_variation, weakstar_gap, TestDictionary,
};
pub use bv::{bv_weakstar_gap, derivative, BvFunction1D, MsdPair};
pub use cantor::{cantor_cdf, CantorPart, CarrierRelation};
pub use decompose::{decompose, GDecomposition};
pub use mollify::mollify;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::poly::PiecewisePoly;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom<T> {
    pub x: T,
    pub weight: Mat<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measure1D<T> {
    domain: (T, T),
    density: PiecewisePoly<T>,
    atoms: Vec<Atom<T>>,
    cantor: Vec<CantorPart<T>>,
    boundary: [Option<Mat<T>>; 2],
    /// `atom_prefix[i]` is the sum of the first `i` atom weights.
    atom_prefix: Vec<Mat<T>>,
}

impl<T: Scalar> Measure1D<T> {
    pub fn zero(domain: (T, T), rows: usize, cols: usize) -> Self {
        Self::new(PiecewisePoly::zero(domain.0, domain.1, rows, cols), vec![], vec![]).expect("zero measure")
    }

    /// Builds a measure on the density's domain, merging atoms closer than
    /// the location tolerance and identical Cantor carriers.
    pub fn new(density: PiecewisePoly<T>, atoms: Vec<Atom<T>>, cantor: Vec<CantorPart<T>>) -> Result<Self> {
        let domain = (density.lo(), density.hi());
        let (rows, cols) = density.shape();
        let tol = T::location_tol();
        let mut atoms = atoms;
        for a in &atoms {
            a.weight.check_shape(rows, cols, "atom weight")?;
            a.weight.check_finite("atom weight")?;
            if !a.x.is_finite_value() {
                return Err(Error::NonFinite("atom location".into()));
            }
            if a.x < domain.0 - tol || a.x > domain.1 + tol {
                return Err(Error::Precondition(format!("atom at {} lies outside the domain", a.x)));
            }
        }
        atoms.sort_by(|p, q| p.x.partial_cmp(&q.x).expect("finite atom locations"));
        let mut merged: Vec<Atom<T>> = Vec::with_capacity(atoms.len());
        let mut boundary: [Option<Mat<T>>; 2] = [None, None];
        for a in atoms {
            if a.x <= domain.0 + tol || a.x >= domain.1 - tol {
                let side = usize::from(a.x >= domain.1 - tol);
                boundary[side] = Some(boundary[side].map_or(a.weight, |w| w + a.weight));
                continue;
            }
            match merged.last_mut() {
                Some(last) if (a.x - last.x).abs() <= tol => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        merged.retain(|a| !a.weight.is_zero());
        let cantor = cantor::normalise(cantor, domain, rows, cols)?;
        let mut prefix = Vec::with_capacity(merged.len() + 1);
        let mut acc = Mat::zeros(rows, cols);
        prefix.push(acc);
        for a in &merged {
            acc += a.weight;
            prefix.push(acc);
        }
        Ok(Self { domain, density, atoms: merged, cantor, boundary, atom_prefix: prefix })
    }

    pub fn absolutely_continuous(density: PiecewisePoly<T>) -> Self {
        Self::new(density, vec![], vec![]).expect("density-only measure")
    }

    pub fn dirac(domain: (T, T), x: T, weight: Mat<T>) -> Result<Self> {
        let (r, c) = weight.shape();
        Self::new(PiecewisePoly::zero(domain.0, domain.1, r, c), vec![Atom { x, weight }], vec![])
    }

    /// `weight` times the Cantor measure carried by `offset + scale * C`.
    pub fn cantor_component(domain: (T, T), scale: T, offset: T, weight: Mat<T>) -> Result<Self> {
        let (r, c) = weight.shape();
        Self::new(PiecewisePoly::zero(domain.0, domain.1, r, c), vec![], vec![CantorPart { scale, offset, weight }])
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    pub fn shape(&self) -> (usize, usize) {
        self.density.shape()
    }

    pub fn density(&self) -> &PiecewisePoly<T> {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn cantor_parts(&self) -> &[CantorPart<T>] {
        &self.cantor
    }

    /// Atoms at the left and right endpoints.
    pub fn boundary_atoms(&self) -> [Option<Mat<T>>; 2] {
        self.boundary
    }

    pub fn with_boundary_atoms(mut self, boundary: [Option<Mat<T>>; 2]) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn zero_value(&self) -> Mat<T> {
        self.density.zero_value()
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        self.atoms.is_empty() && self.cantor.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.density.is_zero() && self.is_absolutely_continuous()
    }

    pub fn has_cantor_part(&self) -> bool {
        !self.cantor.is_empty()
    }

    pub fn atom_at(&self, x: T) -> Option<Mat<T>> {
        let tol = T::location_tol();
        self.atoms.iter().find(|a| (a.x - x).abs() <= tol).map(|a| a.weight)
    }

    /// `mu(Omega)` over the open domain.
    pub fn mass(&self) -> Mat<T> {
        let mut m = self.density.total() + self.atom_prefix[self.atoms.len()];
        for c in &self.cantor {
            m += c.weight;
        }
        m
    }

    /// `mu((a, x))`; with `closed`, `mu((a, x])`.
    pub fn cumulative(&self, x: T, closed: bool) -> Mat<T> {
        let k = if closed {
            self.atoms.partition_point(|a| a.x <= x)
        } else {
            self.atoms.partition_point(|a| a.x < x)
        };
        let mut m = self.density.integral_to(x) + self.atom_prefix[k];
        for c in &self.cantor {
            m += c.weight.scale(c.cdf(x));
        }
        m
    }

    pub fn ac_part(&self) -> Self {
        Self::absolutely_continuous(self.density.clone())
    }

    pub fn singular_part(&self) -> Self {
        let (r, c) = self.shape();
        Self::new(PiecewisePoly::zero(self.domain.0, self.domain.1, r, c), self.atoms.clone(), self.cantor.clone())
            .expect("singular part of a valid measure")
    }

    pub fn atoms_only(&self) -> Self {
        let (r, c) = self.shape();
        Self::new(PiecewisePoly::zero(self.domain.0, self.domain.1, r, c), self.atoms.clone(), vec![])
            .expect("atomic part of a valid measure")
    }

    pub fn cantor_only(&self) -> Self {
        let (r, c) = self.shape();
        Self::new(PiecewisePoly::zero(self.domain.0, self.domain.1, r, c), vec![], self.cantor.clone())
            .expect("Cantor part of a valid measure")
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::Precondition("measures live on different domains".into()));
        }
        if self.shape() != other.shape() {
            return Err(Error::Dimension("measures have different value shapes".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let density = self.density.add(&other.density)?;
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let mut cantor = self.cantor.clone();
        cantor.extend_from_slice(&other.cantor);
        let boundary = [0, 1].map(|i| match (self.boundary[i], other.boundary[i]) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        });
        Ok(Self::new(density, atoms, cantor)?.with_boundary_atoms(boundary))
    }

    pub fn scale(&self, s: T) -> Self {
        let atoms = self.atoms.iter().map(|a| Atom { x: a.x, weight: a.weight.scale(s) }).collect();
        let cantor = self.cantor.iter().map(|c| CantorPart { weight: c.weight.scale(s), ..*c }).collect();
        let boundary = self.boundary.map(|b| b.map(|w| w.scale(s)));
        Self::new(self.density.scale(s), atoms, cantor).expect("scaled measure").with_boundary_atoms(boundary)
    }

    pub fn neg(&self) -> Self {
        self.scale(-T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Pointwise stack `(mu, nu)` of two column-valued measures; Cantor
    /// components with identical carriers are combined.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::Precondition("measures live on different domains".into()));
        }
        let (ra, rb) = (self.shape().0, other.shape().0);
        let (za, zb) = (Mat::zeros(ra, 1), Mat::zeros(rb, 1));
        let density = self.density.stack(&other.density)?;
        let mut atoms: Vec<Atom<T>> = self.atoms.iter().map(|a| Atom { x: a.x, weight: Mat::stack(&a.weight, &zb) }).collect();
        atoms.extend(other.atoms.iter().map(|a| Atom { x: a.x, weight: Mat::stack(&za, &a.weight) }));
        let mut cantor: Vec<CantorPart<T>> =
            self.cantor.iter().map(|c| CantorPart { weight: Mat::stack(&c.weight, &zb), ..*c }).collect();
        cantor.extend(other.cantor.iter().map(|c| CantorPart { weight: Mat::stack(&za, &c.weight), ..*c }));
        let boundary = [0, 1].map(|i| match (self.boundary[i], other.boundary[i]) {
            (None, None) => None,
            (a, b) => Some(Mat::stack(&a.unwrap_or(za), &b.unwrap_or(zb))),
        });
        Ok(Self::new(density, atoms, cantor)?.with_boundary_atoms(boundary))
    }

    /// Restriction to the open interval `(lo, hi)`, viewed as a measure on it.
    ///
    /// Cantor components are split along gaps of their carrier; a cut that
    /// lands on the Cantor set itself is rejected.
    pub fn restrict(&self, lo: T, hi: T) -> Result<Self> {
        let density = self.density.restrict(lo, hi)?;
        let tol = T::location_tol();
        let atoms = self.atoms.iter().filter(|a| a.x > lo + tol && a.x < hi - tol).copied().collect();
        if self.atoms.iter().any(|a| (a.x - lo).abs() <= tol || (a.x - hi).abs() <= tol) {
            return Err(Error::Precondition("restriction endpoint carries an atom".into()));
        }
        let mut cantor = Vec::new();
        for c in &self.cantor {
            cantor.extend(c.clip(lo, hi)?);
        }
        Self::new(density, atoms, cantor)
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U + Copy) -> Measure1D<U> {
        let map_mat = |m: &Mat<T>| {
            let v: Vec<U> = m.as_slice().iter().map(|x| f(*x)).collect();
            Mat::from_rows(m.rows(), m.cols(), &v)
        };
        let atoms = self.atoms.iter().map(|a| Atom { x: f(a.x), weight: map_mat(&a.weight) }).collect();
        let cantor = self
            .cantor
            .iter()
            .map(|c| CantorPart { scale: f(c.scale), offset: f(c.offset), weight: map_mat(&c.weight) })
            .collect();
        let boundary = self.boundary.map(|b| b.map(|w| map_mat(&w)));
        Measure1D::new(self.density.map_coefficients(f), atoms, cantor)
            .expect("scalar map keeps validity")
            .with_boundary_atoms(boundary)
    }
}
