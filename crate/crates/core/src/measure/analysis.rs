//! Integrals against measures: total variation, Goffman–Serrin transforms,
//! test-function pairings and the gaps used to monitor convergence.

use super::Measure1D;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::quadrature;
use crate::scalar::{c, Real};

/// Cantor integrals use midpoint sums over the `2^12` level-12 intervals.
const CANTOR_LEVEL: usize = 12;

/// `phi_j(x) = sin(j pi (x - a) / (b - a))` for `j = 1..=size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TestDictionary {
    pub size: usize,
}

impl Default for TestDictionary {
    fn default() -> Self {
        Self { size: 16 }
    }
}

impl TestDictionary {
    pub fn phi<T: Real>(&self, j: usize, a: T, b: T, x: T) -> T {
        let k = T::from_usize_exact(j) * c::<T>(std::f64::consts::PI);
        (k * (x - a) / (b - a)).sin()
    }

    /// Primitive of `phi_j` vanishing at `a`.
    pub fn primitive<T: Real>(&self, j: usize, a: T, b: T, x: T) -> T {
        let k = T::from_usize_exact(j) * c::<T>(std::f64::consts::PI);
        (b - a) / k * (T::one() - (k * (x - a) / (b - a)).cos())
    }
}

/// `int phi d mu` over the open domain.
pub fn integrate_test<T: Real>(mu: &Measure1D<T>, phi: &dyn Fn(T) -> T) -> Result<Mat<T>> {
    let p = mu.density();
    let (rows, cols) = p.shape();
    let mut out = Mat::zeros(rows, cols);
    let span = mu.domain().1 - mu.domain().0;
    for i in 0..p.pieces().len() {
        if p.pieces()[i].is_empty() {
            continue;
        }
        let x0 = p.breaks()[i];
        let tol = c::<T>(1e-12) * span.max(T::one());
        for e in 0..rows * cols {
            let v = quadrature::integrate(
                |s: T| Ok(phi(x0 + s) * p.eval_piece(i, s).as_slice()[e]),
                T::zero(),
                p.width(i),
                tol,
            )?;
            let (r, cl) = (e / cols, e % cols);
            out.set(r, cl, out.get(r, cl) + v);
        }
    }
    for a in mu.atoms() {
        out += a.weight.scale(phi(a.x));
    }
    for part in mu.cantor_parts() {
        let intervals = part.level_intervals(CANTOR_LEVEL);
        let share = T::one() / T::from_usize_exact(intervals.len());
        let sum = intervals.iter().fold(T::zero(), |s, (l, r)| s + phi((*l + *r) / c(2.0)));
        out += part.weight.scale(sum * share);
    }
    Ok(out)
}

/// `|mu|(Omega)`; a Cantor component contributes the norm of its weight.
pub fn total_variation<T: Real>(mu: &Measure1D<T>) -> Result<T> {
    let mut tv = mu.density().abs_integral()?;
    for a in mu.atoms() {
        tv = tv + a.weight.norm();
    }
    for part in mu.cantor_parts() {
        tv = tv + part.weight.norm();
    }
    Ok(tv)
}

pub type Integrand<'a, T> = &'a dyn Fn(&Mat<T>) -> Result<T>;

/// `int h(mu^a) dx + int h_inf(d mu^s / d|mu^s|) d|mu^s|`.
pub fn goffman_serrin<T: Real>(mu: &Measure1D<T>, h: Integrand<T>, h_inf: Option<Integrand<T>>) -> Result<T> {
    let mut total = mu.density().integrate_real(h, 1e-10)?;
    let singular: Vec<Mat<T>> =
        mu.atoms().iter().map(|a| a.weight).chain(mu.cantor_parts().iter().map(|p| p.weight)).collect();
    if singular.is_empty() {
        return Ok(total);
    }
    let h_inf = h_inf.ok_or(Error::MissingRecession)?;
    for w in singular {
        let mass = w.norm();
        total = total + h_inf(&w.scale(T::one() / mass))? * mass;
    }
    Ok(total)
}

fn area<T: Real>(v: &Mat<T>) -> Result<T> {
    Ok((T::one() + v.dot(v)).sqrt())
}

fn area_inf<T: Real>(v: &Mat<T>) -> Result<T> {
    Ok(v.norm())
}

/// `|int sqrt(1 + |mu_n|^2) - int sqrt(1 + |mu|^2)|` plus the weak-* gap on
/// the default dictionary; area-strict convergence drives both to zero.
pub fn area_strict_gap<T: Real>(mu_n: &Measure1D<T>, mu: &Measure1D<T>) -> Result<T> {
    let a = goffman_serrin(mu_n, &area, Some(&area_inf))?;
    let b = goffman_serrin(mu, &area, Some(&area_inf))?;
    Ok((a - b).abs() + weakstar_gap(mu_n, mu, &TestDictionary::default())?)
}

/// `max_j |int phi_j d mu_n - int phi_j d mu|` over the dictionary.
pub fn weakstar_gap<T: Real>(mu_n: &Measure1D<T>, mu: &Measure1D<T>, dict: &TestDictionary) -> Result<T> {
    if mu_n.domain() != mu.domain() {
        return Err(Error::Precondition("measures live on different domains".into()));
    }
    if mu_n.shape() != mu.shape() {
        return Err(Error::Dimension("measures have different value shapes".into()));
    }
    let (a, b) = mu.domain();
    let mut worst = T::zero();
    for j in 1..=dict.size {
        let phi = |x| dict.phi(j, a, b, x);
        let v = integrate_test(mu_n, &phi)? - integrate_test(mu, &phi)?;
        worst = worst.max(v.norm());
    }
    Ok(worst)
}
