//! Cell problems on the unit interval.
//!
//! In one dimension the bulk and surface parts decouple: the mean gradient
//! is fixed at `B` and the jumps must add up to `A - B`. Jensen's inequality
//! and subadditivity of `psi` give `H(A, B) = W**(B) + psi(A - B, +1)`, which
//! `oracle_h_1d` evaluates and `solve` attains with an explicit competitor.

use super::envelope::Envelope;
use super::{two_d, BulkPattern, CellSolver, Certificate, Mode, SolveOptions};
use crate::energy::EnergyPair;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Real;

/// A piecewise-affine competitor on `(-1/2, 1/2)` with interior jumps and
/// boundary values `-A/2`, `A/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Competitor1D<T> {
    /// Consecutive intervals as `(length, gradient)`; lengths sum to one.
    pub phases: Vec<(T, Mat<T>)>,
    pub jumps: Vec<Mat<T>>,
}

impl<T: Real> Competitor1D<T> {
    pub fn mean_gradient(&self) -> Mat<T> {
        let mut acc = self.phases[0].1.scale(T::zero());
        for (f, g) in &self.phases {
            acc += g.scale(*f);
        }
        acc
    }

    /// `u(1/2) - u(-1/2)`.
    pub fn boundary_increment(&self) -> Mat<T> {
        self.jumps.iter().fold(self.mean_gradient(), |acc, j| acc + *j)
    }

    pub fn energy(&self, pair: &EnergyPair<T>, mode: Mode) -> T {
        let nu = Mat::scalar(T::one());
        let bulk = self.phases.iter().fold(T::zero(), |s, (f, g)| {
            let w = match mode {
                Mode::Bulk => pair.bulk().value(g),
                Mode::Recession => pair.bulk().recession_value(g),
            };
            s + w * *f
        });
        self.jumps.iter().fold(bulk, |s, j| s + pair.surface().value(j, &nu))
    }
}

/// `W**(B) + psi(A - B, +1)`; requires `N = 1` and either `d = 1` or convex `W`.
pub fn oracle_h_1d<T: Real>(pair: &EnergyPair<T>, a: &Mat<T>, b: &Mat<T>) -> Result<T> {
    if pair.n() != 1 {
        return Err(Error::UnsupportedDimension("the closed-form cell density needs N = 1".into()));
    }
    let solver = CellSolver::new(pair, SolveOptions::default())?;
    if matches!(solver.envelope(Mode::Bulk), Envelope::Minorant(_)) {
        return Err(Error::UnsupportedDimension("no convex envelope for a non-convex vector density".into()));
    }
    a.check_shape(pair.d(), 1, "A")?;
    b.check_shape(pair.d(), 1, "B")?;
    Ok(oracle_with(&solver, a, b, Mode::Bulk))
}

pub(crate) fn oracle_with<T: Real>(solver: &CellSolver<T>, a: &Mat<T>, b: &Mat<T>, mode: Mode) -> T {
    let env = solver.envelope(mode).value(solver, b, mode);
    env + solver.pair().surface().value(&(*a - *b), &Mat::scalar(T::one()))
}

fn better<T: Real>(candidate: &(T, Competitor1D<T>), best: &Option<(T, Competitor1D<T>)>) -> bool {
    match best {
        None => true,
        Some((e, comp)) => {
            let scale = T::epsilon() * (T::one() + e.abs()) * T::from_usize_exact(16);
            if candidate.0 < *e - scale {
                return true;
            }
            if (candidate.0 - *e).abs() > scale {
                return false;
            }
            let key = |c: &Competitor1D<T>| (c.jumps.len(), Certificate::OneD(c.clone()).id());
            key(&candidate.1) < key(comp)
        }
    }
}

fn bulk_candidates<T: Real>(solver: &CellSolver<T>, b: &Mat<T>, mode: Mode) -> Vec<Vec<(T, Mat<T>)>> {
    let mut out = vec![vec![(T::one(), *b)]];
    let env = solver.envelope(mode);
    if let Some((l, r)) = (b.rows() == 1).then(|| env.segment(b.get(0, 0))).flatten() {
        // Volume fraction theta at l and 1 - theta at r reproduces the mean.
        let theta = (r - b.get(0, 0)) / (r - l);
        out.push(vec![(theta, Mat::scalar(l)), (T::one() - theta, Mat::scalar(r))]);
    } else if matches!(env, Envelope::Minorant(_)) {
        if let BulkPattern::Laminate { mean, theta, amplitude } = two_d::laminate_search(solver, b, mode).1 {
            out.push(vec![(theta, mean + amplitude.scale(T::one() - theta)), (T::one() - theta, mean - amplitude.scale(theta))]);
        }
    }
    out
}

pub(crate) fn solve<T: Real>(solver: &CellSolver<T>, a: &Mat<T>, b: &Mat<T>, mode: Mode) -> Result<(T, Certificate<T>, usize)> {
    let total_jump = *a - *b;
    let jump_patterns: Vec<Vec<Mat<T>>> = if total_jump.is_zero() {
        vec![vec![]]
    } else {
        (1..=4).map(|k| vec![total_jump.scale(T::one() / T::from_usize_exact(k)); k]).collect()
    };
    let mut best: Option<(T, Competitor1D<T>)> = None;
    let mut iterations = 0;
    for phases in bulk_candidates(solver, b, mode) {
        for jumps in &jump_patterns {
            iterations += 1;
            let comp = Competitor1D { phases: phases.clone(), jumps: jumps.clone() };
            let cand = (comp.energy(solver.pair(), mode), comp);
            if better(&cand, &best) {
                best = Some(cand);
            }
        }
    }
    let (energy, comp) = best.expect("at least one candidate");
    if !energy.is_finite() {
        return Err(Error::NonFinite("cell competitor energy".into()));
    }
    Ok((energy, Certificate::OneD(comp), iterations))
}
