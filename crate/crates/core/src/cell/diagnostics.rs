//! Recession and jump densities, convergence rates and closure spot checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{two_d, CellSolver, DensityEstimate, Mode, SolveOptions};
use crate::energy::EnergyPair;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::{c, Real};

/// `h^c(A, B) = H^inf(A, B)`, solved directly in recession mode and compared
/// with `H(tA, tB)/t` at the largest `t` of the schedule.
pub fn estimate_hc<T: Real>(
    pair: &EnergyPair<T>,
    a: &Mat<T>,
    b: &Mat<T>,
    schedule: &[T],
    options: SolveOptions<T>,
) -> Result<DensityEstimate<T>> {
    let t_max = schedule
        .iter()
        .copied()
        .fold(None, |m: Option<T>, t| Some(m.map_or(t, |m| m.max(t))))
        .ok_or_else(|| Error::Schedule("empty recession schedule".into()))?;
    if !(t_max > T::one()) {
        return Err(Error::Schedule("recession schedule needs some t > 1".into()));
    }
    let solver = CellSolver::new(pair, options)?;
    let mut est = solver.solve(a, b, Mode::Recession)?;
    let scaled = solver.solve(&a.scale(t_max), &b.scale(t_max), Mode::Bulk)?;
    let terminal = scaled.value / t_max;
    let k = &pair.bulk().constants;
    // Competitors for H(tA, tB) with energy below the affine one keep their
    // phases within |B| + 2 H / c_W of the mean.
    let reach = if k.c_w > T::zero() { b.norm() + c::<T>(2.0) * est.upper / k.c_w } else { T::infinity() };
    let bound = k.c_rec * (T::one() + reach) / t_max.powf(k.alpha) + c::<T>(3.0) * k.cap_w / t_max;
    est.flagged |= (terminal - est.value).abs() > options.tol + bound;
    est.terminal = Some(terminal);
    est.rate_bound = Some(bound);
    Ok(est)
}

/// `h^j(lambda, Lambda, nu) = h^c(lambda (x) nu, Lambda)`. In the plane the
/// value is recomputed in the frame rotated onto `nu` as a cross-check.
pub fn estimate_hj<T: Real>(
    pair: &EnergyPair<T>,
    lambda: &Mat<T>,
    big_lambda: &Mat<T>,
    nu: &Mat<T>,
    options: SolveOptions<T>,
) -> Result<DensityEstimate<T>> {
    lambda.check_shape(pair.d(), 1, "jump")?;
    nu.check_shape(pair.n(), 1, "normal")?;
    let unit_err = (nu.norm() - T::one()).abs();
    if unit_err > c(1e-9) {
        return Err(Error::NonUnitNormal(nu.norm().to_f64_lossy()));
    }
    let solver = CellSolver::new(pair, options)?;
    let a = Mat::outer(lambda, nu);
    let mut est = solver.solve(&a, big_lambda, Mode::Recession)?;
    if pair.n() == 2 {
        let angle = nu.get(1, 0).atan2(nu.get(0, 0));
        let (rotated, _, _) = two_d::solve(&solver, &a, big_lambda, Mode::Recession, Some(angle))?;
        est.flagged |= (rotated - est.value).abs() > options.tol;
        est.cross_check = Some(rotated);
    }
    Ok(est)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport<T> {
    pub ts: Vec<T>,
    /// `|H(tA, tB)/t - h^c(A, B)|` per entry of `ts`.
    pub errors: Vec<T>,
    /// Smallest `C` with `error(t) <= C (t^-alpha + t^-1)` on the schedule.
    pub constant: T,
    pub passed: bool,
}

/// Empirical recession rate of `H` along `t -> (tA, tB)`.
pub fn recession_rate_check<T: Real>(
    pair: &EnergyPair<T>,
    a: &Mat<T>,
    b: &Mat<T>,
    ts: &[T],
    options: SolveOptions<T>,
) -> Result<RateReport<T>> {
    if ts.is_empty() || ts.iter().any(|t| !(*t > T::zero())) || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Schedule("rate schedule must be positive and increasing".into()));
    }
    let solver = CellSolver::new(pair, options)?;
    let hc = solver.solve(a, b, Mode::Recession)?.value;
    let alpha = pair.bulk().constants.alpha;
    let mut errors = Vec::with_capacity(ts.len());
    let mut constant = T::zero();
    for &t in ts {
        let h = solver.solve(&a.scale(t), &b.scale(t), Mode::Bulk)?.value;
        let e = (h / t - hc).abs();
        constant = constant.max(e / (t.powf(-alpha) + T::one() / t));
        errors.push(e);
    }
    let slack = |e: T| T::epsilon().sqrt() * (T::one() + e.abs() + hc.abs());
    let monotone = errors.windows(2).all(|w| w[1] <= w[0] + slack(w[0]));
    Ok(RateReport { ts: ts.to_vec(), passed: constant.is_finite() && monotone, errors, constant })
}

/// Piecewise-affine `v` vanishing on the boundary and piecewise-constant
/// zero-mean `w` on a mesh of the unit cell, as cell gradients and values.
#[derive(Clone, Debug, PartialEq)]
pub struct QccSample<T> {
    pub weights: Vec<T>,
    pub gradients: Vec<Mat<T>>,
    pub perturbations: Vec<Mat<T>>,
}

impl<T: Real> QccSample<T> {
    /// 8 cells in one dimension, 8x8 squares split into 128 triangles in two.
    pub fn random(d: usize, n: usize, rng: &mut impl Rng) -> Result<Self> {
        let draw = |rng: &mut dyn rand::RngCore| {
            let v: Vec<T> = (0..d).map(|_| c(rng.gen_range(-1.0..=1.0))).collect();
            Mat::col(&v)
        };
        let k = 8usize;
        let scale: T = c(k as f64);
        let (weights, gradients) = match n {
            1 => {
                let mut nodes = vec![Mat::zeros(d, 1); k + 1];
                for node in nodes.iter_mut().take(k).skip(1) {
                    *node = draw(rng);
                }
                let grads = (0..k).map(|i| (nodes[i + 1] - nodes[i]).scale(scale)).collect();
                (vec![T::one() / scale; k], grads)
            }
            2 => {
                let mut nodes = vec![vec![Mat::zeros(d, 1); k + 1]; k + 1];
                for row in nodes.iter_mut().take(k).skip(1) {
                    for node in row.iter_mut().take(k).skip(1) {
                        *node = draw(rng);
                    }
                }
                let grad = |dx: Mat<T>, dy: Mat<T>| {
                    let mut g = Mat::zeros(d, 2);
                    for r in 0..d {
                        g.set(r, 0, dx.get(r, 0) * scale);
                        g.set(r, 1, dy.get(r, 0) * scale);
                    }
                    g
                };
                let mut grads = Vec::with_capacity(2 * k * k);
                for i in 0..k {
                    for j in 0..k {
                        let v = |a: usize, b: usize| nodes[a][b];
                        grads.push(grad(v(i + 1, j) - v(i, j), v(i, j + 1) - v(i, j)));
                        grads.push(grad(v(i + 1, j + 1) - v(i, j + 1), v(i + 1, j + 1) - v(i + 1, j)));
                    }
                }
                (vec![T::one() / c((2 * k * k) as f64); 2 * k * k], grads)
            }
            _ => return Err(Error::UnsupportedDimension(format!("qcc sample in dimension {n}"))),
        };
        let mut perturbations: Vec<Mat<T>> = (0..weights.len())
            .map(|_| {
                let vals: Vec<T> = (0..d * n).map(|_| c(rng.gen_range(-1.0..=1.0))).collect();
                Mat::from_rows(d, n, &vals)
            })
            .collect();
        let mean = weighted_mean(&weights, &perturbations);
        for p in &mut perturbations {
            *p = *p - mean;
        }
        Ok(Self { weights, gradients, perturbations })
    }
}

fn weighted_mean<T: Real>(weights: &[T], mats: &[Mat<T>]) -> Mat<T> {
    let (r, cl) = mats[0].shape();
    weights.iter().zip(mats).fold(Mat::zeros(r, cl), |acc, (w, m)| acc + m.scale(*w))
}

/// `(H(A, B), int_Q H(A + grad v, B + w))` for one sample; the closure
/// property asserts the first never exceeds the second.
pub fn qcc_check<T: Real>(solver: &CellSolver<T>, a: &Mat<T>, b: &Mat<T>, sample: &QccSample<T>) -> Result<(T, T)> {
    let cells = sample.weights.len();
    if cells == 0 || sample.gradients.len() != cells || sample.perturbations.len() != cells {
        return Err(Error::Precondition("sample needs one gradient and one perturbation per cell".into()));
    }
    let total = sample.weights.iter().fold(T::zero(), |s, w| s + *w);
    let tol = T::epsilon().sqrt();
    if (total - T::one()).abs() > tol {
        return Err(Error::Precondition("cell weights must sum to one".into()));
    }
    if weighted_mean(&sample.weights, &sample.perturbations).norm() > tol {
        return Err(Error::Precondition("perturbation must have zero mean".into()));
    }
    if weighted_mean(&sample.weights, &sample.gradients).norm() > tol {
        return Err(Error::Precondition("gradient must have zero mean".into()));
    }
    let lhs = solver.solve(a, b, Mode::Bulk)?.value;
    let mut rhs = T::zero();
    for ((w, g), p) in sample.weights.iter().zip(&sample.gradients).zip(&sample.perturbations) {
        rhs = rhs + *w * solver.solve(&(*a + *g), &(*b + *p), Mode::Bulk)?.value;
    }
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QccReport<T> {
    pub samples: usize,
    pub violations: usize,
    /// Largest `H(A, B) - int_Q H(A + grad v, B + w)` seen.
    pub worst_margin: T,
}

/// Random spot test of the closure property at `(A, B)`.
pub fn qcc_spot_test<T: Real>(
    pair: &EnergyPair<T>,
    a: &Mat<T>,
    b: &Mat<T>,
    samples: usize,
    seed: u64,
    options: SolveOptions<T>,
) -> Result<QccReport<T>> {
    let solver = CellSolver::new(pair, options)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drawn = (0..samples)
        .map(|_| QccSample::random(pair.d(), pair.n(), &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let margins = drawn
        .par_iter()
        .map(|s| qcc_check(&solver, a, b, s).map(|(l, r)| l - r))
        .collect::<Result<Vec<_>>>()?;
    let violations = margins.iter().filter(|m| **m > options.tol).count();
    let worst_margin = margins.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(QccReport { samples, violations, worst_margin })
}
