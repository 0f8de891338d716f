//! Piecewise polynomials with matrix coefficients.
//!
//! Piece `i` lives on `[breaks[i], breaks[i+1]]` and stores coefficients in
//! the local coordinate `s = x - breaks[i]`, lowest degree first.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::quadrature;
use crate::scalar::{c, Real, Scalar};

/// Pieces shorter than this share of the domain skip forced bisections.
const SHORT_PIECE: f64 = 1.0 / 1024.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly<T> {
    rows: usize,
    cols: usize,
    breaks: Vec<T>,
    pieces: Vec<Vec<Mat<T>>>,
    /// `prefix[i]` is the integral over `[breaks[0], breaks[i]]`.
    prefix: Vec<Mat<T>>,
}

fn horner<T: Scalar>(coeffs: &[Mat<T>], s: T, zero: Mat<T>) -> Mat<T> {
    coeffs.iter().rev().fold(zero, |acc, cf| acc.scale(s) + *cf)
}

/// Coefficients of `s -> p(s + delta)`.
fn taylor_shift<T: Scalar>(coeffs: &[Mat<T>], delta: T) -> Vec<Mat<T>> {
    let mut out = coeffs.to_vec();
    let n = out.len();
    // Repeated synthetic division by (s + delta).
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let add = out[j + 1].scale(delta);
            out[j] += add;
        }
    }
    out
}

impl<T: Scalar> PiecewisePoly<T> {
    pub fn zero(lo: T, hi: T, rows: usize, cols: usize) -> Self {
        Self::new(vec![lo, hi], vec![vec![]], rows, cols).expect("valid zero polynomial")
    }

    pub fn constant(lo: T, hi: T, value: Mat<T>) -> Self {
        let (r, cl) = value.shape();
        Self::new(vec![lo, hi], vec![vec![value]], r, cl).expect("valid constant")
    }

    pub fn new(breaks: Vec<T>, pieces: Vec<Vec<Mat<T>>>, rows: usize, cols: usize) -> Result<Self> {
        if breaks.len() < 2 || pieces.len() + 1 != breaks.len() {
            return Err(Error::Precondition("density needs k+1 breakpoints for k pieces".into()));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("density breakpoints must increase strictly".into()));
        }
        for cf in pieces.iter().flatten() {
            cf.check_shape(rows, cols, "density coefficient")?;
            cf.check_finite("density coefficient")?;
        }
        let mut pieces = pieces;
        for p in pieces.iter_mut() {
            while p.last().is_some_and(|m| m.is_zero()) {
                p.pop();
            }
        }
        let mut out = Self { rows, cols, breaks, pieces, prefix: vec![] };
        out.rebuild_prefix();
        Ok(out)
    }

    fn rebuild_prefix(&mut self) {
        let mut acc = Mat::zeros(self.rows, self.cols);
        let mut prefix = Vec::with_capacity(self.breaks.len());
        prefix.push(acc);
        for i in 0..self.pieces.len() {
            acc += self.piece_integral(i, self.width(i));
            prefix.push(acc);
        }
        self.prefix = prefix;
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn breaks(&self) -> &[T] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Vec<Mat<T>>] {
        &self.pieces
    }

    pub fn lo(&self) -> T {
        self.breaks[0]
    }

    pub fn hi(&self) -> T {
        self.breaks[self.breaks.len() - 1]
    }

    pub fn width(&self, i: usize) -> T {
        self.breaks[i + 1] - self.breaks[i]
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.is_empty())
    }

    pub fn is_piece_constant(&self, i: usize) -> bool {
        self.pieces[i].len() <= 1
    }

    pub fn piece_index(&self, x: T) -> usize {
        let k = self.breaks.partition_point(|b| *b <= x);
        k.clamp(1, self.pieces.len()) - 1
    }

    pub fn zero_value(&self) -> Mat<T> {
        Mat::zeros(self.rows, self.cols)
    }

    pub fn eval_piece(&self, i: usize, s: T) -> Mat<T> {
        horner(&self.pieces[i], s, self.zero_value())
    }

    pub fn eval(&self, x: T) -> Mat<T> {
        let i = self.piece_index(x);
        self.eval_piece(i, x - self.breaks[i])
    }

    /// Integral of piece `i` over local `[0, s]`.
    pub fn piece_integral(&self, i: usize, s: T) -> Mat<T> {
        let mut acc = self.zero_value();
        let mut pow = s;
        for (k, cf) in self.pieces[i].iter().enumerate() {
            acc += cf.scale(pow / T::from_usize_exact(k + 1));
            pow = pow * s;
        }
        acc
    }

    /// Integral over `[lo, x]`, clamped to the domain.
    pub fn integral_to(&self, x: T) -> Mat<T> {
        if x <= self.lo() {
            return self.zero_value();
        }
        if x >= self.hi() {
            return self.prefix[self.prefix.len() - 1];
        }
        let i = self.piece_index(x);
        self.prefix[i] + self.piece_integral(i, x - self.breaks[i])
    }

    pub fn total(&self) -> Mat<T> {
        self.prefix[self.prefix.len() - 1]
    }

    /// Same function expressed on the union of the current and given breakpoints.
    pub fn refine(&self, extra: &[T]) -> Self {
        let mut breaks: Vec<T> = self.breaks.clone();
        breaks.extend(extra.iter().copied().filter(|x| *x > self.lo() && *x < self.hi()));
        breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        breaks.dedup();
        let pieces = breaks
            .windows(2)
            .map(|w| {
                let i = self.piece_index(w[0]);
                taylor_shift(&self.pieces[i], w[0] - self.breaks[i])
            })
            .collect();
        Self::new(breaks, pieces, self.rows, self.cols).expect("refinement keeps validity")
    }

    fn zip_with(&self, other: &Self, rows: usize, cols: usize, f: impl Fn(&[Mat<T>], &[Mat<T>]) -> Vec<Mat<T>>) -> Self {
        let a = self.refine(other.breaks());
        let b = other.refine(self.breaks());
        let pieces = a.pieces.iter().zip(&b.pieces).map(|(p, q)| f(p, q)).collect();
        Self::new(a.breaks, pieces, rows, cols).expect("combined polynomial")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let zero = self.zero_value();
        Ok(self.zip_with(other, self.rows, self.cols, |p, q| {
            (0..p.len().max(q.len()))
                .map(|k| *p.get(k).unwrap_or(&zero) + *q.get(k).unwrap_or(&zero))
                .collect()
        }))
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        for cf in out.pieces.iter_mut().flatten() {
            *cf = cf.scale(s);
        }
        out.rebuild_prefix();
        out
    }

    /// Pointwise stack of two column-valued polynomials.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.cols != 1 || other.cols != 1 || (self.lo(), self.hi()) != (other.lo(), other.hi()) {
            return Err(Error::Dimension("stacking needs column values on a common domain".into()));
        }
        let (za, zb) = (self.zero_value(), other.zero_value());
        Ok(self.zip_with(other, self.rows + other.rows, 1, |p, q| {
            (0..p.len().max(q.len()))
                .map(|k| Mat::stack(p.get(k).unwrap_or(&za), q.get(k).unwrap_or(&zb)))
                .collect()
        }))
    }

    /// Restriction to `[lo, hi]` inside the domain.
    pub fn restrict(&self, lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) || lo < self.lo() || hi > self.hi() {
            return Err(Error::Precondition("restriction interval outside the domain".into()));
        }
        let r = self.refine(&[lo, hi]);
        let i0 = r.breaks.iter().position(|b| *b == lo).expect("lo is a breakpoint");
        let i1 = r.breaks.iter().position(|b| *b == hi).expect("hi is a breakpoint");
        Self::new(r.breaks[i0..=i1].to_vec(), r.pieces[i0..i1].to_vec(), self.rows, self.cols)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension("densities have different value shapes".into()));
        }
        if self.lo() != other.lo() || self.hi() != other.hi() {
            return Err(Error::Precondition("densities live on different domains".into()));
        }
        Ok(())
    }

    pub fn map_coefficients<U: Scalar>(&self, f: impl Fn(T) -> U) -> PiecewisePoly<U> {
        let breaks = self.breaks.iter().map(|b| f(*b)).collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                p.iter()
                    .map(|m| {
                        let v: Vec<U> = m.as_slice().iter().map(|x| f(*x)).collect();
                        Mat::from_rows(self.rows, self.cols, &v)
                    })
                    .collect()
            })
            .collect();
        PiecewisePoly::new(breaks, pieces, self.rows, self.cols).expect("coefficient map keeps validity")
    }

    /// `int h(p(x)) dx` where constant pieces are evaluated exactly and other
    /// pieces by adaptive quadrature.
    pub fn integrate_composed(&self, h: &dyn Fn(&Mat<T>) -> Result<T>, tol: f64) -> Result<T> {
        let mut total = T::zero();
        for i in 0..self.pieces.len() {
            let width = self.width(i);
            if self.is_piece_constant(i) {
                total = total + h(&self.eval_piece(i, T::zero()))? * width;
                continue;
            }
            if T::EXACT {
                return Err(Error::Inexact);
            }
            let coeffs: Vec<Mat<f64>> = self.pieces[i].iter().map(|m| m.to_f64()).collect();
            let zero = Mat::<f64>::zeros(self.rows, self.cols);
            let piece_tol = tol * (width.to_f64_lossy() / (self.hi() - self.lo()).to_f64_lossy()).max(1e-3);
            let v = quadrature::integrate(
                |s: f64| {
                    let val = Mat::<T>::from_f64(&horner(&coeffs, s, zero));
                    h(&val).map(|r| r.to_f64_lossy())
                },
                0.0,
                width.to_f64_lossy(),
                piece_tol,
            )?;
            total = total + T::from_f64_lossy(v);
        }
        Ok(total)
    }
}

impl<T: Real> PiecewisePoly<T> {
    /// Polynomial of degree `degree` interpolating `f` at Chebyshev points of
    /// `[x0, x1]`, in the local coordinate of `x0`.
    pub fn fit_piece(f: &dyn Fn(T) -> Mat<T>, x0: T, x1: T, degree: usize) -> Vec<Mat<T>> {
        let h = x1 - x0;
        let m = degree + 1;
        let nodes: Vec<T> = (0..m)
            .map(|k| {
                if m == 1 {
                    return c(0.5);
                }
                let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * m) as f64;
                c::<T>(0.5) - c::<T>(0.5) * c(theta.cos())
            })
            .collect();
        let samples: Vec<Mat<T>> = nodes.iter().map(|u| f(x0 + *u * h)).collect();
        let (rows, cols) = samples[0].shape();
        // Vandermonde solve in u in [0, 1], then rescale to s = u h.
        let mut coeffs = vec![Mat::zeros(rows, cols); m];
        for e in 0..rows * cols {
            let mut a: Vec<Vec<T>> = nodes
                .iter()
                .map(|u| (0..m).map(|j| u.powi(j as i32)).collect())
                .collect();
            let mut b: Vec<T> = samples.iter().map(|s| s.as_slice()[e]).collect();
            let sol = solve_dense(&mut a, &mut b);
            for (j, v) in sol.into_iter().enumerate() {
                let mut cf = coeffs[j];
                let (r, col) = (e / cols, e % cols);
                cf.set(r, col, v / h.powi(j as i32));
                coeffs[j] = cf;
            }
        }
        coeffs
    }

    /// `int |p(x)| dx`.
    pub fn abs_integral(&self) -> Result<T> {
        self.integrate_real(&|v: &Mat<T>| Ok(v.norm()), 1e-10)
    }

    /// Adaptive integral of `h(p(x))`, exact on constant pieces.
    pub fn integrate_real(&self, h: &dyn Fn(&Mat<T>) -> Result<T>, tol: f64) -> Result<T> {
        let mut total = T::zero();
        let span = (self.hi() - self.lo()).to_f64_lossy();
        for i in 0..self.pieces.len() {
            let width = self.width(i);
            if self.is_piece_constant(i) {
                total = total + h(&self.eval_piece(i, T::zero()))? * width;
                continue;
            }
            let share = width.to_f64_lossy() / span;
            let piece_tol = c::<T>(tol * share.max(1e-4));
            let depth = if share < SHORT_PIECE { 0 } else { quadrature::MIN_DEPTH };
            let f = |s: T| h(&self.eval_piece(i, s));
            total = total + quadrature::integrate_with_depth(f, T::zero(), width, piece_tol, depth)?;
        }
        Ok(total)
    }
}

fn solve_dense<T: Real>(a: &mut [Vec<T>], b: &mut [T]) -> Vec<T> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] = a[row][k] - f * v;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s = s - a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn m(x: f64) -> Mat<f64> {
        Mat::scalar(x)
    }

    #[test]
    fn local_coordinates_and_integrals() {
        // 1 + 2s on [0, 1], then 3 on [1, 2].
        let p = PiecewisePoly::new(vec![0.0, 1.0, 2.0], vec![vec![m(1.0), m(2.0)], vec![m(3.0)]], 1, 1).unwrap();
        assert_eq!(p.eval(0.5).get(0, 0), 2.0);
        assert_eq!(p.eval(1.5).get(0, 0), 3.0);
        assert_eq!(p.integral_to(1.0).get(0, 0), 2.0);
        assert_eq!(p.total().get(0, 0), 5.0);
    }

    #[test]
    fn refine_preserves_values() {
        let p = PiecewisePoly::new(vec![0.0, 2.0], vec![vec![m(1.0), m(-1.0), m(0.5)]], 1, 1).unwrap();
        let r = p.refine(&[0.3, 1.1]);
        for x in [0.1, 0.5, 1.2, 1.9] {
            assert!((p.eval(x).get(0, 0) - r.eval(x).get(0, 0)).abs() < 1e-14);
        }
        assert!((p.total().get(0, 0) - r.total().get(0, 0)).abs() < 1e-14);
    }

    #[test]
    fn exact_scalars() {
        let r = |n, d| Mat::scalar(Rational64::new(n, d));
        let p = PiecewisePoly::new(vec![Rational64::new(0, 1), Rational64::new(1, 1)], vec![vec![r(1, 3), r(1, 1)]], 1, 1)
            .unwrap();
        assert_eq!(p.total().get(0, 0), Rational64::new(5, 6));
        let q = p.refine(&[Rational64::new(1, 2)]);
        assert_eq!(q.eval(Rational64::new(3, 4)).get(0, 0), Rational64::new(13, 12));
    }

    #[test]
    fn fit_recovers_cubic() {
        let f = |x: f64| m(1.0 - 2.0 * x + x * x * x);
        let cf = PiecewisePoly::fit_piece(&f, 0.5, 0.75, 3);
        let p = PiecewisePoly::new(vec![0.5, 0.75], vec![cf], 1, 1).unwrap();
        for x in [0.5, 0.6, 0.74] {
            assert!((p.eval(x).get(0, 0) - f(x).get(0, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn abs_integral_handles_sign_change() {
        let p = PiecewisePoly::new(vec![-1.0, 1.0], vec![vec![m(1.0), m(-1.0)]], 1, 1).unwrap();
        // |1 - s| over s in [0, 2].
        assert!((p.abs_integral().unwrap() - 1.0).abs() < 1e-10);
    }
}
