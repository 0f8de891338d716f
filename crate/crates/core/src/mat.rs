//! Small fixed-capacity matrices for gradients, jumps and normals.
//!
//! Every value in the crate is a `rows x cols` matrix with at most four
//! entries: gradients are `d x N`, jump amplitudes and traces are `d x 1`,
//! normals are `N x 1`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub const MAX_ENTRIES: usize = 4;

#[derive(Clone, Copy, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: [T; MAX_ENTRIES],
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows * cols <= MAX_ENTRIES && rows > 0 && cols > 0, "shape {rows}x{cols}");
        Self { rows, cols, data: [T::zero(); MAX_ENTRIES] }
    }

    /// Row-major construction.
    pub fn from_rows(rows: usize, cols: usize, values: &[T]) -> Self {
        assert_eq!(values.len(), rows * cols, "entry count for {rows}x{cols}");
        let mut m = Self::zeros(rows, cols);
        m.data[..values.len()].copy_from_slice(values);
        m
    }

    pub fn col(values: &[T]) -> Self {
        Self::from_rows(values.len(), 1, values)
    }

    pub fn scalar(x: T) -> Self {
        Self::from_rows(1, 1, &[x])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data[..self.len()]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let mut out = *self;
        for v in out.data[..self.len()].iter_mut() {
            *v = f(*v);
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        T::norm(self.as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_zero())
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite_value())
    }

    pub fn max_abs(&self) -> T {
        self.as_slice().iter().fold(T::zero(), |m, v| m.max_of(v.abs()))
    }

    pub fn dot(&self, other: &Self) -> T {
        self.as_slice().iter().zip(other.as_slice()).fold(T::zero(), |s, (a, b)| s + *a * *b)
    }

    /// `a ⊗ b` for column vectors `a` (d x 1) and `b` (N x 1).
    pub fn outer(a: &Self, b: &Self) -> Self {
        assert!(a.cols == 1 && b.cols == 1, "outer product of column vectors");
        let mut m = Self::zeros(a.rows, b.rows);
        for i in 0..a.rows {
            for j in 0..b.rows {
                m.set(i, j, a.data[i] * b.data[j]);
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j));
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shapes");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s = T::zero();
                for k in 0..self.cols {
                    s = s + self.get(i, k) * other.get(k, j);
                }
                m.set(i, j, s);
            }
        }
        m
    }

    /// Vertical concatenation of two column vectors.
    pub fn stack(a: &Self, b: &Self) -> Self {
        assert!(a.cols == 1 && b.cols == 1);
        let mut v: Vec<T> = a.as_slice().to_vec();
        v.extend_from_slice(b.as_slice());
        Self::col(&v)
    }

    /// Inverse of `stack`: the first `k` rows and the remaining ones.
    pub fn split(&self, k: usize) -> (Self, Self) {
        assert!(self.cols == 1 && k > 0 && k < self.rows);
        (Self::col(&self.data[..k]), Self::col(&self.data[k..self.rows]))
    }

    /// Reinterpret the entries with a new shape of the same size.
    pub fn reshape(&self, rows: usize, cols: usize) -> Self {
        Self::from_rows(rows, cols, self.as_slice())
    }

    pub fn check_shape(&self, rows: usize, cols: usize, what: &str) -> Result<()> {
        if self.shape() != (rows, cols) {
            return Err(Error::Dimension(format!(
                "{what}: expected {rows}x{cols}, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite(what.to_string()));
        }
        Ok(())
    }

    pub fn to_f64(&self) -> Mat<f64> {
        let v: Vec<f64> = self.as_slice().iter().map(|x| x.to_f64_lossy()).collect();
        Mat::from_rows(self.rows, self.cols, &v)
    }

    pub fn from_f64(m: &Mat<f64>) -> Self {
        let v: Vec<T> = m.as_slice().iter().map(|x| T::from_f64_lossy(*x)).collect();
        Self::from_rows(m.rows, m.cols, &v)
    }
}

impl<T: Real> Mat<T> {
    /// Unit vector in the plane at angle `theta`.
    pub fn direction(theta: T) -> Self {
        Self::col(&[theta.cos(), theta.sin()])
    }

    /// Solve `self * x = rhs` for a 2x2 or 1x1 matrix; `None` when singular.
    pub fn solve_small(&self, rhs: &Self) -> Option<Self> {
        match self.shape() {
            (1, 1) => {
                let a = self.get(0, 0);
                (a.abs() > T::epsilon()).then(|| rhs.scale(T::one() / a))
            }
            (2, 2) => {
                let det = self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0);
                let scale = self.max_abs();
                if det.abs() <= T::epsilon() * scale * scale * T::from_f64_lossy(16.0) {
                    return None;
                }
                let inv = Self::from_rows(
                    2,
                    2,
                    &[self.get(1, 1) / det, -self.get(0, 1) / det, -self.get(1, 0) / det, self.get(0, 0) / det],
                );
                Some(inv.matmul(rhs))
            }
            _ => None,
        }
    }
}

impl<T: Scalar> Add for Mat<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "add shapes");
        let mut out = self;
        for i in 0..self.len() {
            out.data[i] = self.data[i] + rhs.data[i];
        }
        out
    }
}

impl<T: Scalar> Sub for Mat<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar> Neg for Mat<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|v| -v)
    }
}

impl<T: Scalar> Mul<T> for Mat<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Scalar> AddAssign for Mat<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar> SubAssign for Mat<T> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}{:?}", self.rows, self.cols, &self.data[..self.rows * self.cols])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_and_norm() {
        let a = Mat::col(&[1.0, 2.0]);
        let b = Mat::col(&[0.0, 1.0]);
        let m = Mat::outer(&a, &b);
        assert_eq!(m.as_slice(), &[0.0, 1.0, 0.0, 2.0]);
        assert!((m.norm() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stack_split_roundtrip() {
        let a = Mat::col(&[1.0, 2.0]);
        let b = Mat::col(&[3.0]);
        let (x, y) = Mat::stack(&a, &b).split(2);
        assert_eq!(x, a);
        assert_eq!(y, b);
    }

    #[test]
    fn solve_two_by_two() {
        let m: Mat<f64> = Mat::from_rows(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let x = m.solve_small(&Mat::col(&[3.0, 5.0])).unwrap();
        assert!((x.get(0, 0) - 0.8).abs() < 1e-14 && (x.get(1, 0) - 1.4).abs() < 1e-14);
        assert!(Mat::from_rows(2, 2, &[1.0, 2.0, 2.0, 4.0]).solve_small(&Mat::col(&[1.0, 1.0])).is_none());
    }
}
