//! Scalar abstraction shared by every numeric routine.
//!
//! `Scalar` covers exact and floating types; `Real` adds the transcendental
//! operations required by quadrature, envelopes and the cell solvers.

use std::fmt::{Debug, Display};

use num_rational::Rational64;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// True when arithmetic is exact; exact scalars refuse operations that need quadrature.
    const EXACT: bool;

    /// Euclidean norm of a list of components.
    ///
    /// Exact scalars return the exact value when at most one component is
    /// non-zero and a rounded value otherwise.
    fn norm(values: &[Self]) -> Self;

    fn from_f64_lossy(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn is_finite_value(self) -> bool;

    /// Location tolerance for merging atoms and comparing carriers.
    fn location_tol() -> Self;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

pub trait Real: Scalar + Float {}
impl<T: Scalar + Float> Real for T {}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn norm(values: &[Self]) -> Self {
                values.iter().map(|v| v * v).sum::<$t>().sqrt()
            }

            fn from_f64_lossy(x: f64) -> Self {
                x as $t
            }

            fn is_finite_value(self) -> bool {
                self.is_finite()
            }

            fn location_tol() -> Self {
                (1e-12 as $t).max(<$t>::EPSILON * 16.0)
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for Rational64 {
    const EXACT: bool = true;

    fn norm(values: &[Self]) -> Self {
        let mut nonzero = values.iter().filter(|v| !num_traits::Zero::is_zero(*v));
        match (nonzero.next(), nonzero.next()) {
            (None, _) => Rational64::from_integer(0),
            (Some(v), None) => v.abs(),
            _ => {
                let s: f64 = values.iter().map(|v| v.to_f64_lossy().powi(2)).sum();
                Self::from_f64_lossy(s.sqrt())
            }
        }
    }

    fn from_f64_lossy(x: f64) -> Self {
        Rational64::approximate_float(x).unwrap_or_else(|| Rational64::from_integer(0))
    }

    fn is_finite_value(self) -> bool {
        true
    }

    fn location_tol() -> Self {
        Rational64::from_integer(0)
    }
}

pub(crate) fn c<T: Scalar>(x: f64) -> T {
    T::from_f64_lossy(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_norm_is_exact_for_single_component() {
        let v = [Rational64::new(0, 1), Rational64::new(-3, 7)];
        assert_eq!(Rational64::norm(&v), Rational64::new(3, 7));
    }

    #[test]
    fn float_norm() {
        assert_eq!(f64::norm(&[3.0, 4.0]), 5.0);
        assert!((f32::norm(&[3.0, 4.0]) - 5.0).abs() < 1e-6);
    }
}
