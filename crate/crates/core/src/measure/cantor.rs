//! Self-similar Cantor components.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;

/// Ternary digits resolved by the Cantor function; `3^-40` is below the
/// resolution of `f64` and `2^40` keeps exact denominators in range.
const CDF_DEPTH: usize = 40;
/// Subdivision depth when cutting a carrier along its gaps.
const CLIP_DEPTH: usize = 30;

/// Cantor function on `[0, 1]`, clamped outside.
pub fn cantor_cdf<T: Scalar>(u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    if u >= T::one() {
        return T::one();
    }
    let two = T::one() + T::one();
    let three = two + T::one();
    let mut x = u;
    let mut result = T::zero();
    let mut factor = T::one() / two;
    for _ in 0..CDF_DEPTH {
        x = x * three;
        if x < T::one() {
        } else if x <= two {
            return result + factor;
        } else {
            result = result + factor;
            x = x - two;
        }
        factor = factor / two;
    }
    result
}

/// `weight` times the Cantor measure on `offset + scale * C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CantorPart<T> {
    pub scale: T,
    pub offset: T,
    pub weight: Mat<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarrierRelation {
    Same,
    Disjoint,
    Overlapping,
}

impl<T: Scalar> CantorPart<T> {
    pub fn hull(&self) -> (T, T) {
        (self.offset, self.offset + self.scale)
    }

    /// Cumulative mass fraction of `(-inf, x)` under the unit Cantor measure on the carrier.
    pub fn cdf(&self, x: T) -> T {
        cantor_cdf((x - self.offset) / self.scale)
    }

    pub fn relation(&self, other: &Self) -> CarrierRelation {
        let tol = T::location_tol();
        if (self.scale - other.scale).abs() <= tol && (self.offset - other.offset).abs() <= tol {
            return CarrierRelation::Same;
        }
        let (a0, a1) = self.hull();
        let (b0, b1) = other.hull();
        if a1 <= b0 + tol || b1 <= a0 + tol {
            CarrierRelation::Disjoint
        } else {
            CarrierRelation::Overlapping
        }
    }

    /// Level-`level` intervals of the carrier.
    pub fn level_intervals(&self, level: usize) -> Vec<(T, T)> {
        let three = T::from_usize_exact(3);
        let mut out = vec![(self.offset, self.scale)];
        for _ in 0..level {
            out = out
                .into_iter()
                .flat_map(|(o, s)| {
                    let t = s / three;
                    [(o, t), (o + t + t, t)]
                })
                .collect();
        }
        out.into_iter().map(|(o, s)| (o, o + s)).collect()
    }

    /// Restriction to `(lo, hi)` as a union of scaled copies.
    pub fn clip(&self, lo: T, hi: T) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        let three = T::from_usize_exact(3);
        let two = T::from_usize_exact(2);
        let mut stack = vec![(*self, 0usize)];
        while let Some((p, depth)) = stack.pop() {
            let (h0, h1) = p.hull();
            if h1 <= lo || h0 >= hi {
                continue;
            }
            if h0 >= lo && h1 <= hi {
                out.push(p);
                continue;
            }
            if depth >= CLIP_DEPTH {
                return Err(Error::UnsupportedRepresentation("cut point lies on a Cantor carrier".into()));
            }
            let s = p.scale / three;
            let w = p.weight.scale(T::one() / two);
            stack.push((CantorPart { scale: s, offset: p.offset, weight: w }, depth + 1));
            stack.push((CantorPart { scale: s, offset: p.offset + s + s, weight: w }, depth + 1));
        }
        out.sort_by(|a, b| a.offset.partial_cmp(&b.offset).expect("finite offsets"));
        Ok(out)
    }
}

pub(crate) fn normalise<T: Scalar>(
    parts: Vec<CantorPart<T>>,
    domain: (T, T),
    rows: usize,
    cols: usize,
) -> Result<Vec<CantorPart<T>>> {
    let tol = T::location_tol();
    let mut merged: Vec<CantorPart<T>> = Vec::new();
    for p in parts {
        p.weight.check_shape(rows, cols, "Cantor weight")?;
        p.weight.check_finite("Cantor weight")?;
        if !(p.scale > T::zero()) || !p.offset.is_finite_value() || !p.scale.is_finite_value() {
            return Err(Error::Precondition("Cantor map needs a positive finite scale".into()));
        }
        let (h0, h1) = p.hull();
        if h0 < domain.0 - tol || h1 > domain.1 + tol {
            return Err(Error::Precondition("Cantor carrier leaves the domain".into()));
        }
        match merged.iter_mut().find(|q| q.relation(&p) == CarrierRelation::Same) {
            Some(q) => q.weight += p.weight,
            None => merged.push(p),
        }
    }
    merged.retain(|p| !p.weight.is_zero());
    merged.sort_by(|a, b| a.offset.partial_cmp(&b.offset).expect("finite offsets"));
    for (i, a) in merged.iter().enumerate() {
        if merged[i + 1..].iter().any(|b| a.relation(b) == CarrierRelation::Overlapping) {
            return Err(Error::UnsupportedRepresentation("Cantor carriers overlap without coinciding".into()));
        }
    }
    Ok(merged)
}
