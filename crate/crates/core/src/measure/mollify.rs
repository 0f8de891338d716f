//! Convolution with the Epanechnikov kernel, reflected at the endpoints so
//! that no mass leaves the domain.

use super::{CantorPart, Measure1D};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::poly::PiecewisePoly;
use crate::quadrature::gauss_fixed;
use crate::scalar::{c, Real};

const MAX_CANTOR_LEVEL: usize = 16;

/// `K_eps * mu` as a piecewise-polynomial density on the domain of `mu`.
///
/// Cantor components are first replaced by their level-`L` piecewise-constant
/// averages with `scale * 3^-L <= eps / 27`. Mass that the kernel would push
/// past an endpoint is reflected back, so the total mass is preserved.
/// Requires `0 < eps <= |domain| / 4`.
pub fn mollify<T: Real>(mu: &Measure1D<T>, eps: T) -> Result<Measure1D<T>> {
    let (a, b) = mu.domain();
    if !(eps > T::zero()) || eps > (b - a) / c(4.0) {
        return Err(Error::Precondition("mollification radius must lie in (0, |domain|/4]".into()));
    }
    let mut source = mu.density().clone();
    for part in mu.cantor_parts() {
        source = source.add(&discretise_cantor(part, (a, b), eps))?;
    }
    let atoms: Vec<(T, Mat<T>)> = mu.atoms().iter().map(|at| (at.x, at.weight)).collect();
    let zero = source.zero_value();

    let conv = |x: T| -> Mat<T> {
        let mut acc = zero;
        let (lo, hi) = (x - eps, x + eps);
        let brk = source.breaks();
        let first = brk.partition_point(|v| *v <= lo).saturating_sub(1);
        let last = brk.partition_point(|v| *v < hi).min(source.pieces().len());
        for i in first..last {
            let coeffs = &source.pieces()[i];
            if coeffs.is_empty() {
                continue;
            }
            let (y0, y1) = (brk[i].max(lo), brk[i + 1].min(hi));
            if !(y1 > y0) {
                continue;
            }
            let order = coeffs.len() / 2 + 2;
            for e in 0..zero.len() {
                let v = gauss_fixed(order, y0, y1, |y| {
                    source.eval_piece(i, y - brk[i]).as_slice()[e] * kernel(x - y, eps)
                });
                let (r, cl) = (e / zero.cols(), e % zero.cols());
                acc.set(r, cl, acc.get(r, cl) + v);
            }
        }
        let k0 = atoms.partition_point(|(p, _)| *p <= lo);
        for (p, w) in atoms[k0..].iter().take_while(|(p, _)| *p < hi) {
            acc += w.scale(kernel(x - *p, eps));
        }
        acc
    };
    let reflected = |x: T| -> Mat<T> {
        let mut v = conv(x);
        if x < a + eps {
            v += conv(a + a - x);
        }
        if x > b - eps {
            v += conv(b + b - x);
        }
        v
    };

    let mut sources: Vec<T> = source.breaks().to_vec();
    sources.extend(atoms.iter().map(|(p, _)| *p));
    let mut cuts = vec![a, b, a + eps, b - eps];
    for y in sources {
        for z in [y - eps, y + eps] {
            cuts.extend([z, a + a - z, b + b - z]);
        }
    }
    cuts.retain(|z| *z >= a && *z <= b);
    cuts.sort_by(|p, q| p.partial_cmp(q).expect("finite cuts"));
    let merge = c::<T>(1e-12) * (b - a);
    let mut breaks: Vec<T> = Vec::with_capacity(cuts.len());
    for z in cuts {
        if breaks.last().is_none_or(|l| z - *l > merge) {
            breaks.push(z);
        }
    }
    let last = breaks.len() - 1;
    breaks[last] = b;
    let degree = source.pieces().iter().map(|p| p.len()).max().unwrap_or(0) + 2;
    let pieces: Vec<Vec<Mat<T>>> =
        breaks.windows(2).map(|w| PiecewisePoly::fit_piece(&reflected, w[0], w[1], degree)).collect();
    let (rows, cols) = source.shape();
    Ok(Measure1D::absolutely_continuous(PiecewisePoly::new(breaks, pieces, rows, cols)?))
}

fn kernel<T: Real>(z: T, eps: T) -> T {
    let u = z / eps;
    if u.abs() >= T::one() {
        return T::zero();
    }
    c::<T>(0.75) / eps * (T::one() - u * u)
}

fn discretise_cantor<T: Real>(part: &CantorPart<T>, domain: (T, T), eps: T) -> PiecewisePoly<T> {
    let mut level = 0;
    while level < MAX_CANTOR_LEVEL && part.scale / c::<T>(3f64.powi(level as i32)) > eps / c(27.0) {
        level += 1;
    }
    let intervals = part.level_intervals(level);
    let height = part.weight.scale(c::<T>(1.5f64.powi(level as i32)) / part.scale);
    let mut breaks = vec![domain.0];
    let mut pieces: Vec<Vec<Mat<T>>> = Vec::new();
    for (l, r) in intervals {
        if l > *breaks.last().expect("non-empty") {
            breaks.push(l);
            pieces.push(vec![]);
        }
        breaks.push(r);
        pieces.push(vec![height]);
    }
    if domain.1 > *breaks.last().expect("non-empty") {
        breaks.push(domain.1);
        pieces.push(vec![]);
    }
    PiecewisePoly::new(breaks, pieces, height.rows(), height.cols()).expect("discretised Cantor density")
}
