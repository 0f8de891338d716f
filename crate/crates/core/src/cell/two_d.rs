//! Cell problems on the unit square, solved over sequences of competitors.
//!
//! A field `u_n` with `u_n -> A x` and `grad u_n -> B` weakly-* is admissible
//! in the limit, so `H(A, B)` is bounded above by the limit energy of
//! laminates (bulk) superposed with staircases
//! `u_n(x) = B x + (xi / n) round(n x.nu)`, which carry jumps `xi / n` on
//! `n` parallel lines per unit length. A staircase family with directions
//! `nu_k` realises `A - B = sum_k xi_k (x) nu_k` at cost `sum_k psi(xi_k, nu_k)`.

use super::envelope::Envelope;
use super::{BulkPattern, CellSolver, Certificate, Mode};
use crate::energy::EnergyPair;
use crate::error::Result;
use crate::mat::Mat;
use crate::scalar::{c, Real};

/// `u_n(x) = base x + (jump / n) round(n x . normal)` on the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaircaseCompetitor<T> {
    pub base: Mat<T>,
    pub normal: Mat<T>,
    pub jump: Mat<T>,
}

impl<T: Real> StaircaseCompetitor<T> {
    /// Weak-* limit gradient of `u_n`.
    pub fn weak_limit(&self) -> Mat<T> {
        self.base + Mat::outer(&self.jump, &self.normal)
    }

    pub fn limit_energy(&self, pair: &EnergyPair<T>, mode: Mode) -> T {
        bulk(pair, &self.base, mode) + pair.surface().value(&self.jump, &self.normal)
    }

    /// Energy of `u_n` on `(-1/2, 1/2)^2`.
    pub fn energy_at(&self, pair: &EnergyPair<T>, mode: Mode, n: usize) -> T {
        let nt = T::from_usize_exact(n);
        let reach = (self.normal.get(0, 0).abs() + self.normal.get(1, 0).abs()) / c(2.0);
        let kmax = (reach * nt).ceil().to_i64().unwrap_or(0) + 1;
        let per_line = pair.surface().value(&self.jump.scale(T::one() / nt), &self.normal);
        let mut length = T::zero();
        for k in -kmax..=kmax {
            let offset = (T::from_i64(k).expect("small integer") + c(0.5)) / nt;
            length = length + chord_length(&self.normal, offset);
        }
        bulk(pair, &self.base, mode) + per_line * length
    }
}

fn bulk<T: Real>(pair: &EnergyPair<T>, a: &Mat<T>, mode: Mode) -> T {
    match mode {
        Mode::Bulk => pair.bulk().value(a),
        Mode::Recession => pair.bulk().recession_value(a),
    }
}

/// Length of `{x in (-1/2, 1/2)^2 : x . normal = offset}`.
pub fn chord_length<T: Real>(normal: &Mat<T>, offset: T) -> T {
    let (n1, n2) = (normal.get(0, 0), normal.get(1, 0));
    let half: T = c(0.5);
    // Points offset * normal + s * (-n2, n1).
    let constraints = [(offset * n1, -n2), (offset * n2, n1)];
    let (mut lo, mut hi) = (T::neg_infinity(), T::infinity());
    for (c0, k) in constraints {
        if k.abs() <= T::epsilon() {
            if c0.abs() > half {
                return T::zero();
            }
            continue;
        }
        let (s0, s1) = ((-half - c0) / k, (half - c0) / k);
        lo = lo.max(s0.min(s1));
        hi = hi.min(s0.max(s1));
    }
    (hi - lo).max(T::zero())
}

fn direction_set<T: Real>(count: usize, frame: T, m: &Mat<T>) -> Vec<Mat<T>> {
    let pi: T = c(std::f64::consts::PI);
    let mut dirs: Vec<Mat<T>> = (0..count)
        .map(|j| Mat::direction(frame + pi * T::from_usize_exact(j) / T::from_usize_exact(count)))
        .collect();
    // Right singular vectors of m.
    let s = m.transpose().matmul(m);
    let theta = (s.get(0, 1) + s.get(1, 0)).atan2(s.get(0, 0) - s.get(1, 1)) / c(2.0);
    dirs.push(Mat::direction(theta));
    dirs.push(Mat::direction(theta + pi / c(2.0)));
    dirs
}

type Decomposition<T> = (T, Vec<StaircaseCompetitor<T>>);

fn prefer<T: Real>(cand: &Decomposition<T>, best: &Option<Decomposition<T>>) -> bool {
    let Some((e, st)) = best else { return true };
    let scale = T::epsilon() * (T::one() + e.abs()) * c(64.0);
    if cand.0 < *e - scale {
        return true;
    }
    if (cand.0 - *e).abs() > scale {
        return false;
    }
    let id = |s: &[StaircaseCompetitor<T>]| {
        Certificate::Sequence { bulk: BulkPattern::Affine(s.first().map_or(Mat::zeros(1, 1), |x| x.base)), staircases: s.to_vec() }.id()
    };
    (cand.1.len(), id(&cand.1)) < (st.len(), id(st))
}

/// Cheapest rank-one staircase decomposition of `m = A - B` over at most two
/// directions from the grid rotated by `frame` plus the singular directions of `m`.
pub(crate) fn decompose_jumps<T: Real>(
    solver: &CellSolver<T>,
    base: &Mat<T>,
    m: &Mat<T>,
    frame: T,
) -> (T, Vec<StaircaseCompetitor<T>>, usize) {
    if m.is_zero() {
        return (T::zero(), vec![], 1);
    }
    let psi = solver.pair().surface();
    let dirs = direction_set(solver.options().directions, frame, m);
    let mut best: Option<Decomposition<T>> = None;
    let mut iterations = 0;
    let tol = T::epsilon().sqrt() * (T::one() + m.norm());
    for nu in &dirs {
        iterations += 1;
        let xi = m.matmul(nu);
        if (*m - Mat::outer(&xi, nu)).norm() <= tol {
            let cand = (psi.value(&xi, nu), vec![StaircaseCompetitor { base: *base, normal: *nu, jump: xi }]);
            if prefer(&cand, &best) {
                best = Some(cand);
            }
        }
    }
    for (i, ni) in dirs.iter().enumerate() {
        for nj in &dirs[i + 1..] {
            iterations += 1;
            let v = Mat::from_rows(2, 2, &[ni.get(0, 0), nj.get(0, 0), ni.get(1, 0), nj.get(1, 0)]);
            let Some(xt) = v.solve_small(&m.transpose()) else { continue };
            let d = m.rows();
            let row = |r: usize| Mat::col(&(0..d).map(|k| xt.get(r, k)).collect::<Vec<_>>());
            let (xi, xj) = (row(0), row(1));
            let cand = (
                psi.value(&xi, ni) + psi.value(&xj, nj),
                vec![
                    StaircaseCompetitor { base: *base, normal: *ni, jump: xi },
                    StaircaseCompetitor { base: *base, normal: *nj, jump: xj },
                ],
            );
            if prefer(&cand, &best) {
                best = Some(cand);
            }
        }
    }
    let (cost, stairs) = best.expect("a decomposition exists for any matrix");
    (cost, stairs, iterations)
}

/// Two-phase laminate with mean `b` minimising the bulk energy; returns the
/// affine pattern when no laminate improves on it.
pub(crate) fn laminate_search<T: Real>(solver: &CellSolver<T>, b: &Mat<T>, mode: Mode) -> (T, BulkPattern<T>) {
    let pair = solver.pair();
    let (d, n) = (pair.d(), pair.n());
    let pi: T = c(std::f64::consts::PI);
    let normals: Vec<Mat<T>> = if n == 1 {
        vec![Mat::scalar(T::one())]
    } else {
        (0..12).map(|j| Mat::direction(pi * T::from_usize_exact(j) / c(12.0))).collect()
    };
    let amp_dirs: Vec<Mat<T>> = if d == 1 {
        vec![Mat::scalar(T::one())]
    } else {
        (0..12).map(|j| Mat::direction(pi * T::from_usize_exact(j) / c(12.0))).collect()
    };
    let scale = T::one() + b.norm();
    let amps: Vec<T> = [0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]
        .iter()
        .flat_map(|a| [c::<T>(*a) * scale, -c::<T>(*a) * scale])
        .collect();
    let energy = |theta: T, a: &Mat<T>| {
        theta * bulk(pair, &(*b + a.scale(T::one() - theta)), mode)
            + (T::one() - theta) * bulk(pair, &(*b - a.scale(theta)), mode)
    };
    let affine = bulk(pair, b, mode);
    let mut best = (affine, BulkPattern::Affine(*b));
    for nu in &normals {
        for dir in &amp_dirs {
            for amp in &amps {
                let a = Mat::outer(&dir.scale(*amp), nu);
                for k in 1..10 {
                    let theta = T::from_usize_exact(k) / c(10.0);
                    let e = energy(theta, &a);
                    if e < best.0 {
                        best = (e, BulkPattern::Laminate { mean: *b, theta, amplitude: a });
                    }
                }
            }
        }
    }
    if let BulkPattern::Laminate { mut theta, mut amplitude, .. } = best.1 {
        let mut step: T = c(0.25);
        for _ in 0..60 {
            let mut improved = false;
            for (dt, da) in [(step, T::zero()), (-step, T::zero()), (T::zero(), step), (T::zero(), -step)] {
                let th = (theta + dt * c(0.2)).max(c(1e-3)).min(c(1.0 - 1e-3));
                let am = amplitude.scale(T::one() + da);
                let e = energy(th, &am);
                if e < best.0 {
                    best = (e, BulkPattern::Laminate { mean: *b, theta: th, amplitude: am });
                    theta = th;
                    amplitude = am;
                    improved = true;
                }
            }
            if !improved {
                step = step / c(2.0);
            }
        }
    }
    best
}

pub(crate) fn solve<T: Real>(
    solver: &CellSolver<T>,
    a: &Mat<T>,
    b: &Mat<T>,
    mode: Mode,
    frame: Option<T>,
) -> Result<(T, Certificate<T>, usize)> {
    let (bulk_energy, pattern) = match solver.envelope(mode) {
        Envelope::Exact => (bulk(solver.pair(), b, mode), BulkPattern::Affine(*b)),
        _ => laminate_search(solver, b, mode),
    };
    let (jump_energy, staircases, iterations) = decompose_jumps(solver, b, &(*a - *b), frame.unwrap_or(T::zero()));
    Ok((bulk_energy + jump_energy, Certificate::Sequence { bulk: pattern, staircases }, iterations))
}
