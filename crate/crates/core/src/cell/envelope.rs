//! Convex envelopes of the bulk density used by the lower bounds and the
//! one-dimensional bulk competitors.

use super::{CellSolver, Mode};
use crate::energy::{lower_hull, BulkDensity, BulkKind, PiecewiseLinear};
use crate::mat::Mat;
use crate::scalar::{c, Real};

const TABLE_HALF_WIDTH: f64 = 16.0;
const TABLE_STEPS_PER_UNIT: usize = 256;
const FAR: f64 = 1e6;

pub(crate) enum Envelope<T> {
    /// The density is convex and equals its envelope.
    Exact,
    /// Lower hull of samples of a scalar density.
    Table(PiecewiseLinear<T>),
    /// Convex minorant `c_W |.|` when no envelope is computable.
    Minorant(T),
}

impl<T: Real> Envelope<T> {
    pub(crate) fn build(bulk: &BulkDensity<T>, mode: Mode) -> Self {
        let convex = match mode {
            Mode::Bulk => bulk.is_convex(),
            Mode::Recession => bulk.recession_is_convex(),
        };
        if convex {
            return Envelope::Exact;
        }
        if bulk.d != 1 || bulk.n != 1 {
            return Envelope::Minorant(bulk.constants.c_w);
        }
        let f = |x: T| {
            let a = Mat::scalar(x);
            match mode {
                Mode::Bulk => bulk.value(&a),
                Mode::Recession => bulk.recession_value(&a),
            }
        };
        let mut half = c::<T>(TABLE_HALF_WIDTH);
        let mut xs: Vec<T> = Vec::new();
        if let BulkKind::CustomGrid { xs: nodes, .. } = &bulk.kind {
            for x in nodes {
                half = half.max(x.abs() + c(4.0));
            }
            xs.extend(nodes.iter().copied());
        }
        let half_steps = (half.to_f64_lossy().ceil() as usize) * TABLE_STEPS_PER_UNIT;
        let step = T::one() / T::from_usize_exact(TABLE_STEPS_PER_UNIT);
        for i in 0..=2 * half_steps {
            xs.push(step * (T::from_usize_exact(i) - T::from_usize_exact(half_steps)));
        }
        xs.extend([c::<T>(-FAR), c::<T>(FAR)]);
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        xs.dedup();
        let pts: Vec<(T, T)> = xs.into_iter().map(|x| (x, f(x))).collect();
        let hull = lower_hull(&pts);
        let xs: Vec<T> = hull.iter().map(|p| p.0).collect();
        let ys: Vec<T> = hull.iter().map(|p| p.1).collect();
        let last = xs.len() - 1;
        let slope = |i: usize| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        Envelope::Table(PiecewiseLinear { left_slope: slope(0), right_slope: slope(last - 1), xs, ys })
    }

    pub(crate) fn value(&self, solver: &CellSolver<T>, b: &Mat<T>, mode: Mode) -> T {
        match self {
            Envelope::Exact => solver.bulk_value(b, mode),
            // Chords between neighbouring samples overshoot where W is convex.
            Envelope::Table(t) => t.eval(b.get(0, 0)).min(solver.bulk_value(b, mode)),
            Envelope::Minorant(c_w) => *c_w * b.norm(),
        }
    }

    /// Hull segment containing a scalar argument, when it lies strictly inside one.
    pub(crate) fn segment(&self, x: T) -> Option<(T, T)> {
        match self {
            Envelope::Table(t) => {
                let (l, r) = t.segment(x);
                (l < r).then_some((l, r))
            }
            _ => None,
        }
    }
}
