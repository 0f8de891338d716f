//! Cell densities `H`, `h^c = H^inf` and `h^j`.
//!
//! Every estimate is a sandwich: `upper` is the energy of an explicit
//! competitor (a one-dimensional cell configuration, or a sequence of
//! laminates and staircases whose limit energy is exact), `lower` comes from
//! Jensen's inequality. Estimates whose sandwich is wider than the tolerance
//! are returned with `flagged` set rather than rejected.

mod diagnostics;
mod envelope;
mod one_d;
mod two_d;

pub use diagnostics::{
    estimate_hc, estimate_hj, qcc_check, qcc_spot_test, recession_rate_check, QccReport, QccSample, RateReport,
};
pub use one_d::{oracle_h_1d, Competitor1D};
pub(crate) use one_d::oracle_with as oracle_value;
pub use two_d::{chord_length, StaircaseCompetitor};

use crate::energy::EnergyPair;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::{c, Real};
use envelope::Envelope;

/// Which bulk density enters the cell problem: `W` for `H`, `W^inf` for `h^c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Bulk,
    Recession,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions<T> {
    /// Sandwich width above which an estimate is flagged.
    pub tol: T,
    /// Lamination and staircase directions in the plane.
    pub directions: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { tol: c(1e-3), directions: 24 }
    }
}

/// Two-phase bulk pattern of a competitor sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BulkPattern<T> {
    Affine(Mat<T>),
    /// Phases `mean + (1 - theta) a` (volume `theta`) and `mean - theta a`.
    Laminate { mean: Mat<T>, theta: T, amplitude: Mat<T> },
}

impl<T: Real> BulkPattern<T> {
    pub fn phases(&self) -> Vec<(T, Mat<T>)> {
        match *self {
            BulkPattern::Affine(b) => vec![(T::one(), b)],
            BulkPattern::Laminate { mean, theta, amplitude } => vec![
                (theta, mean + amplitude.scale(T::one() - theta)),
                (T::one() - theta, mean - amplitude.scale(theta)),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate<T> {
    OneD(Competitor1D<T>),
    Sequence { bulk: BulkPattern<T>, staircases: Vec<StaircaseCompetitor<T>> },
}

fn fmt_num<T: Real>(x: T) -> String {
    let v = x.to_f64_lossy();
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.6}")
}

fn fmt_mat<T: Real>(m: &Mat<T>) -> String {
    m.as_slice().iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(",")
}

impl<T: Real> Certificate<T> {
    /// Stable textual id; ties between competitors of equal energy are broken
    /// by the lexicographically smallest id.
    pub fn id(&self) -> String {
        match self {
            Certificate::OneD(comp) => {
                let phases: Vec<String> =
                    comp.phases.iter().map(|(f, g)| format!("{}x[{}]", fmt_num(*f), fmt_mat(g))).collect();
                let jumps: Vec<String> = comp.jumps.iter().map(|j| format!("[{}]", fmt_mat(j))).collect();
                format!("1d:{}:j{}", phases.join("+"), jumps.join("+"))
            }
            Certificate::Sequence { bulk, staircases } => {
                let b = match bulk {
                    BulkPattern::Affine(m) => format!("affine[{}]", fmt_mat(m)),
                    BulkPattern::Laminate { theta, amplitude, .. } => {
                        format!("lam[{};{}]", fmt_num(*theta), fmt_mat(amplitude))
                    }
                };
                let s: Vec<String> = staircases
                    .iter()
                    .map(|st| format!("stair[{};{}]", fmt_mat(&st.normal), fmt_mat(&st.jump)))
                    .collect();
                format!("seq:{b}:{}", s.join("+"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate<T> {
    pub value: T,
    pub upper: T,
    pub lower: T,
    pub certificate: Certificate<T>,
    pub iterations: usize,
    pub flagged: bool,
    /// `H(tA, tB)/t` at the last schedule entry (recession estimates only).
    pub terminal: Option<T>,
    /// Structural bound on `|H(tA, tB)/t - h^c(A, B)|` at that entry.
    pub rate_bound: Option<T>,
    /// Value of the same density computed in the frame of the jump normal.
    pub cross_check: Option<T>,
}

/// Cell solver bound to one energy pair, caching envelope tables per mode.
pub struct CellSolver<T: Real> {
    pair: EnergyPair<T>,
    options: SolveOptions<T>,
    bulk_env: Envelope<T>,
    recession_env: Envelope<T>,
}

impl<T: Real> CellSolver<T> {
    pub fn new(pair: &EnergyPair<T>, options: SolveOptions<T>) -> Result<Self> {
        if options.directions < 2 || !(options.tol > T::zero()) {
            return Err(Error::Precondition("solver needs two directions and a positive tolerance".into()));
        }
        Ok(Self {
            bulk_env: Envelope::build(pair.bulk(), Mode::Bulk),
            recession_env: Envelope::build(pair.bulk(), Mode::Recession),
            pair: pair.clone(),
            options,
        })
    }

    pub fn pair(&self) -> &EnergyPair<T> {
        &self.pair
    }

    pub fn options(&self) -> &SolveOptions<T> {
        &self.options
    }

    pub(crate) fn envelope(&self, mode: Mode) -> &Envelope<T> {
        match mode {
            Mode::Bulk => &self.bulk_env,
            Mode::Recession => &self.recession_env,
        }
    }

    /// `W(A)` or `W^inf(A)`.
    pub fn bulk_value(&self, a: &Mat<T>, mode: Mode) -> T {
        match mode {
            Mode::Bulk => self.pair.bulk().value(a),
            Mode::Recession => self.pair.bulk().recession_value(a),
        }
    }

    fn check_args(&self, a: &Mat<T>, b: &Mat<T>) -> Result<()> {
        let (d, n) = (self.pair.d(), self.pair.n());
        a.check_shape(d, n, "A")?;
        b.check_shape(d, n, "B")?;
        a.check_finite("A")?;
        b.check_finite("B")
    }

    /// Jensen lower bound `W**(B) + c_psi |A - B|`.
    pub fn lower_bound(&self, a: &Mat<T>, b: &Mat<T>, mode: Mode) -> Result<T> {
        self.check_args(a, b)?;
        let env = self.envelope(mode).value(self, b, mode);
        Ok(env + self.pair.surface().constants.c_psi * (*a - *b).norm())
    }

    /// Sandwich estimate of `H(A, B)` (or `H^inf` in recession mode).
    pub fn solve(&self, a: &Mat<T>, b: &Mat<T>, mode: Mode) -> Result<DensityEstimate<T>> {
        self.check_args(a, b)?;
        let lower = self.lower_bound(a, b, mode)?;
        let (upper, certificate, iterations) = if self.pair.n() == 1 {
            one_d::solve(self, a, b, mode)?
        } else {
            two_d::solve(self, a, b, mode, None)?
        };
        let mut flagged = upper - lower > self.options.tol;
        if self.pair.n() == 1 && self.pair.d() == 1 {
            let oracle = one_d::oracle_with(self, a, b, mode);
            flagged |= (upper - oracle).abs() > self.options.tol;
        }
        Ok(DensityEstimate {
            value: upper,
            upper,
            lower: lower.min(upper),
            certificate,
            iterations,
            flagged,
            terminal: None,
            rate_bound: None,
            cross_check: None,
        })
    }
}

/// `H(A, B)` for a validated pair.
pub fn solve_h<T: Real>(pair: &EnergyPair<T>, a: &Mat<T>, b: &Mat<T>, options: SolveOptions<T>) -> Result<DensityEstimate<T>> {
    CellSolver::new(pair, options)?.solve(a, b, Mode::Bulk)
}

/// `W**(B) + c_psi |A - B|`.
pub fn lower_bound_h<T: Real>(pair: &EnergyPair<T>, a: &Mat<T>, b: &Mat<T>) -> Result<T> {
    CellSolver::new(pair, SolveOptions::default())?.lower_bound(a, b, Mode::Bulk)
}
