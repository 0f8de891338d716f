//! Relaxed energies of measure structured deformations.
//!
//! The crate evaluates the cell densities `H`, `h^c`, `h^j` of a bulk/surface
//! energy pair, the relaxed functional `J` on pairs `(g, G)` of a BV field and
//! a matrix-valued measure in one dimension, and the approximation sequences
//! that realise such pairs as limits of SBV fields.
//!
//! Numerics are generic over [`Scalar`]/[`Real`]; the aliases below fix `f64`.

pub mod approx;
pub mod cell;
pub mod energy;
pub mod error;
pub mod functional;
pub mod mat;
pub mod measure;
pub mod poly;
pub mod quadrature;
pub mod samples;
pub mod scalar;

pub use error::{Error, Result};
pub use mat::Mat;
pub use scalar::{Real, Scalar};

pub type Matrix = mat::Mat<f64>;
pub type Energies = energy::EnergyPair<f64>;
pub type Measure = measure::Measure1D<f64>;
pub type BvFunction = measure::BvFunction1D<f64>;
pub type MsdPair = measure::MsdPair<f64>;
pub type Estimate = cell::DensityEstimate<f64>;
/// Exact scalars for arithmetic that must not round.
pub type Rational = num_rational::Rational64;
pub type ExactMeasure = measure::Measure1D<Rational>;
pub type ExactMsdPair = measure::MsdPair<Rational>;
