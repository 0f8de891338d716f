//! Seeded generators of pairs `(g, G)` for property checks and experiments.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::mat::Mat;
use crate::measure::{Atom, BvFunction1D, CantorPart, Measure1D, MsdPair};
use crate::poly::PiecewisePoly;

/// Domain of generated pairs.
pub const DOMAIN: (f64, f64) = (-1.0, 1.0);

/// Cantor carriers `(scale, offset)` with hulls `[-0.9, -0.4]` and `[0.3, 0.7]`.
pub const CARRIERS: [(f64, f64); 2] = [(0.5, -0.9), (0.4, 0.3)];

/// Candidate atom locations, all outside both carrier hulls.
pub const ATOM_SITES: [f64; 6] = [-0.3, -0.15, 0.05, 0.2, 0.8, 0.9];

fn vector(rng: &mut impl Rng, d: usize, amp: f64) -> Mat<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-amp..=amp)).collect();
    Mat::col(&v)
}

/// Random piecewise polynomial of degree <= 2 on 1-3 pieces.
pub fn random_density(rng: &mut impl Rng, d: usize) -> Result<PiecewisePoly<f64>> {
    let pieces = rng.gen_range(1..=3);
    let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.gen_range(-0.8..0.8)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut breaks = vec![DOMAIN.0];
    breaks.extend(cuts);
    breaks.push(DOMAIN.1);
    breaks.dedup();
    let coeffs = (1..breaks.len())
        .map(|_| {
            let degree = rng.gen_range(0..=2);
            (0..=degree).map(|_| vector(rng, d, 1.5)).collect()
        })
        .collect();
    PiecewisePoly::new(breaks, coeffs, d, 1)
}

/// A pair mixing densities, at most three atoms in each of `Dg` and `G`
/// (some shared), and at most one Cantor component in each.
pub fn random_pair(rng: &mut impl Rng, d: usize) -> Result<MsdPair<f64>> {
    let mut sites = ATOM_SITES.to_vec();
    sites.shuffle(rng);
    let g_atoms: Vec<Atom<f64>> =
        sites[..rng.gen_range(0..=3)].iter().map(|&x| Atom { x, weight: vector(rng, d, 1.0) }).collect();
    // G reuses some jump points of g and adds fresh ones.
    let mut g_sites: Vec<f64> = g_atoms.iter().map(|a| a.x).filter(|_| rng.gen_bool(0.6)).collect();
    g_sites.extend(sites[3..].iter().filter(|_| rng.gen_bool(0.3)));
    g_sites.truncate(3);
    let big_atoms = g_sites.iter().map(|&x| Atom { x, weight: vector(rng, d, 1.0) }).collect();

    let own = rng.gen_bool(0.5).then(|| rng.gen_range(0..2));
    let g_cantor: Vec<CantorPart<f64>> = own
        .map(|k| CantorPart { scale: CARRIERS[k].0, offset: CARRIERS[k].1, weight: vector(rng, d, 1.0) })
        .into_iter()
        .collect();
    let big_cantor: Vec<CantorPart<f64>> = rng
        .gen_bool(0.5)
        .then(|| {
            let k = rng.gen_range(0..2);
            CantorPart { scale: CARRIERS[k].0, offset: CARRIERS[k].1, weight: vector(rng, d, 1.0) }
        })
        .into_iter()
        .collect();

    let dg = Measure1D::new(random_density(rng, d)?, g_atoms, g_cantor)?;
    let g = BvFunction1D::new(vector(rng, d, 1.0), dg)?;
    let big_g = Measure1D::new(random_density(rng, d)?, big_atoms, big_cantor)?;
    MsdPair::new(g, big_g)
}
