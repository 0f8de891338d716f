//! Splitting `G` relative to the singular parts of `Dg`.

use super::{Atom, CantorPart, CarrierRelation, Measure1D, MsdPair};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `G = absolutely_continuous + jump + cantor + singular_rest`, where `jump`
/// lives on the jump set of `g`, `cantor` on the carriers of `D^c g`, and
/// `singular_rest` is the singular part of `G` seen by neither.
#[derive(Clone, Debug, PartialEq)]
pub struct GDecomposition<T> {
    pub absolutely_continuous: Measure1D<T>,
    pub jump: Measure1D<T>,
    pub cantor: Measure1D<T>,
    pub singular_rest: Measure1D<T>,
}

impl<T: Scalar> GDecomposition<T> {
    pub fn sum(&self) -> Result<Measure1D<T>> {
        self.absolutely_continuous.add(&self.jump)?.add(&self.cantor)?.add(&self.singular_rest)
    }
}

pub fn decompose<T: Scalar>(pair: &MsdPair<T>) -> Result<GDecomposition<T>> {
    let g = &pair.g;
    let big_g = &pair.big_g;
    let domain = big_g.domain();
    let (rows, cols) = big_g.shape();
    let empty = |atoms: Vec<Atom<T>>, cantor: Vec<CantorPart<T>>| {
        Measure1D::new(crate::poly::PiecewisePoly::zero(domain.0, domain.1, rows, cols), atoms, cantor)
    };

    let (mut on_jumps, mut off_jumps) = (Vec::new(), Vec::new());
    for a in big_g.atoms() {
        match g.derivative().atom_at(a.x) {
            Some(jump) if !jump.is_zero() => on_jumps.push(*a),
            _ => off_jumps.push(*a),
        }
    }

    let (mut on_cantor, mut off_cantor) = (Vec::new(), Vec::new());
    for part in big_g.cantor_parts() {
        let mut same = false;
        for own in g.cantor_parts() {
            match part.relation(own) {
                CarrierRelation::Same => same = true,
                CarrierRelation::Disjoint => {}
                CarrierRelation::Overlapping => {
                    return Err(Error::UnsupportedRepresentation(
                        "Cantor carriers of G and Dg overlap without coinciding".into(),
                    ))
                }
            }
        }
        if same {
            on_cantor.push(*part);
        } else {
            off_cantor.push(*part);
        }
    }

    Ok(GDecomposition {
        absolutely_continuous: big_g.ac_part(),
        jump: empty(on_jumps, vec![])?,
        cantor: empty(vec![], on_cantor)?,
        singular_rest: empty(off_jumps, off_cantor)?,
    })
}
