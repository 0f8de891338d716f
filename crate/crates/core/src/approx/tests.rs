use super::*;
use crate::functional::{ClosedFormAbsNorm, OracleDensities};

fn s(x: f64) -> Mat<f64> {
    Mat::scalar(x)
}

const DOM: (f64, f64) = (-1.0, 1.0);

fn delta0() -> Measure1D<f64> {
    Measure1D::dirac(DOM, 0.0, s(1.0)).unwrap()
}

fn zero_fn() -> BvFunction1D<f64> {
    BvFunction1D::constant(DOM, s(0.0))
}

#[test]
fn primitives_of_simple_densities() {
    let f = alberti_primitive_1d(&Measure1D::absolutely_continuous(PiecewisePoly::constant(0.0, 1.0, s(2.0)))).unwrap();
    assert_eq!(f.eval(0.25).get(0, 0), 0.5);
    let sign = PiecewisePoly::new(vec![0.0, 0.5, 1.0], vec![vec![s(-1.0)], vec![s(1.0)]], 1, 1).unwrap();
    let v = alberti_primitive_1d(&Measure1D::absolutely_continuous(sign)).unwrap();
    assert_eq!(total_variation(v.derivative()).unwrap(), 1.0);
    assert_eq!(v.trace_right().get(0, 0), 0.0);
    assert!(alberti_primitive_1d(&delta0()).is_err());
}

#[test]
fn sampling_keeps_variation_of_monotone_functions() {
    let affine = BvFunction1D::affine((0.0, 1.0), s(0.0), s(1.0));
    for n in [2, 7, 64] {
        let pc = piecewise_constant_approx(&affine, n).unwrap();
        assert!((total_variation(pc.derivative()).unwrap() - 1.0).abs() < 1e-12);
        assert!(pc.is_sbv() && pc.derivative().density().is_zero());
    }
    let cantor = BvFunction1D::cantor_staircase((0.0, 1.0), s(1.0));
    let pc = piecewise_constant_approx(&cantor, 1 << 10).unwrap();
    assert!((total_variation(pc.derivative()).unwrap() - 1.0).abs() < 1e-2);
}

#[test]
fn sampling_reproduces_partition_step_functions() {
    let u = BvFunction1D::step((0.0, 1.0), s(1.0), 0.25, s(-2.0)).unwrap();
    let pc = piecewise_constant_approx(&u, 4).unwrap();
    assert_eq!(pc.trace_left(), u.trace_left());
    assert_eq!(pc.jumps().len(), 1);
    assert_eq!((pc.jumps()[0].x, pc.jumps()[0].weight), (0.25, s(-2.0)));
}

#[test]
fn smoothing_preserves_mass_and_converges() {
    let dict = TestDictionary::default();
    let mut gaps = Vec::new();
    for k in [1, 2, 3, 4, 5, 6, 8, 11, 16, 22, 32, 64] {
        let gk = smooth_to_measure(&delta0(), k).unwrap();
        assert!(gk.is_absolutely_continuous());
        assert!((gk.mass().get(0, 0) - 1.0).abs() < 1e-9);
        gaps.push(weakstar_gap(&gk, &delta0(), &dict).unwrap());
    }
    assert!(gaps.windows(2).all(|w| w[1] <= 1.1 * w[0]), "{gaps:?}");
    assert!(*gaps.last().unwrap() < 0.1, "{gaps:?}");
    let mixed = delta0().add(&Measure1D::absolutely_continuous(PiecewisePoly::constant(-1.0, 1.0, s(1.0)))).unwrap();
    for k in 1..6 {
        let gk = smooth_to_measure(&mixed, k).unwrap();
        assert!(gk.density().abs_integral().unwrap() <= 3.0 + 1e-9);
    }
}

#[test]
fn approximation_has_the_smoothed_gradient() {
    let g = BvFunction1D::step(DOM, s(0.0), 0.0, s(1.0)).unwrap();
    let cantor = Measure1D::cantor_component(DOM, 0.5, 0.2, s(0.7)).unwrap();
    let pair = MsdPair::new(g, cantor.add(&delta0()).unwrap()).unwrap();
    for n in [9, 100] {
        let u = approximate_msd(&pair, n).unwrap();
        let gk = smooth_to_measure(&pair.big_g, diagonal_index(n)).unwrap();
        assert_eq!(u.derivative().density(), gk.density());
        assert!(u.is_sbv());
    }
    let chi = BvFunction1D::step(DOM, s(0.0), 0.0, s(1.0)).unwrap();
    let u = approximate_msd(&MsdPair::new(chi.clone(), Measure1D::zero(DOM, 1, 1)).unwrap(), 16).unwrap();
    assert!(u.derivative().density().is_zero());
    assert_eq!(u.jumps().len(), 1);
    assert!(bv_weakstar_gap(&u, &chi, &TestDictionary::default()).unwrap() < 1e-12);
}

#[test]
fn bounds_hold_and_are_scale_invariant() {
    let pair = MsdPair::new(zero_fn(), delta0()).unwrap();
    assert!((msd_norm(&pair).unwrap() - 1.0).abs() < 1e-12);
    let doubled = MsdPair::new(zero_fn(), delta0().scale(2.0)).unwrap();
    for n in [8, 64, 1024] {
        let rep = verify_bounds(&approximate_msd(&pair, n).unwrap(), &pair).unwrap();
        assert!(rep.passed && rep.tv_ratio <= 3.0, "{rep:?}");
        let rep2 = verify_bounds(&approximate_msd(&doubled, n).unwrap(), &doubled).unwrap();
        assert!((rep2.tv_ratio - rep.tv_ratio).abs() < 1e-9 && (rep2.bv_ratio - rep.bv_ratio).abs() < 1e-9);
        assert!((rep2.norm - 2.0 * rep.norm).abs() < 1e-9);
    }
    let zero = MsdPair::new(zero_fn(), Measure1D::zero(DOM, 1, 1)).unwrap();
    assert!(verify_bounds(&zero_fn(), &zero).is_err());
}

#[test]
fn l1_norm_of_a_staircase() {
    let cantor = BvFunction1D::cantor_staircase((0.0, 1.0), s(1.0));
    // The Cantor function is symmetric about (1/2, 1/2), so its integral is 1/2.
    assert!((l1_norm(&cantor).unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn energies_converge_for_a_compatible_pair() {
    let e = EnergyPair::<f64>::abs_norm(1, 1).unwrap();
    let g = BvFunction1D::affine(DOM, s(0.0), s(0.5)).add(&BvFunction1D::step(DOM, s(0.0), 0.3, s(-1.0)).unwrap()).unwrap();
    let big_g = Measure1D::absolutely_continuous(g.derivative().density().clone());
    let pair = MsdPair::new(g, big_g).unwrap();
    let rep = energy_convergence_experiment(&pair, &e, &ClosedFormAbsNorm { d: 1 }, &default_schedule(), 1e-3).unwrap();
    assert!((rep.j_value - 2.0).abs() < 1e-12);
    assert!(rep.passed && rep.recovery && rep.bounds_passed, "{rep:?}");
}

#[test]
fn dirac_with_zero_field_reaches_the_relaxed_value() {
    let e = EnergyPair::<f64>::abs_norm(1, 1).unwrap();
    let pair = MsdPair::new(zero_fn(), delta0()).unwrap();
    let rep = energy_convergence_experiment(&pair, &e, &OracleDensities::new(&e).unwrap(), &default_schedule(), 1e-3).unwrap();
    assert!((rep.j_value - 2.0).abs() < 1e-12);
    assert!(rep.rows.iter().all(|r| r.e_value >= rep.j_value - 1e-3), "{:?}", rep.rows);
    assert!(rep.passed);
    let gaps: Vec<f64> = rep.rows.iter().map(|r| r.weakstar_gap_big_g).collect();
    assert!(gaps.windows(2).all(|w| w[1] <= 1.1 * w[0]), "{gaps:?}");
}

#[test]
fn zero_pair_gives_zero_rows() {
    let e = EnergyPair::<f64>::abs_norm(1, 1).unwrap();
    let pair = MsdPair::new(zero_fn(), Measure1D::zero(DOM, 1, 1)).unwrap();
    let rep = energy_convergence_experiment(&pair, &e, &ClosedFormAbsNorm { d: 1 }, &[8, 32], 1e-3).unwrap();
    assert!(rep.rows.iter().all(|r| r.e_value == 0.0 && r.weakstar_gap_g == 0.0 && r.tv_ratio == 0.0));
    assert_eq!(rep.j_value, 0.0);
}

#[test]
fn liminf_extrapolates_geometric_bias() {
    let row = |n, e| ExperimentRow {
        n,
        e_value: e,
        j_value: 0.0,
        weakstar_gap_g: 0.0,
        weakstar_gap_big_g: 0.0,
        tv_ratio: 0.0,
        bv_ratio: 0.0,
    };
    // E = 1 - 0.6^m at k = 2^m: increments contract by 0.6.
    let e = |m: i32| 1.0 - 0.6f64.powi(m);
    let est: f64 = liminf_estimate(&[row(64, e(3)), row(256, e(4)), row(512, 0.0), row(1024, e(5))]).unwrap();
    assert!((est - 1.0).abs() < 1e-12, "{est}");
    assert_eq!(liminf_estimate(&[row(256, 1.15), row(1024, 1.1)]), Some(1.1));
    // Growing increments are not extrapolated.
    assert_eq!(liminf_estimate(&[row(64, 1.0), row(256, 1.1), row(1024, 1.3)]), Some(1.3));
}
