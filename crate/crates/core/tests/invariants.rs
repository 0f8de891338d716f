//! Cross-module invariants through the public API.

use msd_relax::approx::{approximate_msd, verify_bounds};
use msd_relax::cell::{solve_h, SolveOptions};
use msd_relax::energy::EnergyPair;
use msd_relax::functional::{eval_e, eval_e_r, penalty_corrector, threshold_r0, DEFAULT_ALBERTI_CONSTANT};
use msd_relax::measure::{decompose, total_variation, BvFunction1D, Measure1D};
use msd_relax::samples::{random_density, random_pair};
use msd_relax::{Energies, Mat, Matrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_parts_sum_to_the_measure(seed in any::<u64>(), d in 1usize..=2) {
        let pair = random_pair(&mut rng(seed), d).unwrap();
        let parts = decompose(&pair).unwrap();
        let residual = total_variation(&parts.sum().unwrap().sub(&pair.big_g).unwrap()).unwrap();
        prop_assert!(residual <= 1e-12);
    }

    #[test]
    fn approximations_respect_the_uniform_bounds(seed in any::<u64>(), p in 3u32..=8) {
        let pair = random_pair(&mut rng(seed), 1).unwrap();
        let u = approximate_msd(&pair, 1 << p).unwrap();
        prop_assert!(verify_bounds(&u, &pair).unwrap().passed);
    }

    #[test]
    fn penalised_energy_dominates_the_corrected_field(seed in any::<u64>(), cells in 2usize..64) {
        let mut r = rng(seed);
        let energies = Energies::double_well_norm().unwrap();
        let g = BvFunction1D::new(Matrix::scalar(0.0), Measure1D::absolutely_continuous(random_density(&mut r, 1).unwrap())).unwrap();
        let big_g = Measure1D::absolutely_continuous(random_density(&mut r, 1).unwrap());
        let weight = threshold_r0(&energies, 1, DEFAULT_ALBERTI_CONSTANT).unwrap();
        let corrected = g.add(&penalty_corrector(&g, &big_g, cells).unwrap()).unwrap();
        let penalised = eval_e_r(&g, &big_g, weight, &energies).unwrap();
        prop_assert!(penalised >= eval_e(&corrected, &energies).unwrap() - 1e-9);
    }

    #[test]
    fn single_precision_tracks_double(a in -2.0f32..2.0, b in -2.0f32..2.0) {
        let wide = solve_h(&Energies::abs_norm(1, 1).unwrap(), &Matrix::scalar(a.into()), &Matrix::scalar(b.into()), SolveOptions::default()).unwrap();
        let pair = EnergyPair::<f32>::abs_norm(1, 1).unwrap();
        let narrow = solve_h(&pair, &Mat::scalar(a), &Mat::scalar(b), SolveOptions::default()).unwrap();
        prop_assert!((f64::from(narrow.value) - wide.value).abs() <= 1e-5 * (1.0 + wide.value));
    }
}
