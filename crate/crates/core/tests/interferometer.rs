mod common;

use common::{cut, random_pure};
use proptest::prelude::*;
use qcs_core::hom::{hom_amplitudes, photon_distribution_phase_invariant};
use qcs_core::interferometer::{photon_distribution, photon_distribution_dense, two_copy_output};
use qcs_core::qcs::qcs_two_copy;
use qcs_core::{BigRational, DensityOperator, HomScalar};

#[test]
fn extended_hong_ou_mandel_for_random_pure_states() {
    for seed in 0..20 {
        let support = 1 + (seed as usize % 10);
        let rho = random_pure(support, 10, 500 + seed).to_density();
        let pn = photon_distribution(&rho, &rho).unwrap();
        assert!(pn.odd_mass() <= 1e-9, "seed {seed}: odd mass {:e}", pn.odd_mass());
    }
}

#[test]
fn single_photon_pair() {
    let rho = qcs_core::states::fock(1, cut(2)).unwrap();
    let pn = photon_distribution(&rho, &rho).unwrap();
    for (got, want) in pn.probs().iter().zip([0.5, 0.0, 0.5]) {
        assert!((got - want).abs() <= 1e-10);
    }
    let dense = photon_distribution_dense(&rho, &rho, 4).unwrap();
    for (got, want) in dense.probs().iter().zip([0.5, 0.0, 0.5]) {
        assert!((got - want).abs() <= 1e-10);
    }
}

#[test]
fn fock_pair_rows_are_normalized() {
    for a in 0..=6 {
        for b in 0..=6 {
            let row = hom_amplitudes::<f64>(a, b, cut(7)).unwrap();
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-10, "({a},{b}): {sum}");
            let exact = hom_amplitudes::<BigRational>(a, b, cut(7)).unwrap();
            let total = exact.iter().fold(BigRational::from_integer(0.into()), |s, x| s + x);
            assert_eq!(total, BigRational::from_integer(1.into()));
        }
    }
}

#[test]
fn fast_path_matches_dense_pipeline_on_diagonal_states() {
    // every Fock mixture with support <= 12 is covered by sweeping the
    // occupied-level pattern over a few weight profiles
    let profiles: Vec<Box<dyn Fn(usize) -> f64>> = vec![
        Box::new(|_| 1.0),
        Box::new(|n| 0.7f64.powi(n as i32)),
        Box::new(|n| (n as f64 + 1.0).sqrt()),
    ];
    for support in 1..=12 {
        for (k, profile) in profiles.iter().enumerate() {
            let mut w: Vec<f64> = (0..support).map(profile).collect();
            if k == 0 && support > 2 {
                w[support / 2] = 0.0;
            }
            let total: f64 = w.iter().sum();
            let mut w: Vec<f64> = w.iter().map(|x| x / total).collect();
            w.push(0.0);
            let rho = DensityOperator::diagonal(&w, 1e-12).unwrap();
            let fast = photon_distribution_phase_invariant(&w, &w).unwrap();
            let dense = photon_distribution_dense(&rho, &rho, 2 * support).unwrap();
            for n in 0..fast.len().max(dense.len()) {
                assert!(
                    (fast.get(n) - dense.get(n)).abs() <= 1e-9,
                    "support {support}, profile {k}, n {n}"
                );
            }
        }
    }
}

#[test]
fn exact_pipeline_reproduces_rational_values() {
    let tenth = vec![BigRational::new(1.into(), 10.into()); 10];
    let mut lam = vec![BigRational::from_integer(0.into())];
    lam.extend(tenth);
    let pn = photon_distribution_phase_invariant(&lam, &lam).unwrap();
    let est = qcs_two_copy(&pn).unwrap();
    assert_eq!(est.c_squared, BigRational::new(6.into(), 5.into()));
    assert_eq!(est.denominator, BigRational::new(1.into(), 10.into()));
}

#[test]
fn output_state_is_a_density_operator() {
    let rho = random_pure(5, 6, 8).to_density();
    let out = two_copy_output(&rho).unwrap();
    assert!((out.trace() - 1.0).abs() < 1e-12);
    let herm = (out.matrix() - out.matrix().adjoint()).camax();
    assert!(herm < 1e-14);
    assert!(out.populations().iter().all(|&p| p > -1e-14));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn counts_are_a_distribution(seed in 0u64..10_000, support in 1usize..10) {
        let rho = random_pure(support, support + 2, seed).to_density();
        let pn = photon_distribution(&rho, &rho).unwrap();
        prop_assert!(pn.probs().iter().all(|&p| p >= 0.0));
        prop_assert!((pn.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fast_path_is_symmetric_in_its_inputs(
        wa in proptest::collection::vec(0.0f64..1.0, 1..8),
        wb in proptest::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let norm = |w: &[f64]| {
            let s: f64 = w.iter().sum::<f64>() + 1e-3;
            w.iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let (wa, wb) = (norm(&wa), norm(&wb));
        let ab = photon_distribution_phase_invariant(&wa, &wb).unwrap();
        let ba = photon_distribution_phase_invariant(&wb, &wa).unwrap();
        for n in 0..ab.len() {
            prop_assert!((ab.get(n) - ba.get(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn hom_rows_vanish_on_odd_n_for_equal_inputs(k in 0usize..40) {
        let row: Vec<f64> = f64::hom_row(k, k);
        for (n, p) in row.iter().enumerate() {
            if n % 2 == 1 {
                prop_assert!(p.abs() < 1e-20);
            }
        }
    }
}
