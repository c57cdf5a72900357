mod common;

use common::cut;
use qcs_core::interferometer::photon_distribution;
use qcs_core::qcs::qcs_two_copy;
use qcs_core::sampling::{coverage_study, estimate_qcs, plug_in, sample_counts, DEFAULT_RESAMPLES};
use qcs_core::states::{rho_even_m, thermal};
use qcs_core::PhotonDistribution;

fn thermal_pn() -> PhotonDistribution {
    let rho = thermal(0.85, cut(180).with_deficit_tol(1e-12)).unwrap();
    photon_distribution(&rho, &rho).unwrap()
}

fn even_pn() -> PhotonDistribution {
    let rho = rho_even_m(5, cut(12)).unwrap();
    photon_distribution(&rho, &rho).unwrap()
}

#[test]
fn bootstrap_coverage_thermal() {
    let hits = coverage_study(&thermal_pn(), 3.0 / 37.0, 100_000, 100, DEFAULT_RESAMPLES, 42).unwrap();
    assert!(hits >= 93, "coverage {hits}/100");
}

#[test]
fn bootstrap_coverage_even_mixture() {
    let hits = coverage_study(&even_pn(), 13.0, 100_000, 100, DEFAULT_RESAMPLES, 42).unwrap();
    assert!(hits >= 93, "coverage {hits}/100");
}

#[test]
fn plug_in_on_exact_counts_is_bit_exact() {
    for pn in [thermal_pn(), even_pn()] {
        let a = plug_in(&pn).unwrap().c_squared;
        let b = qcs_two_copy(&pn).unwrap().c_squared;
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn error_shrinks_like_inverse_square_root_of_shots() {
    // mean absolute error over seeds, compared against the 1/sqrt(shots) law
    // anchored at the 10^4 level
    for (pn, exact) in [(even_pn(), 13.0), (thermal(0.3, cut(40)).map(|r| photon_distribution(&r, &r).unwrap()).unwrap(), 0.7 / 1.3)] {
        let levels = [1_000u64, 10_000, 100_000, 1_000_000];
        let seeds = 40;
        let errors: Vec<f64> = levels
            .iter()
            .map(|&shots| {
                let total: f64 = (0..seeds)
                    .map(|s| {
                        let rec = sample_counts(&pn, shots, 9_000 + s).unwrap();
                        (plug_in(&rec.frequencies().unwrap()).unwrap().c_squared - exact).abs()
                    })
                    .sum();
                total / seeds as f64
            })
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "{errors:?}");
        }
        let anchor = errors[1] * (levels[1] as f64).sqrt();
        for (&shots, &err) in levels.iter().zip(&errors) {
            let predicted = anchor / (shots as f64).sqrt();
            assert!(err < 3.0 * predicted && err > predicted / 3.0, "{shots}: {err} vs {predicted}");
        }
    }
}

#[test]
fn bootstrap_is_reproducible() {
    let rec = sample_counts(&even_pn(), 100_000, 5).unwrap();
    let a = estimate_qcs(&rec, 500).unwrap();
    let b = estimate_qcs(&rec, 500).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.ci_low <= a.c_squared && a.c_squared <= a.ci_high);
}
