#![allow(dead_code)]

use nalgebra::DVector;
use qcs_core::states::{
    classical_mixture, coherent, fock, rho_2m, rho_even_m, squeezed_vacuum, thermal_mean,
};
use qcs_core::{ClassicalMixture, Complex64, DensityOperator, FockCutoff, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn cut(d: usize) -> FockCutoff {
    FockCutoff::new(d).unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const MIXTURE_SEED: u64 = 11;

/// The eight benchmark states with cutoffs that keep the trace deficit
/// far below the comparison tolerances.
pub fn benchmark_states() -> Vec<(&'static str, DensityOperator)> {
    let mix = ClassicalMixture::random(3, 1.0, MIXTURE_SEED);
    vec![
        ("coherent(0.7)", coherent(c(0.7, 0.0), cut(24)).unwrap()),
        ("fock(1)", fock(1, cut(4)).unwrap()),
        ("fock(3)", fock(3, cut(6)).unwrap()),
        ("thermal(0.5)", thermal_mean(0.5, cut(40)).unwrap()),
        ("squeezed(0.6)", squeezed_vacuum(0.6, cut(60)).unwrap()),
        ("rho_10", rho_2m(5, cut(12)).unwrap()),
        ("rho_even_5", rho_even_m(5, cut(12)).unwrap()),
        ("mixture(3)", classical_mixture(&mix, cut(36)).unwrap()),
    ]
}

pub fn benchmark_mixture() -> ClassicalMixture {
    ClassicalMixture::random(3, 1.0, MIXTURE_SEED)
}

/// Normalized random pure state on levels `0..support`, padded to `dim`.
pub fn random_pure(support: usize, dim: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|n| {
            if n < support {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            } else {
                c(0.0, 0.0)
            }
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::new(DVector::from_vec(amps), 1e-12).unwrap()
}

pub fn assert_close(label: &str, got: f64, want: f64, tol: f64) {
    assert!(
        (got - want).abs() <= tol,
        "{label}: got {got}, want {want} (tol {tol:e})"
    );
}
