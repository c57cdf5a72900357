mod common;

use common::{cut, random_pure};
use proptest::prelude::*;
use qcs_core::fock::{
    conserved_subspace, partial_trace, purity_direct, swap_operator, tensor, SwapConstruction,
};
use qcs_core::states::{thermal, thermal_mean};
use qcs_core::DensityOperator;

#[test]
fn swap_constructions_agree_on_conserved_subspace() {
    for d in [8, 12, 16] {
        let perm = swap_operator(cut(d), SwapConstruction::Permutation);
        let expo = swap_operator(cut(d), SwapConstruction::Exponential);
        let mz = swap_operator(cut(d), SwapConstruction::MachZehnder);
        let idx = conserved_subspace(d, d - 1);
        let mut worst: f64 = 0.0;
        for &i in &idx {
            for &j in &idx {
                let p = perm.matrix()[(i, j)];
                worst = worst
                    .max((p - expo.matrix()[(i, j)]).norm())
                    .max((p - mz.matrix()[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-8, "dim {d}: {worst:e}");
    }
}

#[test]
fn permutation_swap_is_an_involution() {
    let s = swap_operator(cut(9), SwapConstruction::Permutation);
    let sq = s.matrix() * s.matrix();
    assert_eq!(sq, nalgebra::DMatrix::identity(81, 81));
    assert_eq!(s.matrix(), &s.matrix().adjoint());
}

#[test]
fn purity_is_the_two_copy_swap_expectation() {
    let states: Vec<DensityOperator> = vec![
        thermal(0.4, cut(20)).unwrap(),
        random_pure(6, 10, 3).to_density(),
        thermal_mean(0.2, cut(10)).unwrap(),
    ];
    for rho in states {
        let s = swap_operator(cut(rho.dim()), SwapConstruction::Permutation);
        let two = tensor(&rho, &rho);
        let via_swap = (two.matrix() * s.matrix()).trace().re;
        assert!((via_swap - purity_direct(&rho)).abs() < 1e-10);
    }
}

fn weights_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, len).prop_filter_map("non-zero", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-3).then(|| w.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_undoes_tensor(wa in weights_strategy(5), seed in 0u64..1000) {
        let a = DensityOperator::diagonal(&wa, 1e-9).unwrap();
        let b = random_pure(4, 6, seed).to_density();
        let joint = tensor(&a, &b);
        let ka = partial_trace(&joint, 0).unwrap();
        let kb = partial_trace(&joint, 1).unwrap();
        let da = (ka.matrix() - a.matrix()).camax();
        let db = (kb.matrix() - b.matrix()).camax();
        prop_assert!(da < 1e-12 && db < 1e-12, "{da:e} {db:e}");
    }

    #[test]
    fn tensor_purity_is_multiplicative(seed in 0u64..1000, wa in weights_strategy(4)) {
        let a = DensityOperator::diagonal(&wa, 1e-9).unwrap();
        let b = random_pure(5, 5, seed).to_density();
        let joint = tensor(&a, &b);
        let lhs = purity_direct(&joint);
        prop_assert!((lhs - purity_direct(&a) * purity_direct(&b)).abs() < 1e-12);
    }
}
