mod common;

use common::{assert_close, benchmark_states, c, cut};
use qcs_core::fock::purity_direct;
use qcs_core::interferometer::two_copy_output;
use qcs_core::phase_space::{
    origin_jet, overlap_parity, overlap_wigner, qcs_wigner_gradient_default, qcs_wigner_laplacian,
    wigner_eval, GridSpec,
};
use qcs_core::qcs::qcs_two_copy_state;
use qcs_core::states::{coherent, squeezed_vacuum, thermal};
use std::f64::consts::PI;

#[test]
fn parity_at_the_origin_is_the_purity() {
    for (name, rho) in benchmark_states() {
        let rho_d = two_copy_output(&rho).unwrap();
        let w0 = origin_jet(&rho_d).unwrap().value;
        assert_close(name, PI * w0, purity_direct(&rho), 1e-8);
    }
}

#[test]
fn normalization_and_purity_on_default_grids() {
    for (name, rho) in benchmark_states() {
        let grid = wigner_eval(&rho, &GridSpec::default_for(&rho).unwrap()).unwrap();
        assert_close(name, grid.integral(), rho.trace(), 1e-6);
        assert_close(name, grid.purity(), purity_direct(&rho), 1e-6);
    }
}

#[test]
fn difference_mode_wigner_is_non_negative() {
    for (name, rho) in benchmark_states() {
        let rho_d = two_copy_output(&rho).unwrap();
        let spec = GridSpec::square(5.0, 0.1).unwrap();
        let grid = qcs_core::phase_space::wigner_eval(&rho_d, &spec);
        // a coarse grid may fail the normalization check; probe pointwise then
        let min = match grid {
            Ok(g) => g.min_value(),
            Err(_) => {
                let mut m = f64::INFINITY;
                for i in 0..spec.nx {
                    for j in 0..spec.np {
                        m = m.min(
                            qcs_core::phase_space::wigner_at(&rho_d, spec.x(i), spec.p(j)).unwrap(),
                        );
                    }
                }
                m
            }
        };
        assert!(min >= -1e-10, "{name}: min W_d = {min:e}");
    }
}

#[test]
fn overlaps() {
    let pairs = [(c(0.3, 0.1), c(-0.4, 0.6)), (c(1.0, 0.0), c(1.0, 0.0)), (c(0.0, 0.0), c(1.2, -0.5))];
    for (a, b) in pairs {
        let ra = coherent(a, cut(30)).unwrap();
        let rb = coherent(b, cut(30)).unwrap();
        let want = (-(a - b).norm_sqr()).exp();
        let spec = GridSpec::default_for(&ra).unwrap().union(&GridSpec::default_for(&rb).unwrap()).unwrap();
        assert_close("wigner", overlap_wigner(&ra, &rb, &spec).unwrap(), want, 1e-6);
        assert_close("parity", overlap_parity(&ra, &rb).unwrap(), want, 1e-6);
    }
    let sq = squeezed_vacuum(0.5, cut(60)).unwrap();
    let spec = GridSpec::default_for(&sq).unwrap();
    let trace = purity_direct(&sq);
    assert_close("squeezed wigner", overlap_wigner(&sq, &sq, &spec).unwrap(), trace, 1e-6);
    assert_close("squeezed parity", overlap_parity(&sq, &sq).unwrap(), trace, 1e-6);
}

#[test]
fn laplacian_route_matches_two_copy() {
    for (name, rho) in benchmark_states() {
        let lap = qcs_wigner_laplacian(&rho).unwrap().c_squared;
        let two = qcs_two_copy_state(&rho).unwrap().c_squared;
        assert_close(name, lap, two, 1e-6);
    }
}

#[test]
fn gradient_route_matches_two_copy() {
    for (name, rho) in benchmark_states() {
        let grad = qcs_wigner_gradient_default(&rho).unwrap_or_else(|e| panic!("{name}: {e}"));
        let two = qcs_two_copy_state(&rho).unwrap().c_squared;
        assert_close(name, grad.c_squared, two, 1e-3);
        // refinement is built in: the reported uncertainty is the h -> h/2 change
        assert!(grad.uncertainty.unwrap() < 1e-4, "{name}: {:?}", grad.uncertainty);
    }
}

#[test]
fn gradient_route_on_the_thermal_figure_state() {
    let rho = thermal(0.85, cut(120)).unwrap();
    let grad = qcs_wigner_gradient_default(&rho).unwrap().c_squared;
    assert_close("thermal(0.85)", grad, 3.0 / 37.0, 1e-3);
}
