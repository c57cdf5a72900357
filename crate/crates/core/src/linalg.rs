//! Dense helpers shared by the operator modules. Crate-internal.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub(crate) type CMatrix = DMatrix<Complex64>;

/// `exp(i * theta * h)` for Hermitian `h`, by eigendecomposition.
///
/// Accurate to ~1e-13 in operator norm for the sizes used here
/// (a few hundred rows); the caller guarantees `h` is Hermitian.
pub(crate) fn exp_i_hermitian(h: &CMatrix, theta: f64) -> CMatrix {
    let n = h.nrows();
    let sym = hermitize(h);
    let eig = SymmetricEigen::new(sym);
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, theta * lambda);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * v.adjoint()
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise deviation from Hermiticity.
pub(crate) fn hermiticity_error(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Trace of a product without forming it.
pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_pauli_x() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let sx = CMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let theta = 0.37;
        let u = exp_i_hermitian(&sx, theta);
        let c = Complex64::new(theta.cos(), 0.0);
        let s = Complex64::new(0.0, theta.sin());
        let expected = CMatrix::from_row_slice(2, 2, &[c, s, s, c]);
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }
}
