//! Gaussian route: purity, overlap and QCS from covariance matrices
//! (vacuum `γ = I/2`).

use nalgebra::DMatrix;

use crate::error::{QcsError, Result};
use crate::states::CovarianceMatrix;

use super::{Method, QcsEstimate, DEGENERATE_PURITY};

fn checked_det(gamma: &DMatrix<f64>) -> Result<f64> {
    let det = gamma.determinant();
    if gamma.nrows() == 0 || !(det > 1e-300) || !det.is_finite() {
        return Err(QcsError::SingularCovariance);
    }
    Ok(det)
}

/// `P = 1 / (2^N √det γ)`.
pub fn purity_gaussian(cov: &CovarianceMatrix) -> Result<f64> {
    let det = checked_det(cov.gamma())?;
    Ok(1.0 / (2f64.powi(cov.modes() as i32) * det.sqrt()))
}

/// `Tr(ρ_a ρ_b) = exp(-δᵀ (γ_a+γ_b)⁻¹ δ / 2) / √det(γ_a+γ_b)` with `δ` the
/// difference of the means.
pub fn overlap_gaussian(a: &CovarianceMatrix, b: &CovarianceMatrix) -> Result<f64> {
    if a.modes() != b.modes() {
        return Err(QcsError::DimensionMismatch(format!(
            "{} modes vs {} modes",
            a.modes(),
            b.modes()
        )));
    }
    let sum = a.gamma() + b.gamma();
    let det = checked_det(&sum)?;
    let inv = sum.try_inverse().ok_or(QcsError::SingularCovariance)?;
    let delta = a.mean() - b.mean();
    let quad = (delta.transpose() * inv * &delta)[(0, 0)];
    Ok((-quad / 2.0).exp() / det.sqrt())
}

/// `C² = Tr(γ⁻¹) / (4N)`.
pub fn qcs_gaussian(cov: &CovarianceMatrix) -> Result<QcsEstimate> {
    let purity = purity_gaussian(cov)?;
    let inv = cov
        .gamma()
        .clone()
        .try_inverse()
        .ok_or(QcsError::SingularCovariance)?;
    let c2 = inv.trace() / (4.0 * cov.modes() as f64);
    QcsEstimate::from_parts(c2 * purity, purity, Method::Gaussian, DEGENERATE_PURITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    #[test]
    fn vacuum() {
        let v = CovarianceMatrix::vacuum(1);
        assert_eq!(purity_gaussian(&v).unwrap(), 1.0);
        assert_eq!(qcs_gaussian(&v).unwrap().c_squared, 1.0);
        let v2 = CovarianceMatrix::vacuum(2);
        assert_eq!(qcs_gaussian(&v2).unwrap().c_squared, 1.0);
        assert_eq!(purity_gaussian(&v2).unwrap(), 1.0);
    }

    #[test]
    fn squeezed_and_thermal() {
        for r in [0.3, 0.6, 1.0] {
            let s = CovarianceMatrix::single_mode(0.0, r, 0.4, ZERO).unwrap();
            assert!((qcs_gaussian(&s).unwrap().c_squared - (2.0 * r).cosh()).abs() < 1e-12);
            assert!((purity_gaussian(&s).unwrap() - 1.0).abs() < 1e-12);
        }
        for n in [0.5, 2.0, 17.0 / 3.0] {
            let t = CovarianceMatrix::single_mode(n, 0.0, 0.0, ZERO).unwrap();
            let expected = 1.0 / (1.0 + 2.0 * n);
            assert!((qcs_gaussian(&t).unwrap().c_squared - expected).abs() < 1e-14);
            assert!((purity_gaussian(&t).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn coherent_overlap() {
        let a = Complex64::new(0.3, 0.8);
        let b = Complex64::new(-0.5, 0.1);
        let ca = CovarianceMatrix::single_mode(0.0, 0.0, 0.0, a).unwrap();
        let cb = CovarianceMatrix::single_mode(0.0, 0.0, 0.0, b).unwrap();
        let ov = overlap_gaussian(&ca, &cb).unwrap();
        assert!((ov - (-(a - b).norm_sqr()).exp()).abs() < 1e-15);
        let t = CovarianceMatrix::single_mode(1.5, 0.2, 0.0, ZERO).unwrap();
        assert!((overlap_gaussian(&t, &t).unwrap() - purity_gaussian(&t).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn singular_covariance() {
        let zero = CovarianceMatrix::direct_sum(&[]);
        assert!(purity_gaussian(&zero).is_err());
    }
}
