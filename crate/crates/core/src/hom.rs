//! Counting statistics for Fock-diagonal inputs.
//!
//! For `ρ = Σ λ_N |N><N|` the difference-port distribution needs no
//! operators at all: `p_n = Σ_{N,N'} λ_N λ'_{N'} p_n^{N,N'}` with
//! `p_n^{N,N'}` the beam-splitter counting probabilities for Fock inputs.

use rayon::prelude::*;

use crate::distribution::PhotonDistribution;
use crate::error::{QcsError, Result};
use crate::fock::FockCutoff;
use crate::scalar::{pairwise_sum, HomScalar};

/// `p_n^{N,N'}` for a single pair of Fock inputs, `n = 0..=N+N'`.
pub fn hom_amplitudes<T: HomScalar>(big_n: usize, big_np: usize, cutoff: FockCutoff) -> Result<Vec<T>> {
    let d = cutoff.dim();
    if big_n >= d || big_np >= d {
        return Err(QcsError::InvalidParameter(format!(
            "Fock inputs ({big_n}, {big_np}) outside cutoff {d}"
        )));
    }
    Ok(T::hom_row(big_n, big_np))
}

/// All rows `p^{N,N'}` for `N, N' < cutoff`, stored once per unordered pair
/// (`p_n^{N,N'} = p_n^{N',N}`).
#[derive(Debug, Clone)]
pub struct HomAmplitudeTable<T> {
    dim: usize,
    rows: Vec<Vec<T>>,
}

impl<T: HomScalar> HomAmplitudeTable<T> {
    pub fn new(cutoff: FockCutoff) -> Self {
        let dim = cutoff.dim();
        let pairs: Vec<(usize, usize)> = (0..dim)
            .flat_map(|a| (a..dim).map(move |b| (a, b)))
            .collect();
        let rows = pairs.par_iter().map(|&(a, b)| T::hom_row(a, b)).collect();
        Self { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        // rows for first index < a occupy Σ_{k<a} (dim - k)
        a * self.dim - a * a.saturating_sub(1) / 2 + (b - a)
    }

    pub fn row(&self, big_n: usize, big_np: usize) -> Result<&[T]> {
        if big_n >= self.dim || big_np >= self.dim {
            return Err(QcsError::InvalidParameter(format!(
                "Fock inputs ({big_n}, {big_np}) outside cutoff {}",
                self.dim
            )));
        }
        Ok(&self.rows[self.index(big_n, big_np)])
    }

    /// `p_n^{N,N'}`, zero for `n > N + N'`.
    pub fn get(&self, n: usize, big_n: usize, big_np: usize) -> Result<T> {
        Ok(self.row(big_n, big_np)?.get(n).cloned().unwrap_or_else(T::zero))
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (pairwise_sum(r) - T::one()).approx_f64().abs())
            .fold(0.0, f64::max)
    }
}

/// Difference-port distribution of two Fock-diagonal inputs with weights
/// `lambda_a` and `lambda_b`, on `n = 0..=(la-1)+(lb-1)`.
///
/// Summation order is fixed (per-`N` partial rows, then a pairwise
/// reduction), so results do not depend on the thread count.
pub fn photon_distribution_phase_invariant<T: HomScalar>(
    lambda_a: &[T],
    lambda_b: &[T],
) -> Result<PhotonDistribution<T>> {
    if lambda_a.is_empty() || lambda_b.is_empty() {
        return Err(QcsError::InvalidParameter("empty Fock weights".into()));
    }
    let len = lambda_a.len() + lambda_b.len() - 1;
    let symmetric = lambda_a == lambda_b;
    let partials: Vec<Vec<T>> = (0..lambda_a.len())
        .into_par_iter()
        .map(|big_n| {
            let mut acc = vec![T::zero(); len];
            let wa = &lambda_a[big_n];
            if wa.is_zero() {
                return acc;
            }
            let start = if symmetric { big_n } else { 0 };
            for (big_np, wb) in lambda_b.iter().enumerate().skip(start) {
                if wb.is_zero() {
                    continue;
                }
                let mut w = wa.clone() * wb.clone();
                if symmetric && big_np != big_n {
                    w = w.clone() + w;
                }
                for (n, p) in T::hom_row(big_n, big_np).into_iter().enumerate() {
                    acc[n] = acc[n].clone() + w.clone() * p;
                }
            }
            acc
        })
        .collect();
    let probs: Vec<T> = (0..len)
        .map(|n| {
            let column: Vec<T> = partials.iter().map(|row| row[n].clone()).collect();
            pairwise_sum(&column)
        })
        .collect();
    PhotonDistribution::from_raw(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{FromPrimitive, One};

    #[test]
    fn table_rows_are_normalized_and_symmetric() {
        let table = HomAmplitudeTable::<f64>::new(FockCutoff::new(25).unwrap());
        assert!(table.max_row_sum_error() < 1e-12);
        for a in 0..25 {
            for b in 0..25 {
                assert_eq!(table.row(a, b).unwrap(), &f64::hom_row(a.min(b), a.max(b))[..]);
                assert_eq!(table.row(a, b).unwrap().len(), a + b + 1);
            }
        }
        assert!(table.row(25, 0).is_err());
        assert_eq!(table.get(7, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn exact_table_rows_sum_to_one() {
        let table = HomAmplitudeTable::<BigRational>::new(FockCutoff::new(9).unwrap());
        assert_eq!(table.max_row_sum_error(), 0.0);
        assert_eq!(
            table.get(1, 1, 1).unwrap(),
            BigRational::from_u8(0).unwrap()
        );
    }

    #[test]
    fn symmetry_of_fock_pairs() {
        for (a, b) in [(0, 3), (2, 5), (4, 9)] {
            let x: Vec<f64> = f64::hom_row(a, b);
            let y: Vec<f64> = f64::hom_row(b, a);
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn out_of_range_inputs() {
        let c = FockCutoff::new(4).unwrap();
        assert!(hom_amplitudes::<f64>(4, 0, c).is_err());
        let row = hom_amplitudes::<f64>(1, 1, c).unwrap();
        for (p, q) in row.iter().zip([0.5, 0.0, 0.5]) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn single_photon_pair_in_exact_arithmetic() {
        let one = BigRational::one();
        let zero = BigRational::from_u8(0).unwrap();
        let lam = vec![zero, one];
        let dist = photon_distribution_phase_invariant(&lam, &lam).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(dist.probs()[0], half);
        assert_eq!(dist.probs()[2], half);
    }

    #[test]
    fn asymmetric_inputs_match_explicit_sum() {
        let la = vec![0.2, 0.5, 0.3];
        let lb = vec![0.6, 0.0, 0.1, 0.3];
        let dist = photon_distribution_phase_invariant(&la, &lb).unwrap();
        let mut expected = vec![0.0; 6];
        for (i, wa) in la.iter().enumerate() {
            for (j, wb) in lb.iter().enumerate() {
                for (n, p) in f64::hom_row(i, j).iter().enumerate() {
                    expected[n] += wa * wb * p;
                }
            }
        }
        for (x, y) in dist.probs().iter().zip(&expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
