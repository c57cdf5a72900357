//! Scalar abstraction for the photon-statistics layer.
//!
//! Everything that only manipulates photon-number distributions (the
//! beam-splitter counting amplitudes, the alternating-sum estimators, the
//! quasi-probability) is written against [`Scalar`], so it runs in `f32`,
//! `f64`, or exact [`BigRational`] arithmetic. The Fock-space operator layer
//! is fixed to `f64` complex matrices.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Field-like scalar used by the photon-statistics routines.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync
{
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits every supported scalar")
    }

    /// Lossy view used for tolerance checks and error reporting.
    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync
{
}

/// Scalars that can evaluate the two-photon-source counting probabilities
/// `p_n^{N,N'}`: probability of `n` photons in the difference port of a
/// balanced beam splitter fed with `|N>` and `|N'>`.
pub trait HomScalar: Scalar {
    /// Returns `p_n^{N,N'}` for `n = 0..=N+N'`.
    fn hom_row(big_n: usize, big_np: usize) -> Vec<Self>;
}

impl HomScalar for f64 {
    fn hom_row(big_n: usize, big_np: usize) -> Vec<f64> {
        let total = big_n + big_np;
        let block = crate::interferometer::shared_block(total);
        (0..=total)
            .map(|n| {
                let amp = block[(total - n, big_n)];
                amp * amp
            })
            .collect()
    }
}

impl HomScalar for f32 {
    fn hom_row(big_n: usize, big_np: usize) -> Vec<f32> {
        f64::hom_row(big_n, big_np)
            .into_iter()
            .map(|p| p as f32)
            .collect()
    }
}

impl HomScalar for BigRational {
    fn hom_row(big_n: usize, big_np: usize) -> Vec<BigRational> {
        let total = big_n + big_np;
        let two_pow = BigInt::one() << total;
        let c_total_n = binomial(total, big_n);
        (0..=total)
            .map(|n| {
                let lo = n.saturating_sub(big_n);
                let hi = n.min(big_np);
                let mut s = BigInt::zero();
                for k in lo..=hi {
                    let term = binomial(big_n, n - k) * binomial(big_np, k);
                    if k % 2 == 0 {
                        s += term;
                    } else {
                        s -= term;
                    }
                }
                let num = &s * &s * &c_total_n;
                let den = &two_pow * binomial(total, n);
                BigRational::new(num, den)
            })
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Difference-port amplitude `<N+N'-n, n| U_BS |N, N'>`.
///
/// The closed-form alternating sum over `n'` cancels catastrophically once
/// `N + N'` reaches a few dozen, so the float path reads the entry off the
/// exactly unitary beam-splitter block instead.
pub fn hom_amplitude_f64(n: usize, big_n: usize, big_np: usize) -> f64 {
    let total = big_n + big_np;
    if n > total {
        return 0.0;
    }
    crate::interferometer::shared_block(total)[(total - n, big_n)]
}

/// Pairwise (cascade) summation: O(log n) error growth for floats, exact
/// for exact scalars. Summation order is fixed, so results are
/// reproducible.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().cloned().fold(T::zero(), |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hong_ou_mandel_pair() {
        let row = f64::hom_row(1, 1);
        assert!((row[0] - 0.5).abs() < 1e-15);
        assert!(row[1].abs() < 1e-15);
        assert!((row[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_rows_match_float_rows() {
        for big_n in 0..=7 {
            for big_np in 0..=7 {
                let exact = BigRational::hom_row(big_n, big_np);
                let float = f64::hom_row(big_n, big_np);
                for (e, f) in exact.iter().zip(&float) {
                    assert!((e.to_f64().unwrap() - f).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn large_photon_numbers_stay_finite_and_normalized() {
        let row = f64::hom_row(160, 145);
        assert!(row.iter().all(|p| p.is_finite()));
        let total: f64 = row.iter().sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
        // Fock-pair interference: equal inputs never give odd counts
        let even = f64::hom_row(80, 80);
        assert!(even.iter().skip(1).step_by(2).all(|p| *p < 1e-20));
    }

    #[test]
    fn pairwise_sum_is_exact_on_rationals() {
        let v: Vec<BigRational> = (1..100)
            .map(|k| BigRational::new(BigInt::from(1), BigInt::from(k * (k + 1))))
            .collect();
        assert_eq!(
            pairwise_sum(&v),
            BigRational::new(BigInt::from(99), BigInt::from(100))
        );
    }
}
