//! Photon-number distributions measured in the difference port.

use std::fmt::Display;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QcsError, Result};
use crate::scalar::{pairwise_sum, Scalar};

/// Negative probabilities down to this level are treated as round-off.
pub const NEGATIVE_PROB_TOL: f64 = 1e-12;
/// Clipped round-off beyond this fails the computation.
pub const ROUNDOFF_BUDGET: f64 = 1e-8;

/// `p_n`, the probability of counting `n` photons, for `n = 0..len`.
///
/// `deficit` is `1 - Σ p_n`: probability that fell outside the simulated
/// range, or was never sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution<T = f64> {
    probs: Vec<T>,
    deficit: T,
}

impl<T: Scalar> PhotonDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let tol = T::from_f64(NEGATIVE_PROB_TOL).unwrap_or_else(T::zero);
        if probs.iter().any(|p| *p < -tol.clone()) {
            return Err(QcsError::InvalidParameter(
                "photon distribution has negative entries".into(),
            ));
        }
        let probs: Vec<T> = probs
            .into_iter()
            .map(|p| if p < T::zero() { T::zero() } else { p })
            .collect();
        let total = pairwise_sum(&probs);
        if total > T::one() + tol {
            return Err(QcsError::InvalidParameter(format!(
                "photon distribution sums to {:?} > 1",
                total
            )));
        }
        let deficit = T::one() - total;
        Ok(Self { probs, deficit })
    }

    /// Builds from raw values, clipping negatives and enforcing the
    /// round-off budget on what was clipped.
    pub fn from_raw(raw: Vec<T>) -> Result<Self> {
        let mut clipped = T::zero();
        let probs: Vec<T> = raw
            .into_iter()
            .map(|p| {
                if p < T::zero() {
                    clipped = clipped.clone() - p;
                    T::zero()
                } else {
                    p
                }
            })
            .collect();
        let budget = clipped.approx_f64();
        if budget > ROUNDOFF_BUDGET {
            return Err(QcsError::RoundOffBudget {
                budget,
                limit: ROUNDOFF_BUDGET,
            });
        }
        Self::new(probs)
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn deficit(&self) -> &T {
        &self.deficit
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `p_n`, zero beyond the stored range.
    pub fn get(&self, n: usize) -> T {
        self.probs.get(n).cloned().unwrap_or_else(T::zero)
    }

    pub fn cumulative(&self) -> Vec<T> {
        let mut acc = T::zero();
        self.probs
            .iter()
            .map(|p| {
                acc = acc.clone() + p.clone();
                acc.clone()
            })
            .collect()
    }

    /// Total probability on odd photon numbers.
    pub fn odd_mass(&self) -> T {
        let odd: Vec<T> = self.probs.iter().skip(1).step_by(2).cloned().collect();
        pairwise_sum(&odd)
    }

    /// Same distribution padded with zeros (or cut) to `len` entries.
    pub fn resized(&self, len: usize) -> Self {
        let mut probs = self.probs.clone();
        probs.resize(len, T::zero());
        let total = pairwise_sum(&probs);
        Self {
            probs,
            deficit: T::one() - total,
        }
    }
}

impl<T: Scalar + Display> PhotonDistribution<T> {
    /// CSV with mandatory header `n,p_n,cumulative`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,p_n,cumulative\n");
        for (n, (p, c)) in self.probs.iter().zip(self.cumulative()).enumerate() {
            out.push_str(&format!("{n},{p},{c}\n"));
        }
        out
    }
}

impl<T: Scalar + FromStr> PhotonDistribution<T> {
    pub fn from_csv(text: &str) -> Result<Self> {
        // leading "#" lines carry run metadata
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        match lines.next().map(str::trim) {
            Some("n,p_n,cumulative") => {}
            other => {
                return Err(QcsError::InvalidParameter(format!(
                    "missing CSV header, found {other:?}"
                )))
            }
        }
        let mut probs = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(QcsError::InvalidParameter(format!(
                    "row {row}: expected 3 columns"
                )));
            }
            let n: usize = fields[0]
                .parse()
                .map_err(|_| QcsError::InvalidParameter(format!("row {row}: bad n")))?;
            if n != probs.len() {
                return Err(QcsError::InvalidParameter(format!(
                    "row {row}: n = {n} out of sequence"
                )));
            }
            let p: T = fields[1]
                .parse()
                .map_err(|_| QcsError::InvalidParameter(format!("row {row}: bad p_n")))?;
            probs.push(p);
        }
        Self::new(probs)
    }
}
