//! QCS and purity estimators.
//!
//! Every route returns a [`QcsEstimate`] carrying the numerator and the
//! denominator (the purity) separately, so routes can be compared on each
//! factor as well as on the ratio.

mod classical;
pub mod gaussian;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distribution::PhotonDistribution;
use crate::error::{QcsError, Result};
use crate::fock::{quadratures, ComplexOperator, DensityOperator, FockCutoff, StateVector};
use crate::interferometer;
use crate::scalar::{pairwise_sum, Scalar};

pub use classical::qcs_classical_mixture;
pub use gaussian::{overlap_gaussian, purity_gaussian, qcs_gaussian};

/// Alternating sums of measured (or computed) `p_n` below this are treated
/// as a vanishing purity.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-9;
/// Purity threshold for the operator routes.
pub const DEGENERATE_PURITY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    TwoCopy,
    PureShortcut,
    WignerGradient,
    WignerLaplacian,
    Gaussian,
    ClassicalMixture,
    Sampled,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::TwoCopy => "two_copy",
            Method::PureShortcut => "pure_shortcut",
            Method::WignerGradient => "wigner_gradient",
            Method::WignerLaplacian => "wigner_laplacian",
            Method::Gaussian => "gaussian",
            Method::ClassicalMixture => "classical_mixture",
            Method::Sampled => "sampled",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `C² = numerator / denominator`, where the denominator is the purity
/// (or its estimate) and the numerator `C² · P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcsEstimate<T = f64> {
    pub c_squared: T,
    pub method: Method,
    pub numerator: T,
    pub denominator: T,
    pub uncertainty: Option<f64>,
}

impl<T: Scalar> QcsEstimate<T> {
    /// Forms the ratio; fails when `|denominator| <= threshold`.
    pub fn from_parts(numerator: T, denominator: T, method: Method, threshold: f64) -> Result<Self> {
        let den = denominator.approx_f64();
        if !(den.abs() > threshold) {
            return Err(QcsError::DegenerateDenominator { value: den });
        }
        Ok(Self {
            c_squared: numerator.clone() / denominator.clone(),
            method,
            numerator,
            denominator,
            uncertainty: None,
        })
    }

    pub fn with_uncertainty(mut self, uncertainty: f64) -> Self {
        self.uncertainty = Some(uncertainty);
        self
    }

    pub fn purity(&self) -> &T {
        &self.denominator
    }
}

impl QcsEstimate<f64> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// `C² = Σ_j ‖[ρ, r_j]‖²_F / (2N Tr ρ²)` over all `2N` quadratures.
///
/// Each mode is padded by one level before the quadratures act, so the
/// commutators of the truncated state are exact.
pub fn qcs_direct(rho: &DensityOperator) -> Result<QcsEstimate> {
    rho.require_deficit()?;
    let dims: Vec<usize> = rho.dims().iter().map(|d| d + 1).collect();
    let padded = rho.embed(&dims)?;
    let m = padded.matrix();
    let modes = dims.len();
    let mut sum = 0.0;
    for (k, &d) in dims.iter().enumerate() {
        let (x, p) = quadratures(FockCutoff::new(d)?);
        for q in [x, p] {
            let full = if modes == 1 {
                q
            } else {
                ComplexOperator::on_mode(&q, k, &dims)?
            };
            let qm = full.matrix();
            let comm = m * qm - qm * m;
            sum += comm.norm_squared();
        }
    }
    let purity = m.norm_squared();
    let numerator = sum / (2.0 * modes as f64);
    QcsEstimate::from_parts(numerator, purity, Method::Direct, DEGENERATE_PURITY)
}

fn alternating<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let signed: Vec<T> = values
        .enumerate()
        .map(|(n, v)| if n % 2 == 0 { v } else { -v })
        .collect();
    pairwise_sum(&signed)
}

/// `P = Σ (-1)^n p_n`.
pub fn purity_from_pn<T: Scalar>(pn: &PhotonDistribution<T>) -> T {
    alternating(pn.probs().iter().cloned())
}

/// `C² = Σ (1+2n)(-1)^n p_n / Σ (-1)^n p_n`.
pub fn qcs_two_copy<T: Scalar>(pn: &PhotonDistribution<T>) -> Result<QcsEstimate<T>> {
    let denominator = purity_from_pn(pn);
    let numerator = alternating(
        pn.probs()
            .iter()
            .enumerate()
            .map(|(n, p)| T::from_usize_lossy(2 * n + 1) * p.clone()),
    );
    QcsEstimate::from_parts(numerator, denominator, Method::TwoCopy, DEGENERATE_DENOMINATOR)
}

/// Two-copy route end to end: `ρ → p_n → C²`.
pub fn qcs_two_copy_state(rho: &DensityOperator) -> Result<QcsEstimate> {
    let pn = interferometer::photon_distribution(rho, rho)?;
    qcs_two_copy(&pn)
}

/// Signed distribution `π_n = (-1)^n p_n / Σ (-1)^m p_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiProbability<T = f64> {
    pub pi: Vec<T>,
    pub mean_n: T,
}

impl<T: Scalar> QuasiProbability<T> {
    /// `1 + 2 <n>_π`.
    pub fn c_squared(&self) -> T {
        T::one() + T::from_usize_lossy(2) * self.mean_n.clone()
    }
}

pub fn quasi_probability<T: Scalar>(pn: &PhotonDistribution<T>) -> Result<QuasiProbability<T>> {
    let den = purity_from_pn(pn);
    if !(den.approx_f64().abs() > DEGENERATE_DENOMINATOR) {
        return Err(QcsError::DegenerateDenominator {
            value: den.approx_f64(),
        });
    }
    let pi: Vec<T> = pn
        .probs()
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let v = p.clone() / den.clone();
            if n % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    let weighted: Vec<T> = pi
        .iter()
        .enumerate()
        .map(|(n, v)| T::from_usize_lossy(n) * v.clone())
        .collect();
    let mean_n = pairwise_sum(&weighted);
    Ok(QuasiProbability { pi, mean_n })
}

/// Pure states: `C² = 1 + 2(<a†a> - |<a>|²)`.
pub fn qcs_pure_shortcut(psi: &StateVector) -> Result<QcsEstimate> {
    let v = psi.amplitudes();
    let norm2 = v.norm_squared();
    if norm2 <= DEGENERATE_PURITY {
        return Err(QcsError::DegenerateDenominator { value: norm2 });
    }
    let mut n_mean = 0.0;
    let mut a_mean = num_complex::Complex64::new(0.0, 0.0);
    for k in 0..v.len() {
        n_mean += k as f64 * v[k].norm_sqr();
        if k + 1 < v.len() {
            // <a> = Σ conj(c_k) √(k+1) c_{k+1}
            a_mean += v[k].conj() * v[k + 1] * ((k + 1) as f64).sqrt();
        }
    }
    let n_bar = n_mean / norm2 - a_mean.norm_sqr() / (norm2 * norm2);
    QcsEstimate::from_parts(1.0 + 2.0 * n_bar, 1.0, Method::PureShortcut, DEGENERATE_PURITY)
}

/// Multimode two-copy route: with `D = Σ_k n_{d_k}` the total difference
/// photon number,
/// `C² = (1/N) Σ_k <(1 + 2 n_{d_k}) (-1)^D> / <(-1)^D>`.
pub fn qcs_multimode(rho: &DensityOperator, n_modes: usize) -> Result<QcsEstimate> {
    let (probs, out_dims) = interferometer::multimode_joint_counts(rho, n_modes)?;
    let mut den_terms = Vec::with_capacity(probs.len());
    let mut num_terms = Vec::with_capacity(probs.len());
    for (i, p) in probs.iter().enumerate() {
        let occ = crate::fock::unflatten(i, &out_dims);
        let total: usize = occ.iter().sum();
        let sign = if total.is_multiple_of(2) { 1.0 } else { -1.0 };
        let avg: f64 = occ.iter().map(|&n| (1 + 2 * n) as f64).sum::<f64>() / n_modes as f64;
        den_terms.push(sign * p);
        num_terms.push(sign * avg * p);
    }
    QcsEstimate::from_parts(
        pairwise_sum(&num_terms),
        pairwise_sum(&den_terms),
        Method::TwoCopy,
        DEGENERATE_DENOMINATOR,
    )
}
