//! Closed form for mixtures of coherent states.
//!
//! Two copies of `Σ w_i |α_i><α_i|` leave the difference port in the
//! classical mixture `Σ w_i w_j |γ_ij><γ_ij|`, `γ_ij = (-α_i + α_j)/√2`.
//! For a coherent state `|γ>` the parity moments are
//! `<(-1)^n> = e^{-2|γ|²}` and `<(1+2n)(-1)^n> = (1 - 2|γ|²) e^{-2|γ|²}`,
//! so
//! `C² = 1 - 2 <|γ|² e^{-2|γ|²}> / <e^{-2|γ|²}>`, which never exceeds one.

use crate::error::Result;
use crate::scalar::pairwise_sum;
use crate::states::ClassicalMixture;

use super::{Method, QcsEstimate, DEGENERATE_PURITY};

pub fn qcs_classical_mixture(mix: &ClassicalMixture) -> Result<QcsEstimate> {
    let w = mix.weights();
    let a = mix.amplitudes();
    let mut den = Vec::with_capacity(w.len() * w.len());
    let mut num = Vec::with_capacity(w.len() * w.len());
    for i in 0..w.len() {
        for j in 0..w.len() {
            let g2 = (a[j] - a[i]).norm_sqr() / 2.0;
            let weight = w[i] * w[j] * (-2.0 * g2).exp();
            den.push(weight);
            num.push(weight * (1.0 - 2.0 * g2));
        }
    }
    QcsEstimate::from_parts(
        pairwise_sum(&num),
        pairwise_sum(&den),
        Method::ClassicalMixture,
        DEGENERATE_PURITY,
    )
}
