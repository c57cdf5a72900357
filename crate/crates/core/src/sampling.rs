//! Finite-shot simulation of the two-copy measurement and the plug-in QCS
//! estimator with a seeded percentile bootstrap.
//!
//! Random numbers come from ChaCha20 (`rand_chacha`); the seed selects the
//! key, and each bootstrap resample `b` runs on its own stream `b + 1`, so
//! results do not depend on how resamples are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::PhotonDistribution;
use crate::error::{QcsError, Result};
use crate::qcs::{qcs_two_copy, Method, QcsEstimate, DEGENERATE_DENOMINATOR};
use crate::scalar::pairwise_sum;

pub const SHOT_RECORD_SCHEMA: u32 = 1;
pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_SHOTS_FOR_ESTIMATE: u64 = 100;
/// Generator identification written into every record.
pub const RNG_ALGORITHM: &str = "ChaCha20Rng (rand_chacha 0.9)";

/// Photon-count histogram of `shots` simulated detections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub schema: u32,
    pub seed: u64,
    pub shots: u64,
    pub counts: Vec<u64>,
}

impl ShotRecord {
    pub fn new(seed: u64, counts: Vec<u64>) -> Self {
        let shots = counts.iter().sum();
        Self {
            schema: SHOT_RECORD_SCHEMA,
            seed,
            shots,
            counts,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SHOT_RECORD_SCHEMA {
            return Err(QcsError::InvalidParameter(format!(
                "unsupported shot record schema {}",
                self.schema
            )));
        }
        if self.counts.iter().sum::<u64>() != self.shots {
            return Err(QcsError::InvalidParameter(
                "counts do not add up to shots".into(),
            ));
        }
        Ok(())
    }

    /// Empirical frequencies `p̂_n = counts_n / shots`.
    pub fn frequencies(&self) -> Result<PhotonDistribution> {
        if self.shots == 0 {
            return Err(QcsError::InvalidParameter("record has no shots".into()));
        }
        let total = self.shots as f64;
        PhotonDistribution::new(self.counts.iter().map(|&c| c as f64 / total).collect())
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Multinomial draw by sequential conditional binomials.
fn multinomial(probs: &[f64], shots: u64, rng: &mut ChaCha20Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= 0.0 {
            counts[k] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .expect("probability in (0, 1)")
                .sample(rng)
        };
        counts[k] = c;
        remaining -= c;
        mass -= p;
    }
    counts
}

/// Draws `shots` photon counts from `pn` (renormalized over its support).
pub fn sample_counts(pn: &PhotonDistribution, shots: u64, seed: u64) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(QcsError::InvalidParameter("shots must be at least 1".into()));
    }
    if pn.is_empty() || pairwise_sum(pn.probs()) <= 0.0 {
        return Err(QcsError::InvalidParameter("empty photon distribution".into()));
    }
    let mut rng = rng_for(seed, 0);
    Ok(ShotRecord::new(seed, multinomial(pn.probs(), shots, &mut rng)))
}

/// Plug-in estimate with a bootstrap confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledEstimate {
    pub c_squared: f64,
    pub method: Method,
    pub numerator: f64,
    pub denominator: f64,
    pub uncertainty: Option<f64>,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub shots: u64,
    pub resamples: usize,
    pub seed: u64,
}

impl SampledEstimate {
    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn estimate(&self) -> QcsEstimate {
        QcsEstimate {
            c_squared: self.c_squared,
            method: Method::Sampled,
            numerator: self.numerator,
            denominator: self.denominator,
            uncertainty: Some(self.std_error),
        }
    }
}

/// The plug-in estimator: the two-copy formula applied to `pn` as given.
pub fn plug_in(pn: &PhotonDistribution) -> Result<QcsEstimate> {
    let est = qcs_two_copy(pn)?;
    Ok(QcsEstimate {
        method: Method::Sampled,
        ..est
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    // linear interpolation between closest ranks
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Plug-in `C²` from the record's frequencies, 95% percentile bootstrap
/// interval over `resamples` multinomial resamples.
///
/// The interval is widened to include the point estimate if needed. Fails
/// with [`QcsError::UnstableDenominator`] when any resample's alternating
/// sum reaches zero or flips sign.
pub fn estimate_qcs(rec: &ShotRecord, resamples: usize) -> Result<SampledEstimate> {
    rec.validate()?;
    if rec.shots < MIN_SHOTS_FOR_ESTIMATE {
        return Err(QcsError::InvalidParameter(format!(
            "need at least {MIN_SHOTS_FOR_ESTIMATE} shots, got {}",
            rec.shots
        )));
    }
    if resamples < 2 {
        return Err(QcsError::InvalidParameter("need at least 2 bootstrap resamples".into()));
    }
    let freqs = rec.frequencies()?;
    let point = plug_in(&freqs)?;
    let sign = point.denominator.signum();
    let boot: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(rec.seed, b as u64 + 1);
            let counts = multinomial(freqs.probs(), rec.shots, &mut rng);
            let resampled = ShotRecord::new(rec.seed, counts).frequencies().ok()?;
            let est = qcs_two_copy(&resampled).ok()?;
            (est.denominator.signum() == sign && est.denominator.abs() > DEGENERATE_DENOMINATOR)
                .then_some(est.c_squared)
        })
        .collect();
    let crossings = boot.iter().filter(|v| v.is_none()).count();
    if crossings > 0 {
        return Err(QcsError::UnstableDenominator {
            crossings,
            resamples,
        });
    }
    let mut values: Vec<f64> = boot.into_iter().flatten().collect();
    let mean = pairwise_sum(&values) / resamples as f64;
    let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let std_error = (pairwise_sum(&squares) / (resamples - 1) as f64).sqrt();
    values.sort_by(f64::total_cmp);
    let ci_low = quantile(&values, 0.025).min(point.c_squared);
    let ci_high = quantile(&values, 0.975).max(point.c_squared);
    Ok(SampledEstimate {
        c_squared: point.c_squared,
        method: Method::Sampled,
        numerator: point.numerator,
        denominator: point.denominator,
        uncertainty: Some(std_error),
        std_error,
        ci_low,
        ci_high,
        shots: rec.shots,
        resamples,
        seed: rec.seed,
    })
}

/// Number of `replications` whose interval contains `exact`. Replication
/// `r` samples with seed `base_seed + r`.
pub fn coverage_study(
    pn: &PhotonDistribution,
    exact: f64,
    shots: u64,
    replications: usize,
    resamples: usize,
    base_seed: u64,
) -> Result<usize> {
    let mut hits = 0;
    for r in 0..replications as u64 {
        let rec = sample_counts(pn, shots, base_seed + r)?;
        if estimate_qcs(&rec, resamples)?.contains(exact) {
            hits += 1;
        }
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thermal_pn(q: f64, len: usize) -> PhotonDistribution {
        PhotonDistribution::new((0..len).map(|n| (1.0 - q) * q.powi(n as i32)).collect()).unwrap()
    }

    #[test]
    fn vacuum_counts() {
        let pn = PhotonDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        let rec = sample_counts(&pn, 12345, 9).unwrap();
        assert_eq!(rec.counts, vec![12345, 0, 0]);
        let est = estimate_qcs(&rec, 200).unwrap();
        assert_eq!(est.c_squared, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!((est.ci_low, est.ci_high), (1.0, 1.0));
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let pn = thermal_pn(0.5, 40);
        let a = sample_counts(&pn, 10_000, 7).unwrap();
        let b = sample_counts(&pn, 10_000, 7).unwrap();
        let c = sample_counts(&pn, 10_000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.counts.iter().sum::<u64>(), 10_000);
        let ea = estimate_qcs(&a, 300).unwrap();
        let eb = estimate_qcs(&b, 300).unwrap();
        assert_eq!(ea, eb);
        assert_eq!(ea.ci_low.to_bits(), eb.ci_low.to_bits());
    }

    #[test]
    fn empirical_frequency_within_three_sigma() {
        let pn = thermal_pn(0.5, 60);
        let shots = 1_000_000u64;
        let rec = sample_counts(&pn, shots, 2024).unwrap();
        let p0 = rec.counts[0] as f64 / shots as f64;
        let sigma = (0.5f64 * 0.5 / shots as f64).sqrt();
        assert!((p0 - 0.5).abs() < 3.0 * sigma, "{p0}");
    }

    #[test]
    fn plug_in_on_exact_distribution_is_the_two_copy_value() {
        let pn = thermal_pn(0.85, 200);
        let a = plug_in(&pn).unwrap();
        let b = qcs_two_copy(&pn).unwrap();
        assert_eq!(a.c_squared.to_bits(), b.c_squared.to_bits());
        assert_eq!(a.method, Method::Sampled);
    }

    #[test]
    fn rejects_bad_inputs() {
        let pn = thermal_pn(0.5, 10);
        assert!(sample_counts(&pn, 0, 1).is_err());
        let rec = sample_counts(&pn, 50, 1).unwrap();
        assert!(estimate_qcs(&rec, 100).is_err());
        let mut broken = sample_counts(&pn, 500, 1).unwrap();
        broken.shots += 1;
        assert!(estimate_qcs(&broken, 100).is_err());
    }

    #[test]
    fn unstable_denominator_is_reported() {
        // nearly flat distribution: purity estimate straddles zero
        let pn = PhotonDistribution::new(vec![0.5, 0.5]).unwrap();
        let rec = ShotRecord::new(3, vec![5_001, 4_999]);
        assert!(estimate_qcs(&rec, 200).is_err());
        let rec = sample_counts(&pn, 10_000, 3).unwrap();
        assert!(estimate_qcs(&rec, 200).is_err());
    }

    #[test]
    fn json_shapes() {
        let rec = ShotRecord::new(5, vec![3, 0, 97]);
        let v: serde_json::Value = serde_json::to_value(&rec).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["shots"], 100);
        let est = estimate_qcs(&rec, 50).unwrap();
        let v: serde_json::Value = serde_json::to_value(&est).unwrap();
        assert_eq!(v["method"], "sampled");
        assert!(v["ci_low"].is_number() && v["ci_high"].is_number());
    }
}
