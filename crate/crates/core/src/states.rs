//! Benchmark state families, classical (coherent-mixture) states, and the
//! Gaussian covariance parametrization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QcsError, Result};
use crate::fock::{
    annihilation, ComplexOperator, DensityOperator, FockCutoff, StateVector, DEFAULT_DEFICIT_TOL,
};
use crate::linalg::{self, CMatrix};

pub const STATE_SPEC_SCHEMA: u32 = 1;

/// Largest cutoff the automatic cutoff search will try.
pub const MAX_AUTO_CUTOFF: usize = 600;

/// Complex amplitude that reads as a bare number, `[re, im]`, or
/// `{"re": .., "im": ..}`, and always writes `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Amplitude(pub Complex64);

impl Amplitude {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }
}

impl From<Complex64> for Amplitude {
    fn from(z: Complex64) -> Self {
        Self(z)
    }
}

impl Serialize for Amplitude {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Amplitude {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Pair([f64; 2]),
            Named { re: f64, #[serde(default)] im: f64 },
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Real(re) => Amplitude::new(re, 0.0),
            Repr::Pair([re, im]) => Amplitude::new(re, im),
            Repr::Named { re, im } => Amplitude::new(re, im),
        })
    }
}

/// Declarative description of a benchmark state: the CLI's input record.
///
/// JSON form: `{"schema": 1, "kind": "...", "params": {...}, "cutoff": N}`.
/// `cutoff` may be omitted, in which case a per-family default is searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(flatten)]
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

fn default_schema() -> u32 {
    STATE_SPEC_SCHEMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum StateKind {
    Coherent {
        alpha: Amplitude,
    },
    Fock {
        n: usize,
    },
    /// Exactly one of `q` and `mean_n` (related by `q = n/(1+n)`).
    Thermal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_n: Option<f64>,
    },
    SqueezedVacuum {
        r: f64,
    },
    #[serde(rename = "rho_2M")]
    Rho2M {
        #[serde(rename = "M")]
        m: usize,
    },
    #[serde(rename = "rho_even_M")]
    RhoEvenM {
        #[serde(rename = "M")]
        m: usize,
    },
    Mixture {
        weights: Vec<f64>,
        alphas: Vec<Amplitude>,
    },
    /// `D(alpha)|n>`.
    Displaced {
        alpha: Amplitude,
        #[serde(default)]
        n: usize,
    },
    /// Displaced, rotated, squeezed thermal state.
    Gaussian {
        #[serde(default)]
        mean_n: f64,
        #[serde(default)]
        r: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        alpha: Amplitude,
    },
}

impl StateSpec {
    pub fn new(kind: StateKind) -> Self {
        Self {
            schema: STATE_SPEC_SCHEMA,
            kind,
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: StateSpec = serde_json::from_str(text)
            .map_err(|e| QcsError::InvalidParameter(format!("state spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != STATE_SPEC_SCHEMA {
            return Err(QcsError::InvalidParameter(format!(
                "unsupported state spec schema {}",
                self.schema
            )));
        }
        if let Some(c) = self.cutoff {
            FockCutoff::new(c)?;
        }
        match &self.kind {
            StateKind::Thermal { .. } => {
                self.kind.thermal_q()?;
            }
            StateKind::Rho2M { m } | StateKind::RhoEvenM { m } if *m < 1 => {
                return Err(QcsError::InvalidParameter("M must be at least 1".into()));
            }
            StateKind::Mixture { weights, alphas } => {
                let amps: Vec<Complex64> = alphas.iter().map(|a| a.0).collect();
                ClassicalMixture::new(weights.clone(), amps)?;
            }
            StateKind::Gaussian { mean_n, .. } if *mean_n < 0.0 => {
                return Err(QcsError::InvalidParameter("mean_n must be non-negative".into()));
            }
            StateKind::SqueezedVacuum { r } | StateKind::Gaussian { r, .. } if !r.is_finite() => {
                return Err(QcsError::InvalidParameter("r must be finite".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Mean photon number of the (untruncated) state.
    pub fn mean_photon_number(&self) -> Result<f64> {
        self.kind.mean_photon_number()
    }

    /// Builds the density operator, at `cutoff` if given, otherwise at the
    /// smallest default cutoff whose deficit meets `deficit_tol`.
    pub fn build(&self, deficit_tol: f64) -> Result<DensityOperator> {
        self.validate()?;
        match self.cutoff {
            Some(dim) => self
                .kind
                .build_at(FockCutoff::new(dim)?.with_deficit_tol(deficit_tol)),
            None => {
                let mut dim = self.kind.default_cutoff(deficit_tol)?;
                loop {
                    let cutoff = FockCutoff::new(dim)?.with_deficit_tol(deficit_tol);
                    match self.kind.build_at(cutoff) {
                        Err(QcsError::CutoffTooSmall { .. }) if dim < MAX_AUTO_CUTOFF => {
                            dim = (dim + dim / 4 + 1).min(MAX_AUTO_CUTOFF);
                        }
                        other => return other,
                    }
                }
            }
        }
    }

    /// Builds with [`DEFAULT_DEFICIT_TOL`].
    pub fn build_default(&self) -> Result<DensityOperator> {
        self.build(DEFAULT_DEFICIT_TOL)
    }

    /// Pure-state ket when the family is pure.
    pub fn build_ket(&self, deficit_tol: f64) -> Result<Option<StateVector>> {
        let rho = self.build(deficit_tol)?;
        let cutoff = FockCutoff::new(rho.dim())?.with_deficit_tol(deficit_tol);
        Ok(match &self.kind {
            StateKind::Coherent { alpha } => Some(coherent_ket(alpha.0, cutoff)?),
            StateKind::Fock { n } => Some(fock_ket(*n, cutoff)?),
            StateKind::SqueezedVacuum { r } => Some(squeezed_ket(*r, cutoff)?),
            _ => None,
        })
    }
}

impl StateKind {
    fn thermal_q(&self) -> Result<f64> {
        match self {
            StateKind::Thermal { q, mean_n } => match (q, mean_n) {
                (Some(q), None) => {
                    if !(0.0..1.0).contains(q) {
                        return Err(QcsError::InvalidParameter(format!(
                            "thermal q must lie in [0, 1), got {q}"
                        )));
                    }
                    Ok(*q)
                }
                (None, Some(n)) => {
                    if !(*n >= 0.0 && n.is_finite()) {
                        return Err(QcsError::InvalidParameter(format!(
                            "thermal mean_n must be non-negative, got {n}"
                        )));
                    }
                    Ok(thermal_q_from_mean(*n))
                }
                _ => Err(QcsError::InvalidParameter(
                    "thermal state needs exactly one of q and mean_n".into(),
                )),
            },
            _ => Err(QcsError::InvalidParameter("not a thermal state".into())),
        }
    }

    pub fn mean_photon_number(&self) -> Result<f64> {
        Ok(match self {
            StateKind::Coherent { alpha } => alpha.0.norm_sqr(),
            StateKind::Fock { n } => *n as f64,
            StateKind::Thermal { .. } => {
                let q = self.thermal_q()?;
                q / (1.0 - q)
            }
            StateKind::SqueezedVacuum { r } => r.sinh().powi(2),
            StateKind::Rho2M { m } => (2 * m + 1) as f64 / 2.0,
            StateKind::RhoEvenM { m } => (m + 1) as f64,
            StateKind::Mixture { weights, alphas } => weights
                .iter()
                .zip(alphas)
                .map(|(w, a)| w * a.0.norm_sqr())
                .sum(),
            StateKind::Displaced { alpha, n } => *n as f64 + alpha.0.norm_sqr(),
            StateKind::Gaussian {
                mean_n, r, alpha, ..
            } => (2.0 * mean_n + 1.0) * (2.0 * r).cosh() / 2.0 - 0.5 + alpha.0.norm_sqr(),
        })
    }

    /// Per-family starting cutoff: `ceil(4(<n> + 3))` for coherent-like and
    /// thermal families, `2 max_n + 4` for Fock mixtures, raised to the
    /// closed-form tail bound where one exists.
    pub fn default_cutoff(&self, deficit_tol: f64) -> Result<usize> {
        let tol = deficit_tol.max(1e-300);
        let energy_rule = |n: f64| (4.0 * (n + 3.0)).ceil() as usize;
        Ok(match self {
            StateKind::Coherent { alpha } => {
                energy_rule(alpha.0.norm_sqr()).max(poisson_tail_cutoff(alpha.0.norm_sqr(), tol))
            }
            StateKind::Fock { n } => 2 * n + 4,
            StateKind::Rho2M { m } | StateKind::RhoEvenM { m } => 2 * (2 * m) + 4,
            StateKind::Thermal { .. } => {
                let q = self.thermal_q()?;
                let tail = if q == 0.0 {
                    2
                } else {
                    (tol.ln() / q.ln()).ceil() as usize + 1
                };
                energy_rule(q / (1.0 - q)).max(tail)
            }
            StateKind::SqueezedVacuum { r } => {
                let t2 = r.tanh().powi(2);
                let tail = if t2 == 0.0 {
                    2
                } else {
                    // even-level weights decay at least like tanh²ʳ per step of 2
                    2 * ((tol.ln() / t2.ln()).ceil() as usize) + 8
                };
                energy_rule(r.sinh().powi(2)).max(tail)
            }
            StateKind::Mixture { alphas, .. } => alphas
                .iter()
                .map(|a| energy_rule(a.0.norm_sqr()).max(poisson_tail_cutoff(a.0.norm_sqr(), tol)))
                .max()
                .unwrap_or(8),
            StateKind::Displaced { alpha, n } => {
                let reach = ((*n as f64).sqrt() + alpha.0.norm()).powi(2);
                energy_rule(reach).max(poisson_tail_cutoff(reach, tol) + n)
            }
            StateKind::Gaussian { .. } => energy_rule(self.mean_photon_number()?),
        }
        .max(2))
    }

    /// Builds the state on exactly this cutoff.
    pub fn build_at(&self, cutoff: FockCutoff) -> Result<DensityOperator> {
        match self {
            StateKind::Coherent { alpha } => coherent(alpha.0, cutoff),
            StateKind::Fock { n } => fock(*n, cutoff),
            StateKind::Thermal { .. } => thermal(self.thermal_q()?, cutoff),
            StateKind::SqueezedVacuum { r } => squeezed_vacuum(*r, cutoff),
            StateKind::Rho2M { m } => rho_2m(*m, cutoff),
            StateKind::RhoEvenM { m } => rho_even_m(*m, cutoff),
            StateKind::Mixture { weights, alphas } => {
                let mix = ClassicalMixture::new(
                    weights.clone(),
                    alphas.iter().map(|a| a.0).collect(),
                )?;
                classical_mixture(&mix, cutoff)
            }
            StateKind::Displaced { alpha, n } => {
                let base = fock(*n, cutoff)?;
                displace(&base, alpha.0)
            }
            StateKind::Gaussian {
                mean_n,
                r,
                phi,
                alpha,
            } => gaussian_state(*mean_n, *r, *phi, alpha.0, cutoff),
        }
    }
}

/// `q = n / (1 + n)`.
pub fn thermal_q_from_mean(mean_n: f64) -> f64 {
    mean_n / (1.0 + mean_n)
}

fn poisson_tail_cutoff(mean: f64, tol: f64) -> usize {
    let mut p = (-mean).exp();
    let mut cum = p;
    let mut n = 0usize;
    while 1.0 - cum > tol && n < MAX_AUTO_CUTOFF {
        n += 1;
        p *= mean / n as f64;
        cum += p;
    }
    n + 2
}

/// Mixture of coherent states `Σ w_i |α_i><α_i|` (non-negative P function).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMixture {
    weights: Vec<f64>,
    amplitudes: Vec<Amplitude>,
}

impl ClassicalMixture {
    pub fn new(weights: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != amplitudes.len() {
            return Err(QcsError::InvalidParameter(format!(
                "mixture needs matching non-empty weights ({}) and amplitudes ({})",
                weights.len(),
                amplitudes.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(QcsError::InvalidParameter("negative mixture weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(QcsError::InvalidParameter(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(Self {
            weights,
            amplitudes: amplitudes.into_iter().map(Amplitude).collect(),
        })
    }

    pub fn single(alpha: Complex64) -> Self {
        Self {
            weights: vec![1.0],
            amplitudes: vec![Amplitude(alpha)],
        }
    }

    /// Seeded random mixture: amplitudes uniform in the disk `|α| <= radius`,
    /// weights uniform on the simplex (normalized exponentials).
    pub fn random(terms: usize, radius: f64, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let terms = terms.max(1);
        let raw: Vec<f64> = (0..terms).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        let amplitudes = (0..terms)
            .map(|_| {
                let u: f64 = rng.random();
                let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                Amplitude(Complex64::from_polar(radius * u.sqrt(), theta))
            })
            .collect();
        Self {
            weights: raw.iter().map(|w| w / total).collect(),
            amplitudes,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.amplitudes.iter().map(|a| a.0).collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn to_spec(&self) -> StateSpec {
        StateSpec::new(StateKind::Mixture {
            weights: self.weights.clone(),
            alphas: self.amplitudes.clone(),
        })
    }
}

/// Coherent-state ket `e^{-|α|²/2} α^n / √n!`.
pub fn coherent_ket(alpha: Complex64, cutoff: FockCutoff) -> Result<StateVector> {
    let d = cutoff.dim();
    let mut amps = DVector::<Complex64>::zeros(d);
    let mut term = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps[0] = term;
    for n in 1..d {
        term = term * alpha / (n as f64).sqrt();
        amps[n] = term;
    }
    StateVector::new(amps, cutoff.deficit_tol())
}

pub fn coherent(alpha: Complex64, cutoff: FockCutoff) -> Result<DensityOperator> {
    Ok(coherent_ket(alpha, cutoff)?.to_density())
}

pub fn fock_ket(n: usize, cutoff: FockCutoff) -> Result<StateVector> {
    let d = cutoff.dim();
    if n >= d {
        return Err(QcsError::CutoffTooSmall {
            dim: d,
            deficit: 1.0,
            tol: cutoff.deficit_tol(),
        });
    }
    let mut amps = DVector::<Complex64>::zeros(d);
    amps[n] = Complex64::new(1.0, 0.0);
    StateVector::new(amps, cutoff.deficit_tol())
}

/// Seeded random pure state on levels `0..support` (complex Gaussian
/// amplitudes, normalized), zero-padded to the cutoff.
pub fn random_pure_ket(support: usize, cutoff: FockCutoff, seed: u64) -> Result<StateVector> {
    let d = cutoff.dim();
    if support == 0 || support > d {
        return Err(QcsError::InvalidParameter(format!(
            "support {support} must lie in 1..={d}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut amps = DVector::from_element(d, Complex64::new(0.0, 0.0));
    for a in amps.iter_mut().take(support) {
        *a = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
    }
    let norm = amps.norm();
    StateVector::new(amps / Complex64::new(norm, 0.0), cutoff.deficit_tol())
}

pub fn fock(n: usize, cutoff: FockCutoff) -> Result<DensityOperator> {
    Ok(fock_ket(n, cutoff)?.to_density())
}

/// Thermal state with weights `(1-q) q^n`.
pub fn thermal(q: f64, cutoff: FockCutoff) -> Result<DensityOperator> {
    if !(0.0..1.0).contains(&q) {
        return Err(QcsError::InvalidParameter(format!(
            "thermal q must lie in [0, 1), got {q}"
        )));
    }
    let weights: Vec<f64> = (0..cutoff.dim())
        .map(|n| (1.0 - q) * q.powi(n as i32))
        .collect();
    DensityOperator::diagonal(&weights, cutoff.deficit_tol())
}

/// Thermal state parametrized by its mean photon number.
pub fn thermal_mean(mean_n: f64, cutoff: FockCutoff) -> Result<DensityOperator> {
    if !(mean_n >= 0.0 && mean_n.is_finite()) {
        return Err(QcsError::InvalidParameter(format!(
            "mean photon number must be non-negative, got {mean_n}"
        )));
    }
    thermal(thermal_q_from_mean(mean_n), cutoff)
}

/// Squeezed vacuum with `Var(x) = e^{2r}/2`, `Var(p) = e^{-2r}/2`:
/// amplitudes `(tanh r)^k √(2k)! / (2^k k!) / √cosh r` on `|2k>`.
pub fn squeezed_ket(r: f64, cutoff: FockCutoff) -> Result<StateVector> {
    let d = cutoff.dim();
    let t = r.tanh();
    let mut amps = DVector::<Complex64>::zeros(d);
    let mut amp = 1.0 / r.cosh().sqrt();
    let mut k = 0usize;
    while 2 * k < d {
        amps[2 * k] = Complex64::new(amp, 0.0);
        amp *= t * (((2 * k + 1) * (2 * k + 2)) as f64).sqrt() / (2 * (k + 1)) as f64;
        k += 1;
    }
    StateVector::new(amps, cutoff.deficit_tol())
}

pub fn squeezed_vacuum(r: f64, cutoff: FockCutoff) -> Result<DensityOperator> {
    Ok(squeezed_ket(r, cutoff)?.to_density())
}

/// `(1/2M) Σ_{n=1}^{2M} |n><n|`.
pub fn rho_2m(m: usize, cutoff: FockCutoff) -> Result<DensityOperator> {
    fock_mixture((1..=2 * m).collect(), cutoff)
}

/// `(1/M) Σ_{n=1}^{M} |2n><2n|`.
pub fn rho_even_m(m: usize, cutoff: FockCutoff) -> Result<DensityOperator> {
    fock_mixture((1..=m).map(|n| 2 * n).collect(), cutoff)
}

fn fock_mixture(levels: Vec<usize>, cutoff: FockCutoff) -> Result<DensityOperator> {
    if levels.is_empty() {
        return Err(QcsError::InvalidParameter("M must be at least 1".into()));
    }
    let d = cutoff.dim();
    let top = *levels.iter().max().expect("non-empty");
    if top >= d {
        return Err(QcsError::CutoffTooSmall {
            dim: d,
            deficit: 1.0 - levels.iter().filter(|&&n| n < d).count() as f64 / levels.len() as f64,
            tol: cutoff.deficit_tol(),
        });
    }
    let mut weights = vec![0.0; d];
    let w = 1.0 / levels.len() as f64;
    for n in levels {
        weights[n] = w;
    }
    DensityOperator::diagonal(&weights, cutoff.deficit_tol())
}

/// `Σ w_i |α_i><α_i|`, normalized by the (pairwise-summed) weight total so
/// that all-vacuum mixtures give the vacuum projector exactly.
pub fn classical_mixture(mix: &ClassicalMixture, cutoff: FockCutoff) -> Result<DensityOperator> {
    let d = cutoff.dim();
    let mut m = CMatrix::zeros(d, d);
    for (w, a) in mix.weights.iter().zip(&mix.amplitudes) {
        let ket = coherent_ket(a.0, cutoff.with_deficit_tol(1.0))?;
        let v = ket.amplitudes();
        m += (v * v.adjoint()).scale(*w);
    }
    let total = crate::scalar::pairwise_sum(&mix.weights);
    m.unscale_mut(total);
    DensityOperator::new(ComplexOperator::new(m, vec![d])?, cutoff.deficit_tol())
}

fn extended_dim(d: usize) -> usize {
    2 * d + 16
}

/// Conjugates a single-mode state by `exp(i h)` computed on an enlarged
/// space, then truncates back; mass pushed past the cutoff becomes deficit.
fn conjugate_extended(
    rho: &DensityOperator,
    generator: impl Fn(&CMatrix) -> CMatrix,
) -> Result<DensityOperator> {
    rho.require_single_mode()?;
    let d = rho.dim();
    let ext = extended_dim(d);
    let big = rho.embed(&[ext])?;
    let a = annihilation(FockCutoff::new(ext)?).into_matrix();
    let h = generator(&a);
    let u = linalg::exp_i_hermitian(&h, 1.0);
    let out = &u * big.matrix() * u.adjoint();
    let out = ComplexOperator::new(out, vec![ext])?.truncate(&[d])?;
    let result = DensityOperator::from_trusted(out.into_matrix(), vec![d], rho.deficit_tol());
    result.require_deficit()?;
    Ok(result)
}

/// `D(β) ρ D(β)†` with `D(β) = exp(β a† - β* a)`.
///
/// Accurate while the displaced state fits the cutoff; keep `|β|² <= dim/4`.
pub fn displace(rho: &DensityOperator, beta: Complex64) -> Result<DensityOperator> {
    conjugate_extended(rho, |a| {
        // β a† - β* a = i h  =>  h = -i (β a† - β* a)
        let g = a.adjoint() * beta - a * beta.conj();
        g * Complex64::new(0.0, -1.0)
    })
}

/// `S ρ S†` with `S = exp(r/2 (a†² - a²))`, stretching `x` by `e^r`.
pub fn squeeze(rho: &DensityOperator, r: f64) -> Result<DensityOperator> {
    conjugate_extended(rho, |a| {
        let ad = a.adjoint();
        let g = (&ad * &ad - a * a).scale(r / 2.0);
        g * Complex64::new(0.0, -1.0)
    })
}

/// Phase rotation `e^{iθn} ρ e^{-iθn}`: entries pick up `e^{iθ(m-n)}`.
pub fn rotate(rho: &DensityOperator, theta: f64) -> Result<DensityOperator> {
    rho.require_single_mode()?;
    let d = rho.dim();
    let m = CMatrix::from_fn(d, d, |i, j| {
        rho.matrix()[(i, j)] * Complex64::from_polar(1.0, theta * (i as f64 - j as f64))
    });
    Ok(DensityOperator::from_trusted(m, vec![d], rho.deficit_tol()))
}

/// Thermal → squeeze(r) → rotate(φ) → displace(α).
pub fn gaussian_state(
    mean_n: f64,
    r: f64,
    phi: f64,
    alpha: Complex64,
    cutoff: FockCutoff,
) -> Result<DensityOperator> {
    let q = thermal_q_from_mean(mean_n);
    // the seed thermal state is built without a deficit check; the squeeze
    // and displacement below account for everything beyond the cutoff
    let weights: Vec<f64> = (0..cutoff.dim())
        .map(|n| (1.0 - q) * q.powi(n as i32))
        .collect();
    let base = DensityOperator::diagonal(&weights, 1.0)?.with_deficit_tol(1.0);
    let mut rho = if r != 0.0 { squeeze(&base, r)? } else { base };
    if phi != 0.0 {
        rho = rotate(&rho, phi)?;
    }
    if alpha != Complex64::new(0.0, 0.0) {
        rho = displace(&rho, alpha)?;
    }
    let rho = rho.with_deficit_tol(cutoff.deficit_tol());
    rho.require_deficit()?;
    Ok(rho)
}

/// Covariance matrix and mean of an `N`-mode Gaussian state, ordered
/// `(x_1, p_1, ..., x_N, p_N)`; the vacuum is `I/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    gamma: DMatrix<f64>,
    mean: DVector<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry and the uncertainty relation `γ + iΩ/2 ⪰ 0`.
    pub fn new(gamma: DMatrix<f64>, mean: DVector<f64>) -> Result<Self> {
        let n2 = gamma.nrows();
        if n2 == 0 || !n2.is_multiple_of(2) || gamma.ncols() != n2 || mean.len() != n2 {
            return Err(QcsError::DimensionMismatch(format!(
                "covariance {}x{} with mean of length {}",
                gamma.nrows(),
                gamma.ncols(),
                mean.len()
            )));
        }
        if (&gamma - gamma.transpose()).abs().max() > 1e-12 {
            return Err(QcsError::InvalidParameter("covariance matrix not symmetric".into()));
        }
        let mut h = gamma.map(|g| Complex64::new(g, 0.0));
        for k in 0..n2 / 2 {
            h[(2 * k, 2 * k + 1)] += Complex64::new(0.0, 0.5);
            h[(2 * k + 1, 2 * k)] -= Complex64::new(0.0, 0.5);
        }
        let min = SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(QcsError::InvalidParameter(format!(
                "covariance violates the uncertainty relation (eigenvalue {min:.3e})"
            )));
        }
        Ok(Self { gamma, mean })
    }

    pub fn vacuum(modes: usize) -> Self {
        let n2 = 2 * modes.max(1);
        Self {
            gamma: DMatrix::identity(n2, n2) * 0.5,
            mean: DVector::zeros(n2),
        }
    }

    /// Single-mode displaced, rotated, squeezed thermal state, matching
    /// [`gaussian_state`].
    pub fn single_mode(mean_n: f64, r: f64, phi: f64, alpha: Complex64) -> Result<Self> {
        let nu = 2.0 * mean_n + 1.0;
        let base = DMatrix::from_diagonal(&DVector::from_vec(vec![
            nu * (2.0 * r).exp() / 2.0,
            nu * (-2.0 * r).exp() / 2.0,
        ]));
        let (s, c) = phi.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let gamma = &rot * base * rot.transpose();
        let gamma = (&gamma + gamma.transpose()) * 0.5;
        let mean = DVector::from_vec(vec![
            std::f64::consts::SQRT_2 * alpha.re,
            std::f64::consts::SQRT_2 * alpha.im,
        ]);
        Self::new(gamma, mean)
    }

    /// Block-diagonal product of independent modes.
    pub fn direct_sum(parts: &[CovarianceMatrix]) -> Self {
        let n2: usize = parts.iter().map(|p| p.gamma.nrows()).sum();
        let mut gamma = DMatrix::zeros(n2, n2);
        let mut mean = DVector::zeros(n2);
        let mut off = 0;
        for p in parts {
            let k = p.gamma.nrows();
            gamma.view_mut((off, off), (k, k)).copy_from(&p.gamma);
            mean.rows_mut(off, k).copy_from(&p.mean);
            off += k;
        }
        Self { gamma, mean }
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn modes(&self) -> usize {
        self.gamma.nrows() / 2
    }
}

/// Covariance matrix of a Gaussian benchmark state.
pub fn gaussian_covariance(spec: &StateSpec) -> Result<CovarianceMatrix> {
    match &spec.kind {
        StateKind::Coherent { alpha } => CovarianceMatrix::single_mode(0.0, 0.0, 0.0, alpha.0),
        StateKind::Thermal { .. } => {
            CovarianceMatrix::single_mode(spec.kind.mean_photon_number()?, 0.0, 0.0, Complex64::new(0.0, 0.0))
        }
        StateKind::SqueezedVacuum { r } => {
            CovarianceMatrix::single_mode(0.0, *r, 0.0, Complex64::new(0.0, 0.0))
        }
        StateKind::Gaussian {
            mean_n,
            r,
            phi,
            alpha,
        } => CovarianceMatrix::single_mode(*mean_n, *r, *phi, alpha.0),
        StateKind::Fock { n: 0 } => Ok(CovarianceMatrix::vacuum(1)),
        StateKind::Displaced { alpha, n: 0 } => CovarianceMatrix::single_mode(0.0, 0.0, 0.0, alpha.0),
        other => Err(QcsError::NotApplicable(format!(
            "{} is not a Gaussian state",
            kind_name(other)
        ))),
    }
}

pub fn kind_name(kind: &StateKind) -> &'static str {
    match kind {
        StateKind::Coherent { .. } => "coherent",
        StateKind::Fock { .. } => "fock",
        StateKind::Thermal { .. } => "thermal",
        StateKind::SqueezedVacuum { .. } => "squeezed_vacuum",
        StateKind::Rho2M { .. } => "rho_2M",
        StateKind::RhoEvenM { .. } => "rho_even_M",
        StateKind::Mixture { .. } => "mixture",
        StateKind::Displaced { .. } => "displaced",
        StateKind::Gaussian { .. } => "gaussian",
    }
}

/// First and second moments `(mean, γ)` of a single-mode state, computed
/// in Fock space (the state is padded by one level so `x²` is exact).
pub fn moments(rho: &DensityOperator) -> Result<CovarianceMatrix> {
    rho.require_single_mode()?;
    let d = rho.dim() + 1;
    let big = rho.embed(&[d])?;
    let (x, p) = crate::fock::quadratures(FockCutoff::new(d)?);
    let m = big.matrix();
    let ev = |op: &CMatrix| linalg::trace_of_product(m, op).re;
    let (xm, pm) = (x.matrix(), p.matrix());
    let mx = ev(xm);
    let mp = ev(pm);
    let xx = ev(&(xm * xm)) - mx * mx;
    let pp = ev(&(pm * pm)) - mp * mp;
    let xp = 0.5 * ev(&(xm * pm + pm * xm)) - mx * mp;
    Ok(CovarianceMatrix {
        gamma: DMatrix::from_row_slice(2, 2, &[xx, xp, xp, pp]),
        mean: DVector::from_vec(vec![mx, mp]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::purity_direct;
    use approx::assert_abs_diff_eq;

    fn cut(d: usize) -> FockCutoff {
        FockCutoff::new(d).unwrap()
    }

    #[test]
    fn vacuum_from_zero_amplitude() {
        let v = coherent(Complex64::new(0.0, 0.0), cut(5)).unwrap();
        assert_eq!(v.matrix()[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(v.trace_deficit(), 0.0);
    }

    #[test]
    fn coherent_is_poissonian() {
        let alpha = Complex64::new(0.9, -0.6);
        let rho = coherent(alpha, cut(30)).unwrap();
        let mu = alpha.norm_sqr();
        let mut fact = 1.0;
        for (n, p) in rho.populations().iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-mu).exp() * mu.powi(n as i32) / fact;
            assert_abs_diff_eq!(*p, expected, epsilon = 1e-15);
        }
        let mean: f64 = rho.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert_abs_diff_eq!(mean, mu, epsilon = 1e-6);
    }

    #[test]
    fn coherent_cutoff_too_small() {
        let err = coherent(Complex64::new(3.0, 0.0), cut(6)).unwrap_err();
        assert!(matches!(err, QcsError::CutoffTooSmall { .. }));
    }

    #[test]
    fn thermal_closed_form() {
        let q = 0.85;
        let rho = thermal(q, cut(120)).unwrap();
        for (n, p) in rho.populations().iter().enumerate() {
            assert_eq!(*p, (1.0 - q) * q.powi(n as i32));
        }
        let mean: f64 = rho.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert_abs_diff_eq!(mean, 0.85 / 0.15, epsilon = 1e-6);
        assert_abs_diff_eq!(purity_direct(&rho), (1.0 - q) / (1.0 + q), epsilon = 1e-12);
        assert!(thermal(1.0, cut(4)).is_err());
        assert!(thermal(q, cut(20)).is_err());
        let v = thermal(0.0, cut(3)).unwrap();
        assert_eq!(v.populations(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn thermal_mean_parametrization() {
        let a = thermal_mean(5.0, cut(200)).unwrap();
        let b = thermal(5.0 / 6.0, cut(200)).unwrap();
        assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-15);
    }

    #[test]
    fn squeezed_vacuum_structure() {
        let r = 0.6;
        let rho = squeezed_vacuum(r, cut(40)).unwrap();
        for (n, p) in rho.populations().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(*p, 0.0);
            }
        }
        let mean: f64 = rho.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert_abs_diff_eq!(mean, r.sinh().powi(2), epsilon = 1e-9);
        let v = squeezed_vacuum(0.0, cut(4)).unwrap();
        assert_eq!(v.populations(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn squeeze_operator_reproduces_the_ket() {
        let r = 0.4;
        let vac = fock(0, cut(40)).unwrap();
        let a = squeeze(&vac, r).unwrap();
        let b = squeezed_vacuum(r, cut(40)).unwrap();
        assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-10);
    }

    #[test]
    fn fock_families() {
        let r10 = rho_2m(5, cut(12)).unwrap();
        assert_abs_diff_eq!(purity_direct(&r10), 0.1, epsilon = 1e-15);
        let re5 = rho_even_m(5, cut(12)).unwrap();
        assert_abs_diff_eq!(purity_direct(&re5), 0.2, epsilon = 1e-15);
        let r2 = rho_2m(1, cut(4)).unwrap();
        assert_eq!(r2.populations(), vec![0.0, 0.5, 0.5, 0.0]);
        assert!(rho_even_m(5, cut(10)).is_err());
        assert!(fock(4, cut(4)).is_err());
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let beta = Complex64::new(0.8, 0.5);
        let a = displace(&fock(0, cut(30)).unwrap(), beta).unwrap();
        let b = coherent(beta, cut(30)).unwrap();
        assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-12);
    }

    #[test]
    fn displacement_preserves_trace_and_purity() {
        let rho = thermal(0.2, cut(24)).unwrap();
        let out = displace(&rho, Complex64::new(0.6, -0.7)).unwrap();
        assert_abs_diff_eq!(out.trace(), rho.trace(), epsilon = 1e-9);
        assert_abs_diff_eq!(purity_direct(&out), purity_direct(&rho), epsilon = 1e-9);
    }

    #[test]
    fn mixtures() {
        let alpha = Complex64::new(0.7, 0.2);
        let single = classical_mixture(&ClassicalMixture::single(alpha), cut(25)).unwrap();
        let coh = coherent(alpha, cut(25)).unwrap();
        assert!(linalg::max_abs_diff(single.matrix(), coh.matrix()) < 1e-15);

        let zeros = ClassicalMixture::new(vec![0.1, 0.2, 0.7], vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        let v = classical_mixture(&zeros, cut(4)).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = Complex64::new(1.0, 0.0);
        assert_eq!(v.matrix(), &expected);

        // ±α: odd populations cancel against even ones in the coherences,
        // the diagonal is the Poissonian and coherences with odd offset vanish
        let a = Complex64::new(1.1, 0.0);
        let cat = ClassicalMixture::new(vec![0.5, 0.5], vec![a, -a]).unwrap();
        let rho = classical_mixture(&cat, cut(30)).unwrap();
        let mu = a.norm_sqr();
        let mut fact = 1.0;
        for n in 0..30 {
            if n > 0 {
                fact *= n as f64;
            }
            assert_abs_diff_eq!(rho.matrix()[(n, n)].re, (-mu).exp() * mu.powi(n as i32) / fact, epsilon = 1e-15);
            if n + 1 < 30 {
                assert!(rho.matrix()[(n, n + 1)].norm() < 1e-15);
            }
        }

        assert!(ClassicalMixture::new(vec![0.5, 0.4], vec![a, a]).is_err());
        assert!(ClassicalMixture::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn random_mixtures_are_seeded_and_bounded() {
        let a = ClassicalMixture::random(5, 2.0, 17);
        let b = ClassicalMixture::random(5, 2.0, 17);
        assert_eq!(a, b);
        assert!(a.amplitudes().iter().all(|z| z.norm() <= 2.0));
        assert_abs_diff_eq!(a.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(ClassicalMixture::new(a.weights().to_vec(), a.amplitudes()).is_ok());
    }

    #[test]
    fn random_pure_kets() {
        let a = random_pure_ket(4, cut(7), 3).unwrap();
        assert_eq!(a, random_pure_ket(4, cut(7), 3).unwrap());
        assert_abs_diff_eq!(a.amplitudes().norm(), 1.0, epsilon = 1e-14);
        assert!(a.amplitudes().iter().skip(4).all(|z| z.norm() == 0.0));
        assert!(random_pure_ket(8, cut(7), 3).is_err());
    }

    #[test]
    fn covariance_conventions() {
        let vac = gaussian_covariance(&StateSpec::new(StateKind::Fock { n: 0 })).unwrap();
        assert_eq!(vac.gamma(), &(DMatrix::identity(2, 2) * 0.5));
        let r = 0.5;
        let sq = gaussian_covariance(&StateSpec::new(StateKind::SqueezedVacuum { r })).unwrap();
        assert_abs_diff_eq!(sq.gamma()[(0, 0)], (2.0 * r).exp() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sq.gamma()[(1, 1)], (-2.0 * r).exp() / 2.0, epsilon = 1e-15);
        let th = gaussian_covariance(&StateSpec::new(StateKind::Thermal { q: None, mean_n: Some(2.0) })).unwrap();
        assert_abs_diff_eq!(th.gamma()[(0, 0)], 2.5, epsilon = 1e-15);
        assert!(gaussian_covariance(&StateSpec::new(StateKind::Fock { n: 1 })).is_err());
        let bad = CovarianceMatrix::new(DMatrix::identity(2, 2) * 0.1, DVector::zeros(2));
        assert!(bad.is_err());
    }

    #[test]
    fn fock_space_moments_match_covariance() {
        let alpha = Complex64::new(0.3, -0.2);
        let (n, r, phi) = (0.3, 0.25, 0.7);
        let rho = gaussian_state(n, r, phi, alpha, cut(60)).unwrap();
        let from_fock = moments(&rho).unwrap();
        let closed = CovarianceMatrix::single_mode(n, r, phi, alpha).unwrap();
        assert!((from_fock.gamma() - closed.gamma()).abs().max() < 1e-8);
        assert!((from_fock.mean() - closed.mean()).abs().max() < 1e-8);
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"schema": 1, "kind": "thermal", "params": {"q": 0.85}, "cutoff": 90}"#;
        let spec = StateSpec::from_json(text).unwrap();
        assert_eq!(spec.kind, StateKind::Thermal { q: Some(0.85), mean_n: None });
        assert_eq!(spec.cutoff, Some(90));
        let again = StateSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);

        let mix = r#"{"kind": "mixture", "params": {"weights": [0.5, 0.5], "alphas": [1.0, [-1.0, 0.0]]}}"#;
        let spec = StateSpec::from_json(mix).unwrap();
        assert_eq!(spec.schema, 1);
        match spec.kind {
            StateKind::Mixture { alphas, .. } => assert_eq!(alphas[1], Amplitude::new(-1.0, 0.0)),
            _ => panic!("wrong kind"),
        }
        let rho = r#"{"kind": "rho_even_M", "params": {"M": 5}}"#;
        assert_eq!(StateSpec::from_json(rho).unwrap().kind, StateKind::RhoEvenM { m: 5 });

        assert!(StateSpec::from_json(r#"{"schema": 2, "kind": "fock", "params": {"n": 1}}"#).is_err());
        assert!(StateSpec::from_json(r#"{"kind": "thermal", "params": {"q": 1.2}}"#).is_err());
        assert!(StateSpec::from_json(r#"{"kind": "thermal", "params": {"q": 0.2, "mean_n": 1}}"#).is_err());
        assert!(StateSpec::from_json(r#"{"kind": "unicorn", "params": {}}"#).is_err());
    }

    #[test]
    fn automatic_cutoff_meets_the_tolerance() {
        let spec = StateSpec::new(StateKind::Thermal { q: Some(0.85), mean_n: None });
        let rho = spec.build(1e-6).unwrap();
        assert!(rho.trace_deficit() <= 1e-6);
        let spec = StateSpec::new(StateKind::Gaussian {
            mean_n: 0.2,
            r: 0.3,
            phi: 0.0,
            alpha: Amplitude::new(0.5, 0.0),
        });
        assert!(spec.build(1e-8).unwrap().trace_deficit() <= 1e-8);
    }
}
