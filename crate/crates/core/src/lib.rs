//! Numerical laboratory for the quadrature coherence scale (QCS).
//!
//! The QCS of a single-mode state is
//! `C² = -Tr([ρ,x]² + [ρ,p]²) / (2 Tr ρ²)`. It is obtained here along
//! several independent routes that are expected to agree:
//!
//! * directly from commutators in truncated Fock space ([`qcs::qcs_direct`]),
//! * from the photon statistics of the difference port when two copies of
//!   the state meet on a balanced beam splitter ([`interferometer`],
//!   [`qcs::qcs_two_copy`]),
//! * from the Wigner function ([`phase_space`]),
//! * from the covariance matrix of Gaussian states ([`qcs::gaussian`]),
//! * from finite-shot samples of the interferometer ([`sampling`]).

pub mod distribution;
pub mod error;
pub mod fock;
pub mod hom;
pub mod interferometer;
pub mod phase_space;
pub mod qcs;
pub mod sampling;
mod linalg;
pub mod scalar;
pub mod states;

pub use distribution::PhotonDistribution;
pub use error::{QcsError, Result};
pub use fock::{ComplexOperator, DensityOperator, FockCutoff, StateVector};
pub use hom::HomAmplitudeTable;
pub use qcs::{Method, QcsEstimate, QuasiProbability};
pub use scalar::{HomScalar, Scalar};
pub use states::{ClassicalMixture, CovarianceMatrix, StateKind, StateSpec};

pub use num_complex::Complex64;
pub use num_rational::BigRational;

pub type PhotonDistributionF64 = PhotonDistribution<f64>;
pub type PhotonDistributionF32 = PhotonDistribution<f32>;
pub type PhotonDistributionExact = PhotonDistribution<BigRational>;
