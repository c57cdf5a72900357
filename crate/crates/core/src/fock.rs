//! Truncated Fock-space linear algebra.
//!
//! Multimode operators are stored as dense complex matrices over the tensor
//! product of per-mode Fock spaces. Mode ordering is fixed: in `A ⊗ B` the
//! first factor is the slow index, so basis state `|m, n>` of a two-mode
//! space with cutoffs `(d_a, d_b)` sits at row `m * d_b + n`.
//!
//! Quadrature convention: `x = (a + a†)/√2`, `p = (a - a†)/(i√2)`, so
//! `[x, p] = i`, the vacuum has `<x²> = 1/2`, and `x² + p² = 1 + 2n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QcsError, Result};
use crate::linalg::{self, CMatrix};

/// Deficit tolerance applied when nothing else is configured.
pub const DEFAULT_DEFICIT_TOL: f64 = 1e-6;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
/// Full eigen-based positivity check is skipped above this dimension.
const PSD_CHECK_MAX_DIM: usize = 256;

/// Number of Fock levels kept per mode (levels `0..dim`), together with the
/// trace deficit tolerated when building states on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockCutoff {
    dim: usize,
    deficit_tol: f64,
}

impl FockCutoff {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(QcsError::CutoffTooLow(dim));
        }
        Ok(Self {
            dim,
            deficit_tol: DEFAULT_DEFICIT_TOL,
        })
    }

    pub fn with_deficit_tol(mut self, tol: f64) -> Self {
        self.deficit_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn deficit_tol(&self) -> f64 {
        self.deficit_tol
    }
}

/// Complex matrix acting on a tensor product of truncated Fock spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    entries: CMatrix,
    dims: Vec<usize>,
}

impl ComplexOperator {
    pub fn new(entries: DMatrix<Complex64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || entries.nrows() != total || entries.ncols() != total {
            return Err(QcsError::DimensionMismatch(format!(
                "{}x{} matrix for mode dims {:?}",
                entries.nrows(),
                entries.ncols(),
                dims
            )));
        }
        Ok(Self { entries, dims })
    }

    pub fn identity(dims: &[usize]) -> Self {
        let total = dims.iter().product();
        Self {
            entries: CMatrix::identity(total, total),
            dims: dims.to_vec(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn compose(&self, rhs: &ComplexOperator) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(QcsError::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, rhs.dims
            )));
        }
        Ok(Self {
            entries: &self.entries * &rhs.entries,
            dims: self.dims.clone(),
        })
    }

    pub fn kron(&self, rhs: &ComplexOperator) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&rhs.dims);
        Self {
            entries: self.entries.kronecker(&rhs.entries),
            dims,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Lifts a single-mode operator to act on `mode` of a multimode space.
    pub fn on_mode(single: &ComplexOperator, mode: usize, dims: &[usize]) -> Result<Self> {
        if mode >= dims.len() {
            return Err(QcsError::InvalidMode {
                index: mode,
                modes: dims.len(),
            });
        }
        if single.dims.len() != 1 || single.dims[0] != dims[mode] {
            return Err(QcsError::DimensionMismatch(format!(
                "single-mode operator {:?} on mode {mode} of {:?}",
                single.dims, dims
            )));
        }
        let mut acc: Option<CMatrix> = None;
        for (k, &d) in dims.iter().enumerate() {
            let factor = if k == mode {
                single.entries.clone()
            } else {
                CMatrix::identity(d, d)
            };
            acc = Some(match acc {
                None => factor,
                Some(m) => m.kronecker(&factor),
            });
        }
        Ok(Self {
            entries: acc.expect("at least one mode"),
            dims: dims.to_vec(),
        })
    }

    /// Re-embeds into larger per-mode cutoffs, padding with zeros.
    pub fn embed(&self, new_dims: &[usize]) -> Result<Self> {
        if new_dims.len() != self.dims.len()
            || new_dims.iter().zip(&self.dims).any(|(n, o)| n < o)
        {
            return Err(QcsError::DimensionMismatch(format!(
                "cannot embed {:?} into {:?}",
                self.dims, new_dims
            )));
        }
        let total: usize = new_dims.iter().product();
        let map: Vec<usize> = (0..self.total_dim())
            .map(|i| remap_index(i, &self.dims, new_dims))
            .collect();
        let mut out = CMatrix::zeros(total, total);
        for (i, &ni) in map.iter().enumerate() {
            for (j, &nj) in map.iter().enumerate() {
                out[(ni, nj)] = self.entries[(i, j)];
            }
        }
        Ok(Self {
            entries: out,
            dims: new_dims.to_vec(),
        })
    }

    /// Restriction to smaller per-mode cutoffs (drops the excess levels).
    pub fn truncate(&self, new_dims: &[usize]) -> Result<Self> {
        if new_dims.len() != self.dims.len()
            || new_dims.iter().zip(&self.dims).any(|(n, o)| n > o || *n == 0)
        {
            return Err(QcsError::DimensionMismatch(format!(
                "cannot truncate {:?} to {:?}",
                self.dims, new_dims
            )));
        }
        let total: usize = new_dims.iter().product();
        let map: Vec<usize> = (0..total)
            .map(|i| remap_index(i, new_dims, &self.dims))
            .collect();
        let entries = CMatrix::from_fn(total, total, |i, j| self.entries[(map[i], map[j])]);
        Ok(Self {
            entries,
            dims: new_dims.to_vec(),
        })
    }
}

/// Flat index -> per-mode occupation numbers (slow index first).
pub fn unflatten(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

pub fn flatten(occupations: &[usize], dims: &[usize]) -> usize {
    occupations
        .iter()
        .zip(dims)
        .fold(0, |acc, (&n, &d)| acc * d + n)
}

fn remap_index(i: usize, from: &[usize], to: &[usize]) -> usize {
    flatten(&unflatten(i, from), to)
}

/// A density operator on a truncated Fock space, with the probability mass
/// lost to truncation recorded alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: ComplexOperator,
    trace_deficit: f64,
    deficit_tol: f64,
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and trace, and refuses states whose
    /// trace deficit exceeds `deficit_tol`.
    pub fn new(op: ComplexOperator, deficit_tol: f64) -> Result<Self> {
        let herm = linalg::hermiticity_error(&op.entries);
        if herm > HERMITIAN_TOL {
            return Err(QcsError::InvalidParameter(format!(
                "density operator is not Hermitian (deviation {herm:.3e})"
            )));
        }
        let entries = linalg::hermitize(&op.entries);
        let op = ComplexOperator {
            entries,
            dims: op.dims,
        };
        check_positive(&op.entries)?;
        let trace = op.entries.trace().re;
        if trace > 1.0 + 1e-10 {
            return Err(QcsError::InvalidParameter(format!(
                "trace {trace} exceeds 1"
            )));
        }
        let deficit = (1.0 - trace).max(0.0);
        if deficit > deficit_tol {
            return Err(QcsError::CutoffTooSmall {
                dim: op.dims.iter().copied().max().unwrap_or(0),
                deficit,
                tol: deficit_tol,
            });
        }
        Ok(Self {
            op,
            trace_deficit: deficit,
            deficit_tol,
        })
    }

    /// Internal constructor for results of trusted pipelines: re-symmetrizes
    /// and records the deficit without validating it.
    pub(crate) fn from_trusted(entries: CMatrix, dims: Vec<usize>, deficit_tol: f64) -> Self {
        let entries = linalg::hermitize(&entries);
        let trace = entries.trace().re;
        Self {
            op: ComplexOperator { entries, dims },
            trace_deficit: (1.0 - trace).max(0.0),
            deficit_tol,
        }
    }

    /// `|psi><psi|` for a single-mode ket.
    pub fn from_ket(ket: &StateVector) -> Self {
        let v = &ket.amplitudes;
        let entries = v * v.adjoint();
        Self::from_trusted(entries, vec![v.len()], ket.deficit_tol)
    }

    /// Diagonal (phase-invariant) state with the given Fock weights.
    pub fn diagonal(weights: &[f64], deficit_tol: f64) -> Result<Self> {
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(QcsError::InvalidParameter(
                "diagonal weights must be finite and non-negative".into(),
            ));
        }
        let d = weights.len();
        if d < 2 {
            return Err(QcsError::CutoffTooLow(d));
        }
        let entries = CMatrix::from_diagonal(&DVector::from_iterator(
            d,
            weights.iter().map(|&w| Complex64::new(w, 0.0)),
        ));
        Self::new(ComplexOperator::new(entries, vec![d])?, deficit_tol)
    }

    pub fn operator(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.op.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.op.dims
    }

    /// Cutoff of a single-mode state.
    pub fn dim(&self) -> usize {
        self.op.total_dim()
    }

    pub fn modes(&self) -> usize {
        self.op.dims.len()
    }

    pub fn trace(&self) -> f64 {
        self.op.entries.trace().re
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn deficit_tol(&self) -> f64 {
        self.deficit_tol
    }

    pub fn with_deficit_tol(mut self, tol: f64) -> Self {
        self.deficit_tol = tol;
        self
    }

    /// Refuses states whose truncation loss exceeds their tolerance.
    pub fn require_deficit(&self) -> Result<()> {
        if self.trace_deficit > self.deficit_tol {
            return Err(QcsError::CutoffTooSmall {
                dim: self.op.dims.iter().copied().max().unwrap_or(0),
                deficit: self.trace_deficit,
                tol: self.deficit_tol,
            });
        }
        Ok(())
    }

    pub fn require_single_mode(&self) -> Result<()> {
        if self.modes() != 1 {
            return Err(QcsError::DimensionMismatch(format!(
                "expected a single-mode state, got mode dims {:?}",
                self.dims()
            )));
        }
        Ok(())
    }

    /// Photon-number populations `<n|rho|n>` of a single-mode state.
    pub fn populations(&self) -> Vec<f64> {
        self.op.entries.diagonal().iter().map(|z| z.re).collect()
    }

    /// True when every off-diagonal entry is exactly zero (phase-invariant).
    pub fn is_diagonal(&self) -> bool {
        let m = &self.op.entries;
        (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == Complex64::new(0.0, 0.0)))
    }

    /// Largest occupied Fock level over all modes (entries above `1e-300`).
    pub fn support(&self) -> usize {
        let m = &self.op.entries;
        let mut top = 0;
        for i in 0..m.nrows() {
            if m[(i, i)].re.abs() > 1e-300 {
                let occ = unflatten(i, &self.op.dims);
                top = top.max(occ.into_iter().max().unwrap_or(0));
            }
        }
        top
    }

    /// Same state on larger per-mode cutoffs.
    pub fn embed(&self, new_dims: &[usize]) -> Result<Self> {
        Ok(Self {
            op: self.op.embed(new_dims)?,
            trace_deficit: self.trace_deficit,
            deficit_tol: self.deficit_tol,
        })
    }
}

fn check_positive(m: &CMatrix) -> Result<()> {
    let n = m.nrows();
    let diag_min = m.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if diag_min < -PSD_TOL {
        return Err(QcsError::InvalidParameter(format!(
            "negative population {diag_min:.3e}"
        )));
    }
    if n <= PSD_CHECK_MAX_DIM {
        let eig = SymmetricEigen::new(m.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(QcsError::InvalidParameter(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
    }
    Ok(())
}

/// A normalized-up-to-truncation single-mode ket.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
    trace_deficit: f64,
    deficit_tol: f64,
}

impl StateVector {
    pub fn new(amplitudes: DVector<Complex64>, deficit_tol: f64) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(QcsError::CutoffTooLow(amplitudes.len()));
        }
        let norm2 = amplitudes.norm_squared();
        if norm2 > 1.0 + 1e-10 {
            return Err(QcsError::InvalidParameter(format!(
                "ket norm² {norm2} exceeds 1"
            )));
        }
        let deficit = (1.0 - norm2).max(0.0);
        if deficit > deficit_tol {
            return Err(QcsError::CutoffTooSmall {
                dim: amplitudes.len(),
                deficit,
                tol: deficit_tol,
            });
        }
        Ok(Self {
            amplitudes,
            trace_deficit: deficit,
            deficit_tol,
        })
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_ket(self)
    }
}

/// Ladder operator: `a[n-1, n] = √n`.
pub fn annihilation(cutoff: FockCutoff) -> ComplexOperator {
    let d = cutoff.dim();
    let mut m = CMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    ComplexOperator {
        entries: m,
        dims: vec![d],
    }
}

pub fn number_operator(cutoff: FockCutoff) -> ComplexOperator {
    let d = cutoff.dim();
    let entries = CMatrix::from_diagonal(&DVector::from_fn(d, |n, _| Complex64::new(n as f64, 0.0)));
    ComplexOperator {
        entries,
        dims: vec![d],
    }
}

/// `(-1)^n` on a single mode.
pub fn parity_operator(cutoff: FockCutoff) -> ComplexOperator {
    let d = cutoff.dim();
    let entries = CMatrix::from_diagonal(&DVector::from_fn(d, |n, _| {
        Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    }));
    ComplexOperator {
        entries,
        dims: vec![d],
    }
}

/// Position and momentum quadratures `(x, p)`.
pub fn quadratures(cutoff: FockCutoff) -> (ComplexOperator, ComplexOperator) {
    let a = annihilation(cutoff);
    let ad = a.entries.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a.entries + &ad).scale(s);
    let p = (&a.entries - &ad) * Complex64::new(0.0, -s);
    let dims = vec![cutoff.dim()];
    (
        ComplexOperator {
            entries: x,
            dims: dims.clone(),
        },
        ComplexOperator { entries: p, dims },
    )
}

/// `a ⊗ b` with `a` as the slow index.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> DensityOperator {
    let op = a.op.kron(&b.op);
    let trace = a.trace() * b.trace();
    DensityOperator {
        op,
        trace_deficit: (1.0 - trace).max(0.0),
        deficit_tol: a.deficit_tol.max(b.deficit_tol),
    }
}

/// Reduced state on `keep_mode`.
pub fn partial_trace(state: &DensityOperator, keep_mode: usize) -> Result<DensityOperator> {
    partial_trace_keep(state, &[keep_mode])
}

/// Reduced state on the listed modes, in the listed order.
pub fn partial_trace_keep(state: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let dims = state.dims();
    let modes = dims.len();
    if modes < 2 {
        return Err(QcsError::DimensionMismatch(
            "partial trace needs a multimode state".into(),
        ));
    }
    for (i, &k) in keep.iter().enumerate() {
        if k >= modes {
            return Err(QcsError::InvalidMode { index: k, modes });
        }
        if keep[..i].contains(&k) {
            return Err(QcsError::InvalidParameter(format!("mode {k} listed twice")));
        }
    }
    if keep.is_empty() {
        return Err(QcsError::InvalidParameter("nothing to keep".into()));
    }
    let traced: Vec<usize> = (0..modes).filter(|m| !keep.contains(m)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let keep_total: usize = keep_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product();

    let full_index = |keep_idx: usize, traced_idx: usize| -> usize {
        let ko = unflatten(keep_idx, &keep_dims);
        let to = unflatten(traced_idx, &traced_dims);
        let mut occ = vec![0; modes];
        for (slot, &m) in keep.iter().enumerate() {
            occ[m] = ko[slot];
        }
        for (slot, &m) in traced.iter().enumerate() {
            occ[m] = to[slot];
        }
        flatten(&occ, dims)
    };
    let table: Vec<Vec<usize>> = (0..keep_total)
        .map(|i| (0..traced_total).map(|t| full_index(i, t)).collect())
        .collect();

    let m = state.matrix();
    let mut out = CMatrix::zeros(keep_total, keep_total);
    for i in 0..keep_total {
        for j in 0..keep_total {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..traced_total {
                acc += m[(table[i][t], table[j][t])];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityOperator::from_trusted(out, keep_dims, state.deficit_tol))
}

/// The three equivalent ways of writing the two-mode swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapConstruction {
    /// `S|m, n> = |n, m>`, exact.
    Permutation,
    /// `exp(iπ/2 (a† - b†)(a - b))` by matrix exponential.
    Exponential,
    /// `U_BS† (-1)^{n_b} U_BS`: balanced Mach-Zehnder with a π phase.
    MachZehnder,
}

/// Swap operator on two modes with the same cutoff.
///
/// The exponential forms are exact on the blocks of total photon number
/// `<= dim - 1` and corrupted above, where the truncation removes states.
pub fn swap_operator(cutoff: FockCutoff, construction: SwapConstruction) -> ComplexOperator {
    let d = cutoff.dim();
    let dims = vec![d, d];
    match construction {
        SwapConstruction::Permutation => {
            let mut m = CMatrix::zeros(d * d, d * d);
            for i in 0..d {
                for j in 0..d {
                    m[(j * d + i, i * d + j)] = Complex64::new(1.0, 0.0);
                }
            }
            ComplexOperator { entries: m, dims }
        }
        SwapConstruction::Exponential => {
            let a = annihilation(cutoff);
            let a1 = ComplexOperator::on_mode(&a, 0, &dims).expect("valid mode");
            let b1 = ComplexOperator::on_mode(&a, 1, &dims).expect("valid mode");
            let diff = &a1.entries - &b1.entries;
            let h = diff.adjoint() * &diff;
            let entries = linalg::exp_i_hermitian(&h, std::f64::consts::FRAC_PI_2);
            ComplexOperator { entries, dims }
        }
        SwapConstruction::MachZehnder => {
            let u = crate::interferometer::beam_splitter_unitary(cutoff);
            let parity = parity_operator(cutoff);
            let pb = ComplexOperator::on_mode(&parity, 1, &dims).expect("valid mode");
            let entries = u.entries.adjoint() * &pb.entries * &u.entries;
            ComplexOperator { entries, dims }
        }
    }
}

/// `Tr ρ²`.
pub fn purity_direct(rho: &DensityOperator) -> f64 {
    let m = rho.matrix();
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `Tr(ρ_a ρ_b)` for single-mode operators, padding the smaller cutoff.
pub fn overlap_trace(rho_a: &DensityOperator, rho_b: &DensityOperator) -> Result<f64> {
    rho_a.require_single_mode()?;
    rho_b.require_single_mode()?;
    let d = rho_a.dim().max(rho_b.dim());
    let a = rho_a.embed(&[d])?;
    let b = rho_b.embed(&[d])?;
    Ok(linalg::trace_of_product(a.matrix(), b.matrix()).re)
}

/// Indices of two-mode basis states with total photon number `<= max_total`.
pub fn conserved_subspace(dim: usize, max_total: usize) -> Vec<usize> {
    (0..dim * dim)
        .filter(|&i| i / dim + i % dim <= max_total)
        .collect()
}
