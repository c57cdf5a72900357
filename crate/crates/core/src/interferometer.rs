//! Balanced beam splitter acting on two copies of a state, and the
//! photon statistics of the difference port.
//!
//! `U_BS = exp(π/4 (a†b - a b†))` conserves `n_a + n_b`, so it is built one
//! total-photon-number block at a time. On the block with `T` photons the
//! basis is `|k, T-k>` (index `k` = photons in the first mode) and the
//! generator is a real antisymmetric tridiagonal matrix; conjugating by
//! `diag(i^k)` turns it into `i J` with `J` real symmetric, which is
//! diagonalized exactly. Each block is then unitary to machine precision and
//! there is no truncation cross-talk between blocks.
//!
//! Output port conventions: `c = (a + b)/√2` leaves through the first mode,
//! the difference mode `d = (-a + b)/√2` through the second. Identical
//! coherent inputs therefore leave the second mode in vacuum.

use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::distribution::PhotonDistribution;
use crate::error::{QcsError, Result};
use crate::fock::{flatten, unflatten, ComplexOperator, DensityOperator, FockCutoff};
use crate::linalg::CMatrix;

/// Upper bound on dense complex entries any single pipeline may allocate.
pub const DENSE_ENTRY_GUARD: usize = 1 << 25;

/// Real blocks of `U_BS` for total photon numbers `0..=max_total`.
///
/// `block(T)[(k_out, k_in)] = <k_out, T-k_out| U_BS |k_in, T-k_in>`.
#[derive(Debug, Clone)]
pub struct BeamSplitterBlocks {
    blocks: Vec<Arc<DMatrix<f64>>>,
}

impl BeamSplitterBlocks {
    pub fn new(max_total: usize) -> Self {
        Self {
            blocks: shared_blocks(max_total),
        }
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }
}

static BLOCK_CACHE: RwLock<Vec<Arc<DMatrix<f64>>>> = RwLock::new(Vec::new());

fn shared_blocks(max_total: usize) -> Vec<Arc<DMatrix<f64>>> {
    {
        let cache = BLOCK_CACHE.read().expect("block cache poisoned");
        if cache.len() > max_total {
            return cache[..=max_total].to_vec();
        }
    }
    let mut cache = BLOCK_CACHE.write().expect("block cache poisoned");
    let have = cache.len();
    if have <= max_total {
        let fresh: Vec<Arc<DMatrix<f64>>> = (have..=max_total)
            .into_par_iter()
            .map(|t| Arc::new(block_unitary(t)))
            .collect();
        cache.extend(fresh);
    }
    cache[..=max_total].to_vec()
}

/// Process-wide cached block of `U_BS` with `total` photons.
pub fn shared_block(total: usize) -> Arc<DMatrix<f64>> {
    {
        let cache = BLOCK_CACHE.read().expect("block cache poisoned");
        if let Some(b) = cache.get(total) {
            return Arc::clone(b);
        }
    }
    Arc::clone(&shared_blocks(total)[total])
}

fn block_unitary(total: usize) -> DMatrix<f64> {
    let size = total + 1;
    if size == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let quarter_pi = std::f64::consts::FRAC_PI_4;
    let mut j = DMatrix::<f64>::zeros(size, size);
    for k in 0..total {
        // <k| G |k+1> for G = π/4 (a†b - a b†)
        let s = -quarter_pi * (((k + 1) * (total - k)) as f64).sqrt();
        j[(k, k + 1)] = s;
        j[(k + 1, k)] = s;
    }
    let eig = SymmetricEigen::new(j);
    let v = eig.eigenvectors;
    let cos = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::cos));
    let sin = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sin));
    // exp(iJ) = V (cos Λ + i sin Λ) Vᵀ
    let re = &v * cos * v.transpose();
    let im = &v * sin * v.transpose();
    // U = S exp(iJ) S⁻¹ with S = diag(i^k): entry (r, c) picks up i^(r-c)
    DMatrix::from_fn(size, size, |r, c| {
        let shift = (r + 4 * size - c) % 4;
        match shift {
            0 => re[(r, c)],
            1 => -im[(r, c)],
            2 => -re[(r, c)],
            _ => im[(r, c)],
        }
    })
}

/// Dense two-mode `U_BS` with both modes cut at `cutoff`.
///
/// Exact (block-unitary) on total photon number `<= dim - 1`; higher blocks
/// are only partially representable and are filled with whatever part of
/// the exact block fits.
pub fn beam_splitter_unitary(cutoff: FockCutoff) -> ComplexOperator {
    let d = cutoff.dim();
    let blocks = BeamSplitterBlocks::new(2 * (d - 1));
    let mut m = CMatrix::zeros(d * d, d * d);
    for total in 0..=2 * (d - 1) {
        let block = blocks.block(total);
        let lo = total.saturating_sub(d - 1);
        let hi = total.min(d - 1);
        for k_out in lo..=hi {
            for k_in in lo..=hi {
                let row = k_out * d + (total - k_out);
                let col = k_in * d + (total - k_in);
                m[(row, col)] = Complex64::new(block[(k_out, k_in)], 0.0);
            }
        }
    }
    ComplexOperator::new(m, vec![d, d]).expect("square two-mode matrix")
}

/// The two-copy pipeline needs input support `n <= dim/2 - 1` on a shared
/// two-mode cutoff `dim`, so that the interference never leaves the space.
pub fn check_headroom(support: usize, dim: usize) -> Result<()> {
    let limit = (dim / 2).saturating_sub(1);
    if support > limit {
        return Err(QcsError::InsufficientHeadroom {
            support,
            dim,
            limit,
        });
    }
    Ok(())
}

fn single_mode_matrix(rho: &DensityOperator) -> Result<&CMatrix> {
    rho.require_single_mode()?;
    rho.require_deficit()?;
    Ok(rho.matrix())
}

/// Difference-port state of two (possibly different) single-mode inputs,
/// `Tr_c(U_BS (ρ_a ⊗ ρ_b) U_BS†)`, represented exactly on
/// `dim_a + dim_b - 1` levels (all the photons can end up in `d`).
pub fn difference_mode_state(
    rho_a: &DensityOperator,
    rho_b: &DensityOperator,
) -> Result<DensityOperator> {
    let ma = single_mode_matrix(rho_a)?;
    let mb = single_mode_matrix(rho_b)?;
    let (da, db) = (ma.nrows(), mb.nrows());
    let out_dim = da + db - 1;
    let tol = rho_a.deficit_tol().max(rho_b.deficit_tol());
    if out_dim * out_dim > DENSE_ENTRY_GUARD {
        return Err(QcsError::MemoryGuard {
            needed: out_dim * out_dim,
            limit: DENSE_ENTRY_GUARD,
        });
    }
    if rho_a.is_diagonal() && rho_b.is_diagonal() {
        let probs = diagonal_counts(ma, mb)?;
        let entries = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            out_dim,
            probs.into_iter().map(|p| Complex64::new(p, 0.0)),
        ));
        return Ok(DensityOperator::from_trusted(entries, vec![out_dim], tol));
    }
    let blocks = BeamSplitterBlocks::new(out_dim - 1);
    let zero = Complex64::new(0.0, 0.0);
    let partials: Vec<CMatrix> = (0..da)
        .into_par_iter()
        .map(|a| {
            let mut acc = CMatrix::zeros(out_dim, out_dim);
            for b in 0..db {
                let total = a + b;
                let block = blocks.block(total);
                for ap in 0..da {
                    let ra = ma[(a, ap)];
                    if ra == zero {
                        continue;
                    }
                    for bp in 0..db {
                        let rb = mb[(b, bp)];
                        if rb == zero {
                            continue;
                        }
                        let w = ra * rb;
                        let total_p = ap + bp;
                        let block_p = blocks.block(total_p);
                        // c photons in the first port, shared by ket and bra
                        for c in 0..=total.min(total_p) {
                            let amp = block[(c, a)] * block_p[(c, ap)];
                            acc[(total - c, total_p - c)] += w * amp;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for p in &partials {
        out += p;
    }
    Ok(DensityOperator::from_trusted(out, vec![out_dim], tol))
}

/// `ρ_d` for two copies of `rho`.
pub fn two_copy_output(rho: &DensityOperator) -> Result<DensityOperator> {
    difference_mode_state(rho, rho)
}

/// Diagonal of the difference-port state, `Σ_T Σ_{a,a'} U_T[c,a] U_T[c,a'] ρ_a ρ_b`.
fn diagonal_counts(ma: &CMatrix, mb: &CMatrix) -> Result<Vec<f64>> {
    let (da, db) = (ma.nrows(), mb.nrows());
    let out_dim = da + db - 1;
    let blocks = BeamSplitterBlocks::new(out_dim - 1);
    let per_block: Vec<Vec<f64>> = (0..out_dim)
        .into_par_iter()
        .map(|total| {
            let block = blocks.block(total);
            let lo = total.saturating_sub(db - 1);
            let hi = total.min(da - 1);
            let mut acc = vec![Complex64::new(0.0, 0.0); total + 1];
            for a in lo..=hi {
                for ap in lo..=hi {
                    let w = ma[(a, ap)] * mb[(total - a, total - ap)];
                    if w == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for c in 0..=total {
                        acc[total - c] += w * (block[(c, a)] * block[(c, ap)]);
                    }
                }
            }
            acc.into_iter().map(|z| z.re).collect()
        })
        .collect();
    let mut probs = vec![0.0; out_dim];
    for row in &per_block {
        for (n, v) in row.iter().enumerate() {
            probs[n] += v;
        }
    }
    Ok(probs)
}

/// `p_n = <n| Tr_a(U_BS (ρ_a ⊗ ρ_b) U_BS†) |n>` in the difference port.
pub fn photon_distribution(
    rho_a: &DensityOperator,
    rho_b: &DensityOperator,
) -> Result<PhotonDistribution> {
    let ma = single_mode_matrix(rho_a)?;
    let mb = single_mode_matrix(rho_b)?;
    PhotonDistribution::from_raw(diagonal_counts(ma, mb)?)
}

/// Reference pipeline: full two-mode `U_BS` on a shared cutoff, explicit
/// `U (ρ_a ⊗ ρ_b) U†` and partial trace over the first mode.
///
/// `two_mode_dim` must satisfy the headroom rule for both inputs. Cost is
/// `O(dim^6)`, intended as an oracle at small cutoffs.
pub fn photon_distribution_dense(
    rho_a: &DensityOperator,
    rho_b: &DensityOperator,
    two_mode_dim: usize,
) -> Result<PhotonDistribution> {
    single_mode_matrix(rho_a)?;
    single_mode_matrix(rho_b)?;
    check_headroom(rho_a.support().max(rho_b.support()), two_mode_dim)?;
    let needed = two_mode_dim.pow(4);
    if needed > DENSE_ENTRY_GUARD {
        return Err(QcsError::MemoryGuard {
            needed,
            limit: DENSE_ENTRY_GUARD,
        });
    }
    let cutoff = FockCutoff::new(two_mode_dim)?;
    let a = rho_a.embed(&[two_mode_dim])?;
    let b = rho_b.embed(&[two_mode_dim])?;
    let joint = crate::fock::tensor(&a, &b);
    let u = beam_splitter_unitary(cutoff);
    let out = u.matrix() * joint.matrix() * u.matrix().adjoint();
    let out = DensityOperator::from_trusted(out, vec![two_mode_dim, two_mode_dim], joint.deficit_tol());
    let reduced = crate::fock::partial_trace(&out, 1)?;
    PhotonDistribution::from_raw(reduced.populations())
}

/// Two copies of an `n_modes`-mode state through a stack of balanced beam
/// splitters pairing mode `k` of each copy; returns the joint state of all
/// difference ports `d_1..d_N`, each represented on `2 dim - 1` levels.
///
/// The copies are laid out as `(a_1..a_N, b_1..b_N)`. Beam splitter `k` and
/// the trace over `c_k` are applied one pair at a time (they commute with
/// the other pairs), as a Kraus map `Σ_c K_c X K_c†` with
/// `K_c[d, (a, b)] = U_T[c, a]`, `T = a + b = c + d`.
pub fn multimode_two_copy_output(rho: &DensityOperator, n_modes: usize) -> Result<DensityOperator> {
    if n_modes == 0 || rho.modes() != n_modes {
        return Err(QcsError::DimensionMismatch(format!(
            "state has {} modes, expected {n_modes}",
            rho.modes()
        )));
    }
    rho.require_deficit()?;
    let in_dims = rho.dims().to_vec();
    let joint_total = rho.operator().total_dim().pow(2);
    if joint_total * joint_total > DENSE_ENTRY_GUARD {
        return Err(QcsError::MemoryGuard {
            needed: joint_total * joint_total,
            limit: DENSE_ENTRY_GUARD,
        });
    }
    let joint = crate::fock::tensor(rho, rho);
    let mut state = joint.matrix().clone();
    // current layout: list of (label, dim); labels: A(k), B(k), D(k)
    let mut layout: Vec<(Slot, usize)> = in_dims
        .iter()
        .enumerate()
        .map(|(k, &d)| (Slot::A(k), d))
        .chain(in_dims.iter().enumerate().map(|(k, &d)| (Slot::B(k), d)))
        .collect();
    let max_dim = in_dims.iter().copied().max().unwrap_or(1);
    let blocks = BeamSplitterBlocks::new(2 * (max_dim - 1));
    for k in 0..n_modes {
        let ia = layout.iter().position(|s| s.0 == Slot::A(k)).expect("a slot");
        let ib = layout.iter().position(|s| s.0 == Slot::B(k)).expect("b slot");
        let (next, next_layout) = beam_split_and_trace(&state, &layout, ia, ib, k, &blocks)?;
        state = next;
        layout = next_layout;
    }
    // remaining layout is D(0..N) in order
    let dims: Vec<usize> = layout.iter().map(|s| s.1).collect();
    Ok(DensityOperator::from_trusted(state, dims, rho.deficit_tol()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    A(usize),
    B(usize),
    D(usize),
}

/// Applies `U_BS` on slots `(ia, ib)`, traces the `c` port, and puts the
/// difference port where slot `ia` was (slot `ib` disappears).
#[allow(clippy::type_complexity)]
fn beam_split_and_trace(
    state: &CMatrix,
    layout: &[(Slot, usize)],
    ia: usize,
    ib: usize,
    k: usize,
    blocks: &BeamSplitterBlocks,
) -> Result<(CMatrix, Vec<(Slot, usize)>)> {
    let dims: Vec<usize> = layout.iter().map(|s| s.1).collect();
    let (da, db) = (dims[ia], dims[ib]);
    let out_d = da + db - 1;
    let mut new_layout: Vec<(Slot, usize)> = Vec::with_capacity(layout.len() - 1);
    for (i, s) in layout.iter().enumerate() {
        if i == ia {
            new_layout.push((Slot::D(k), out_d));
        } else if i != ib {
            new_layout.push(*s);
        }
    }
    let new_dims: Vec<usize> = new_layout.iter().map(|s| s.1).collect();
    let new_total: usize = new_dims.iter().product();
    if new_total * new_total > DENSE_ENTRY_GUARD {
        return Err(QcsError::MemoryGuard {
            needed: new_total * new_total,
            limit: DENSE_ENTRY_GUARD,
        });
    }
    let pos_d = new_layout.iter().position(|s| s.0 == Slot::D(k)).expect("d slot");
    let total = state.nrows();
    // Precompute, for every old index, (a, b, spectator-occupations-as-new-index-with-d=0)
    let decomposed: Vec<(usize, usize, usize)> = (0..total)
        .map(|i| {
            let occ = unflatten(i, &dims);
            let mut new_occ = Vec::with_capacity(new_dims.len());
            for (slot, &o) in occ.iter().enumerate() {
                if slot == ia {
                    new_occ.push(0);
                } else if slot != ib {
                    new_occ.push(o);
                }
            }
            (occ[ia], occ[ib], flatten(&new_occ, &new_dims))
        })
        .collect();
    let stride_d: usize = new_dims[pos_d + 1..].iter().product();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = CMatrix::zeros(new_total, new_total);
    for i in 0..total {
        let (a, b, base_i) = decomposed[i];
        let t = a + b;
        let block = blocks.block(t);
        for j in 0..total {
            let v = state[(i, j)];
            if v == zero {
                continue;
            }
            let (ap, bp, base_j) = decomposed[j];
            let tp = ap + bp;
            let block_p = blocks.block(tp);
            for c in 0..=t.min(tp) {
                let amp = block[(c, a)] * block_p[(c, ap)];
                if amp != 0.0 {
                    out[(base_i + (t - c) * stride_d, base_j + (tp - c) * stride_d)] += v * amp;
                }
            }
        }
    }
    Ok((out, new_layout))
}

/// Joint photon-count distribution of the difference ports for two copies
/// of a multimode state, indexed by flattened `(n_{d_1}, ..., n_{d_N})` on
/// per-mode ranges `0..2 dim_k - 1`.
///
/// Only block-diagonal pieces of `U_BS ⊗ ... ⊗ U_BS` are needed: for each
/// vector of per-pair totals `T_k` the joint block is the Kronecker product
/// of the single-pair blocks.
pub fn multimode_joint_counts(rho: &DensityOperator, n_modes: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if n_modes == 0 || rho.modes() != n_modes {
        return Err(QcsError::DimensionMismatch(format!(
            "state has {} modes, expected {n_modes}",
            rho.modes()
        )));
    }
    rho.require_deficit()?;
    let in_dims = rho.dims().to_vec();
    let out_dims: Vec<usize> = in_dims.iter().map(|d| 2 * d - 1).collect();
    let out_total: usize = out_dims.iter().product();
    let max_dim = in_dims.iter().copied().max().unwrap_or(1);
    let blocks = BeamSplitterBlocks::new(2 * (max_dim - 1));
    let m = rho.matrix();
    let zero = Complex64::new(0.0, 0.0);

    // enumerate total-photon vectors T = (T_1..T_N), T_k in 0..2 d_k - 1
    let totals: Vec<Vec<usize>> = (0..out_total).map(|i| unflatten(i, &out_dims)).collect();
    let contributions: Vec<Vec<(usize, f64)>> = totals
        .par_iter()
        .map(|t| {
            // inputs (a_k, b_k) with a_k + b_k = T_k and both inside the cutoff
            let ranges: Vec<Vec<usize>> = t
                .iter()
                .zip(&in_dims)
                .map(|(&tk, &dk)| (tk.saturating_sub(dk - 1)..=tk.min(dk - 1)).collect())
                .collect();
            let choices: Vec<Vec<usize>> = cartesian(&ranges);
            let mut acc: Vec<(usize, f64)> = Vec::new();
            // d-port occupations: for each k, c_k in 0..=T_k, d_k = T_k - c_k
            let c_ranges: Vec<Vec<usize>> = t.iter().map(|&tk| (0..=tk).collect()).collect();
            for cs in cartesian(&c_ranges) {
                let mut value = Complex64::new(0.0, 0.0);
                for x in &choices {
                    let amp_x: f64 = (0..n_modes)
                        .map(|k| blocks.block(t[k])[(cs[k], x[k])])
                        .product();
                    if amp_x == 0.0 {
                        continue;
                    }
                    let ia = flatten(x, &in_dims);
                    let xb: Vec<usize> = (0..n_modes).map(|k| t[k] - x[k]).collect();
                    let ib = flatten(&xb, &in_dims);
                    for y in &choices {
                        let ja = flatten(y, &in_dims);
                        let ra = m[(ia, ja)];
                        if ra == zero {
                            continue;
                        }
                        let yb: Vec<usize> = (0..n_modes).map(|k| t[k] - y[k]).collect();
                        let rb = m[(ib, flatten(&yb, &in_dims))];
                        if rb == zero {
                            continue;
                        }
                        let amp_y: f64 = (0..n_modes)
                            .map(|k| blocks.block(t[k])[(cs[k], y[k])])
                            .product();
                        value += ra * rb * amp_x * amp_y;
                    }
                }
                let d_occ: Vec<usize> = (0..n_modes).map(|k| t[k] - cs[k]).collect();
                acc.push((flatten(&d_occ, &out_dims), value.re));
            }
            acc
        })
        .collect();
    let mut probs = vec![0.0; out_total];
    for list in contributions {
        for (idx, v) in list {
            probs[idx] += v;
        }
    }
    Ok((probs, out_dims))
}

fn cartesian(ranges: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for r in ranges {
        let mut next = Vec::with_capacity(out.len() * r.len());
        for prefix in &out {
            for &v in r {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}
