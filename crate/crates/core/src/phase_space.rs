//! Wigner functions on grids and at the origin.
//!
//! Conventions: `W` is normalized to `∫W dx dp = Tr ρ`, the vacuum is
//! `e^{-(x²+p²)}/π`, and a coherent state `|α>` is centred at
//! `(√2 Re α, √2 Im α)`. Values come from the Fock-basis kernel through
//! three-term recurrences, never from a numerical Fourier transform.

use std::io::{Cursor, Read};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QcsError, Result};
use crate::fock::{parity_operator, quadratures, DensityOperator, FockCutoff};
use crate::interferometer;
use crate::linalg::{trace_of_product, CMatrix};
use crate::qcs::{Method, QcsEstimate};
use crate::scalar::pairwise_sum;

pub const DEFAULT_SPACING: f64 = 0.04;
/// Largest spacing accepted by the gradient route.
pub const MAX_GRADIENT_SPACING: f64 = 0.05;
/// `|∫W - Tr ρ|` allowed before a grid is declared too small.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Allowed change of the gradient-route QCS when the spacing is halved.
pub const REFINEMENT_TOL: f64 = 1e-4;
/// Smallest `W_d(0,0)` the Laplacian route divides by.
pub const MIN_ORIGIN_VALUE: f64 = 1e-9;

const BINARY_MAGIC: &[u8; 4] = b"WGRD";
const BINARY_VERSION: u32 = 1;

/// Uniform square-cell grid: `x_i = x_min + i h`, `p_j = p_min + j h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub p_min: f64,
    pub h: f64,
    pub nx: usize,
    pub np: usize,
}

impl GridSpec {
    /// `[-half_width, half_width]²` with spacing `h`.
    pub fn square(half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && half_width > 0.0 && h.is_finite() && half_width.is_finite()) {
            return Err(QcsError::InvalidParameter(format!(
                "grid needs positive extent and spacing, got {half_width} and {h}"
            )));
        }
        let cells = (2.0 * half_width / h).ceil() as usize;
        let start = -(cells as f64) * h / 2.0;
        Ok(Self {
            x_min: start,
            p_min: start,
            h,
            nx: cells + 1,
            np: cells + 1,
        })
    }

    /// Half-width `1.2 (3 + √(2<n>+1))`, widened until the state's widest
    /// quadrature is covered by 6.5 standard deviations beyond its mean
    /// (Gaussian tail mass below 1e-9).
    pub fn default_for(rho: &DensityOperator) -> Result<Self> {
        Self::square(default_half_width(rho)?, DEFAULT_SPACING)
    }

    /// Same extent at half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            h: self.h / 2.0,
            nx: 2 * self.nx - 1,
            np: 2 * self.np - 1,
            ..*self
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.h
    }

    pub fn half_width(&self) -> f64 {
        -self.x_min
    }

    /// Smallest grid with the same spacing covering both.
    pub fn union(&self, other: &GridSpec) -> Result<Self> {
        Self::square(self.half_width().max(other.half_width()), self.h.min(other.h))
    }
}

fn default_half_width(rho: &DensityOperator) -> Result<f64> {
    let mom = crate::states::moments(rho)?;
    let n_mean: f64 = rho
        .populations()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum::<f64>()
        / rho.trace();
    let rule = 1.2 * (3.0 + (2.0 * n_mean + 1.0).sqrt());
    let g = mom.gamma();
    let var = g[(0, 0)].max(g[(1, 1)]) + g[(0, 1)].abs();
    let shift = mom.mean()[0].abs().max(mom.mean()[1].abs());
    Ok(rule.max(shift + 6.5 * var.sqrt()))
}

/// Wigner function sampled on a [`GridSpec`]; `values[i * np + j]` is
/// `W(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.np + j]
    }

    /// Trapezoidal `∫ f(W) dx dp`.
    fn trapezoid(&self, f: impl Fn(f64) -> f64 + Sync) -> f64 {
        let (nx, np) = (self.spec.nx, self.spec.np);
        let rows: Vec<f64> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let terms: Vec<f64> = (0..np)
                    .map(|j| {
                        let w = edge_weight(i, nx) * edge_weight(j, np);
                        w * f(self.get(i, j))
                    })
                    .collect();
                pairwise_sum(&terms)
            })
            .collect();
        pairwise_sum(&rows) * self.spec.h * self.spec.h
    }

    pub fn integral(&self) -> f64 {
        self.trapezoid(|w| w)
    }

    /// `2π ∫ W²`, the purity.
    pub fn purity(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.trapezoid(|w| w * w)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 40 + 8);
        out.push_str("x,p,W\n");
        for i in 0..self.spec.nx {
            for j in 0..self.spec.np {
                out.push_str(&format!("{},{},{}\n", self.spec.x(i), self.spec.p(j), self.get(i, j)));
            }
        }
        out
    }

    /// `"WGRD"`, `u32` version, `u64 nx, np`, `f64 x0, dx, p0, dp`, then
    /// the values row-major (x outer), all little-endian.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(56 + 8 * self.values.len());
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.spec.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.spec.np as u64).to_le_bytes());
        for v in [self.spec.x_min, self.spec.h, self.spec.p_min, self.spec.h] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let bad = |what: &str| QcsError::InvalidParameter(format!("wigner grid binary: {what}"));
        let mut cur = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != BINARY_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        cur.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        if u32::from_le_bytes(b4) != BINARY_VERSION {
            return Err(bad("unsupported version"));
        }
        let mut read_u64 = |cur: &mut Cursor<&[u8]>| -> Result<u64> {
            cur.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
            Ok(u64::from_le_bytes(b8))
        };
        let nx = read_u64(&mut cur)? as usize;
        let np = read_u64(&mut cur)? as usize;
        let mut floats = [0.0f64; 4];
        for f in floats.iter_mut() {
            *f = f64::from_bits(read_u64(&mut cur)?);
        }
        let [x0, dx, p0, dp] = floats;
        if dx != dp {
            return Err(bad("non-square cells"));
        }
        let count = nx.checked_mul(np).ok_or_else(|| bad("size overflow"))?;
        let rest = &bytes[cur.position() as usize..];
        if rest.len() != 8 * count {
            return Err(bad("payload size does not match header"));
        }
        let values = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self {
            spec: GridSpec {
                x_min: x0,
                p_min: p0,
                h: dx,
                nx,
                np,
            },
            values,
        })
    }
}

fn edge_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Pointwise kernel evaluator for one density matrix.
struct Kernel<'a> {
    m: &'a CMatrix,
    diagonal: Option<Vec<f64>>,
}

impl<'a> Kernel<'a> {
    fn new(rho: &'a DensityOperator) -> Self {
        let diagonal = rho.is_diagonal().then(|| rho.populations());
        Self {
            m: rho.matrix(),
            diagonal,
        }
    }

    fn eval(&self, x: f64, p: f64, buf: &mut Vec<Complex64>) -> f64 {
        match &self.diagonal {
            Some(pops) => wigner_diagonal(pops, x, p),
            None => wigner_general(self.m, x, p, buf),
        }
    }
}

/// `W = Σ_n ρ_nn (-1)^n e^{-r²} L_n(2r²) / π`, with the Laguerre
/// recurrence carried on the already-damped functions.
fn wigner_diagonal(pops: &[f64], x: f64, p: f64) -> f64 {
    let r2 = x * x + p * p;
    let t = 2.0 * r2;
    let mut prev = 0.0;
    let mut cur = (-r2).exp();
    let mut acc = pops[0] * cur;
    for (n, &w) in pops.iter().enumerate().skip(1) {
        let k = (n - 1) as f64;
        let next = ((2.0 * k + 1.0 - t) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        if w != 0.0 {
            acc += if n % 2 == 0 { w * cur } else { -w * cur };
        }
    }
    acc / std::f64::consts::PI
}

/// Full kernel sum `Σ_{m,n} ρ_mn W_{|m><n|}` via the standard iterative
/// recurrence in `A = (x + ip)/√2`.
fn wigner_general(m: &CMatrix, x: f64, p: f64, w: &mut Vec<Complex64>) -> f64 {
    let d = m.nrows();
    w.clear();
    w.resize(d, Complex64::new(0.0, 0.0));
    let a = Complex64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2;
    let a2 = a * 2.0;
    let a2c = a2.conj();
    w[0] = Complex64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
    let mut acc = m[(0, 0)].re * w[0].re;
    for n in 1..d {
        w[n] = a2 * w[n - 1] / (n as f64).sqrt();
        acc += 2.0 * (m[(0, n)] * w[n]).re;
    }
    for row in 1..d {
        let sr = (row as f64).sqrt();
        let mut temp = w[row];
        w[row] = (a2c * temp - w[row - 1] * sr) / sr;
        acc += m[(row, row)].re * w[row].re;
        for n in row + 1..d {
            let next = (a2 * w[n - 1] - temp * sr) / (n as f64).sqrt();
            temp = w[n];
            w[n] = next;
            acc += 2.0 * (m[(row, n)] * w[n]).re;
        }
    }
    acc
}

/// `W(x, p)` of a single-mode state.
pub fn wigner_at(rho: &DensityOperator, x: f64, p: f64) -> Result<f64> {
    rho.require_single_mode()?;
    let mut buf = Vec::new();
    Ok(Kernel::new(rho).eval(x, p, &mut buf))
}

fn sample(rho: &DensityOperator, spec: &GridSpec) -> WignerGrid {
    let kernel = Kernel::new(rho);
    let values: Vec<f64> = (0..spec.nx)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut buf = Vec::new();
            let x = spec.x(i);
            (0..spec.np)
                .map(|j| kernel.eval(x, spec.p(j), &mut buf))
                .collect::<Vec<_>>()
        })
        .collect();
    WignerGrid { spec: *spec, values }
}

/// Samples `W` on `spec`, failing if the grid misses more than
/// [`NORMALIZATION_TOL`] of the trace.
pub fn wigner_eval(rho: &DensityOperator, spec: &GridSpec) -> Result<WignerGrid> {
    rho.require_single_mode()?;
    let grid = sample(rho, spec);
    let err = (grid.integral() - rho.trace()).abs();
    if err > NORMALIZATION_TOL {
        return Err(QcsError::GridTolerance(format!(
            "∫W misses the trace by {err:.3e}; widen the grid (half-width {})",
            spec.half_width()
        )));
    }
    Ok(grid)
}

/// `2π ∫ W_a W_b = Tr(ρ_a ρ_b)` on a shared grid.
pub fn overlap_wigner(rho_a: &DensityOperator, rho_b: &DensityOperator, spec: &GridSpec) -> Result<f64> {
    let ga = wigner_eval(rho_a, spec)?;
    let gb = wigner_eval(rho_b, spec)?;
    let product = WignerGrid {
        spec: *spec,
        values: ga.values.iter().zip(&gb.values).map(|(a, b)| a * b).collect(),
    };
    Ok(2.0 * std::f64::consts::PI * product.integral())
}

/// `Tr(ρ_a ρ_b) = π W_d(0,0) = Σ (-1)^n p_n` from the difference port.
pub fn overlap_parity(rho_a: &DensityOperator, rho_b: &DensityOperator) -> Result<f64> {
    let pn = interferometer::photon_distribution(rho_a, rho_b)?;
    Ok(crate::qcs::purity_from_pn(&pn))
}

/// Value and second derivatives of `W` at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginJet {
    pub value: f64,
    pub d2x: f64,
    pub d2p: f64,
}

impl OriginJet {
    pub fn laplacian(&self) -> f64 {
        self.d2x + self.d2p
    }
}

/// With `Π = (-1)^n`: `W(0,0) = Tr(ρΠ)/π`, `∂²_x W(0,0) = -4 Tr(ρ p² Π)/π`
/// and `∂²_p W(0,0) = -4 Tr(ρ x² Π)/π`.
pub fn origin_jet(rho: &DensityOperator) -> Result<OriginJet> {
    rho.require_single_mode()?;
    let d = rho.dim() + 2;
    let padded = rho.embed(&[d])?;
    let cutoff = FockCutoff::new(d)?;
    let (x, p) = quadratures(cutoff);
    let parity = parity_operator(cutoff);
    let (xm, pm, pim) = (x.matrix(), p.matrix(), parity.matrix());
    let m = padded.matrix();
    let pi = std::f64::consts::PI;
    let value = trace_of_product(m, pim).re / pi;
    let x2 = xm * xm * pim;
    let p2 = pm * pm * pim;
    Ok(OriginJet {
        value,
        d2x: -4.0 * trace_of_product(m, &p2).re / pi,
        d2p: -4.0 * trace_of_product(m, &x2).re / pi,
    })
}

/// `C² = -ΔW_d(0,0) / (4 W_d(0,0))` with `ρ_d` the two-copy difference
/// state.
pub fn qcs_wigner_laplacian(rho: &DensityOperator) -> Result<QcsEstimate> {
    let rho_d = interferometer::two_copy_output(rho)?;
    let jet = origin_jet(&rho_d)?;
    if jet.value.abs() < MIN_ORIGIN_VALUE {
        return Err(QcsError::DegenerateDenominator { value: jet.value });
    }
    let pi = std::f64::consts::PI;
    QcsEstimate::from_parts(
        -pi * jet.laplacian() / 4.0,
        pi * jet.value,
        Method::WignerLaplacian,
        0.0,
    )
}

/// Eighth-order central difference weights for the first derivative.
const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const STENCIL: usize = D1.len();

/// `(‖∇W‖², ‖W‖²)` with `∇` by eighth-order central differences on the
/// interior points and trapezoidal integration.
fn gradient_norms(grid: &WignerGrid) -> (f64, f64) {
    let (nx, np, h) = (grid.spec.nx, grid.spec.np, grid.spec.h);
    let rows: Vec<f64> = (STENCIL..nx.saturating_sub(STENCIL))
        .into_par_iter()
        .map(|i| {
            let terms: Vec<f64> = (STENCIL..np.saturating_sub(STENCIL))
                .map(|j| {
                    let mut gx = 0.0;
                    let mut gp = 0.0;
                    for (k, c) in D1.iter().enumerate() {
                        let s = k + 1;
                        gx += c * (grid.get(i + s, j) - grid.get(i - s, j));
                        gp += c * (grid.get(i, j + s) - grid.get(i, j - s));
                    }
                    (gx * gx + gp * gp) / (h * h)
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    let grad = pairwise_sum(&rows) * h * h;
    let norm = grid.trapezoid(|w| w * w);
    (grad, norm)
}

fn gradient_qcs(grid: &WignerGrid) -> f64 {
    let (g, n) = gradient_norms(grid);
    g / (2.0 * n)
}

/// `C² = ‖∇_{x,p} W‖² / (2‖W‖²)`, evaluated at `spec` and at half its
/// spacing; the finer value is returned and the two must agree within
/// [`REFINEMENT_TOL`].
pub fn qcs_wigner_gradient(rho: &DensityOperator, spec: &GridSpec) -> Result<QcsEstimate> {
    if spec.h > MAX_GRADIENT_SPACING {
        return Err(QcsError::GridTolerance(format!(
            "spacing {} exceeds {MAX_GRADIENT_SPACING}",
            spec.h
        )));
    }
    let coarse = wigner_eval(rho, spec)?;
    let fine = wigner_eval(rho, &spec.refined())?;
    let c_coarse = gradient_qcs(&coarse);
    let (g, n) = gradient_norms(&fine);
    let c_fine = g / (2.0 * n);
    let change = (c_fine - c_coarse).abs();
    if change > REFINEMENT_TOL {
        return Err(QcsError::GridTolerance(format!(
            "gradient QCS moved by {change:.3e} under refinement"
        )));
    }
    let purity = 2.0 * std::f64::consts::PI * n;
    Ok(QcsEstimate::from_parts(c_fine * purity, purity, Method::WignerGradient, 0.0)?
        .with_uncertainty(change))
}

/// Gradient route on the default grid.
pub fn qcs_wigner_gradient_default(rho: &DensityOperator) -> Result<QcsEstimate> {
    qcs_wigner_gradient(rho, &GridSpec::default_for(rho)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{coherent, fock, thermal};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cut(d: usize) -> FockCutoff {
        FockCutoff::new(d).unwrap()
    }

    #[test]
    fn vacuum_and_single_photon() {
        let vac = fock(0, cut(4)).unwrap();
        for (x, p) in [(0.0f64, 0.0f64), (0.3, -0.7), (1.5, 0.2)] {
            let expected = (-(x * x + p * p)).exp() / PI;
            assert_abs_diff_eq!(wigner_at(&vac, x, p).unwrap(), expected, epsilon = 1e-15);
        }
        let one = fock(1, cut(4)).unwrap();
        assert_abs_diff_eq!(wigner_at(&one, 0.0, 0.0).unwrap(), -1.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn coherent_state_centre_fixes_the_p_sign() {
        let alpha = Complex64::new(0.6, 0.9);
        let rho = coherent(alpha, cut(40)).unwrap();
        let (x0, p0) = (2f64.sqrt() * alpha.re, 2f64.sqrt() * alpha.im);
        for (dx, dp) in [(0.0f64, 0.0f64), (0.4, -0.2), (-0.3, 0.5)] {
            let expected = (-(dx * dx + dp * dp)).exp() / PI;
            let got = wigner_at(&rho, x0 + dx, p0 + dp).unwrap();
            assert_abs_diff_eq!(got, expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn diagonal_and_general_kernels_agree() {
        let rho = thermal(0.6, cut(50)).unwrap();
        let pops = rho.populations();
        let mut buf = Vec::new();
        for (x, p) in [(0.0, 0.0), (1.1, -0.4), (3.0, 2.5), (-4.2, 0.3)] {
            let a = wigner_diagonal(&pops, x, p);
            let b = wigner_general(rho.matrix(), x, p, &mut buf);
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalization_and_purity_on_default_grid() {
        let rho = thermal(0.5, cut(40)).unwrap();
        let grid = wigner_eval(&rho, &GridSpec::default_for(&rho).unwrap()).unwrap();
        assert_abs_diff_eq!(grid.integral(), rho.trace(), epsilon = 1e-6);
        assert_abs_diff_eq!(grid.purity(), 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn too_small_grid_is_rejected() {
        let rho = thermal(0.5, cut(40)).unwrap();
        let spec = GridSpec::square(1.0, 0.04).unwrap();
        assert!(matches!(wigner_eval(&rho, &spec), Err(QcsError::GridTolerance(_))));
    }

    #[test]
    fn origin_jet_matches_finite_differences() {
        let rho = crate::states::squeezed_vacuum(0.4, cut(40)).unwrap();
        let rho = crate::states::rotate(&rho, 0.3).unwrap();
        let jet = origin_jet(&rho).unwrap();
        let h = 1e-3;
        let w = |x: f64, p: f64| wigner_at(&rho, x, p).unwrap();
        let d2x = (w(h, 0.0) - 2.0 * w(0.0, 0.0) + w(-h, 0.0)) / (h * h);
        let d2p = (w(0.0, h) - 2.0 * w(0.0, 0.0) + w(0.0, -h)) / (h * h);
        assert_abs_diff_eq!(jet.value, w(0.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(jet.d2x, d2x, epsilon = 1e-5);
        assert_abs_diff_eq!(jet.d2p, d2p, epsilon = 1e-5);
    }

    #[test]
    fn laplacian_route_on_vacuum() {
        let vac = fock(0, cut(3)).unwrap();
        let jet = origin_jet(&vac).unwrap();
        assert_abs_diff_eq!(jet.value, 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.laplacian(), -4.0 / PI, epsilon = 1e-14);
        let est = qcs_wigner_laplacian(&vac).unwrap();
        assert_abs_diff_eq!(est.c_squared, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gradient_route_on_vacuum_and_fock() {
        let vac = fock(0, cut(3)).unwrap();
        let est = qcs_wigner_gradient_default(&vac).unwrap();
        assert_abs_diff_eq!(est.c_squared, 1.0, epsilon = 1e-4);
        let one = fock(1, cut(3)).unwrap();
        let est = qcs_wigner_gradient_default(&one).unwrap();
        assert_abs_diff_eq!(est.c_squared, 3.0, epsilon = 1e-3);
        let coarse = GridSpec::square(5.0, 0.1).unwrap();
        assert!(qcs_wigner_gradient(&one, &coarse).is_err());
    }

    #[test]
    fn binary_and_csv_export() {
        let rho = fock(1, cut(3)).unwrap();
        let grid = wigner_eval(&rho, &GridSpec::square(6.0, 0.5).unwrap()).unwrap();
        let bytes = grid.to_binary();
        assert_eq!(&bytes[..4], b"WGRD");
        assert_eq!(bytes.len(), 56 + 8 * grid.values.len());
        assert_eq!(WignerGrid::from_binary(&bytes).unwrap(), grid);
        assert!(WignerGrid::from_binary(&bytes[..bytes.len() - 1]).is_err());
        let csv = grid.to_csv();
        assert!(csv.starts_with("x,p,W\n"));
        assert_eq!(csv.lines().count(), 1 + grid.values.len());
    }
}
