//! Eigenfunction expansion with Mittag-Leffler modes for single-order problems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::DensityField;
use crate::error::{Error, Result};
use crate::fractional::mittag_leffler;
use crate::spatial::{GeneratorMatrix, Grid1D, ReducedGenerator};

/// Largest accepted off-diagonal of `Lᵀ R`.
pub const MAX_BIORTHOGONALITY_DEFECT: f64 = 1e-6;

/// Settings of [`decompose`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralOptions {
    /// Largest accepted `|Im λ| / max |λ|`.
    pub imag_tol: f64,
    /// Largest accepted residual norm.
    pub residual_tol: f64,
    pub inverse_iterations: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { imag_tol: 1e-8, residual_tol: 1e-6, inverse_iterations: 3 }
    }
}

/// Eigen-decomposition of the generator restricted to its dynamic nodes.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<Complex64>,
    /// Right eigenvectors on the full grid (columns, max-norm 1).
    pub right: DMatrix<f64>,
    /// Left eigenvectors on the dynamic nodes (columns, `l_k·r_k = 1`).
    pub left: DMatrix<f64>,
    /// `max_k |A r_k - λ_k r_k| / max(|λ_k|, 1)`.
    pub residual_norm: f64,
    /// `max_{j≠k} |l_j·r_k|`.
    pub biorthogonality_defect: f64,
    grid: Grid1D,
    reduced: ReducedGenerator,
}

fn inverse_iteration(m: &DMatrix<f64>, lambda: f64, iterations: usize) -> Result<DVector<f64>> {
    let n = m.nrows();
    let scale = lambda.abs().max(1.0);
    let shift = lambda + 1e-10 * scale;
    let mut s = m.clone();
    for i in 0..n {
        s[(i, i)] -= shift;
    }
    let lu = s.lu();
    // deterministic start with components in every direction
    let mut x = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0);
    for _ in 0..iterations {
        let y = lu.solve(&x).ok_or_else(|| Error::Spectral(format!("inverse iteration singular at λ = {lambda}")))?;
        let norm = y.amax();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Spectral(format!("inverse iteration diverged at λ = {lambda}")));
        }
        x = y / norm;
    }
    Ok(x)
}

/// Eigenvalues by Schur factorization, eigenvectors by inverse iteration.
/// Complex spectra, defective or ill-conditioned bases are rejected.
pub fn decompose(gen: &GeneratorMatrix, opts: &SpectralOptions) -> Result<SpectralDecomposition> {
    let reduced = gen.reduced()?;
    let a = &reduced.matrix;
    let m = a.nrows();
    let eig = a.clone().complex_eigenvalues();
    let lam_max = eig.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    if let Some(z) = eig.iter().find(|z| z.im.abs() > opts.imag_tol * lam_max) {
        return Err(Error::Spectral(format!("complex eigenvalue {z}; only real spectra are supported")));
    }
    let mut lambdas: Vec<f64> = eig.iter().map(|z| z.re).collect();
    lambdas.sort_by(|x, y| y.total_cmp(x));
    let at = a.transpose();
    let mut right_d = DMatrix::zeros(m, m);
    let mut left = DMatrix::zeros(m, m);
    let mut residual: f64 = 0.0;
    for (k, &lam) in lambdas.iter().enumerate() {
        let r = inverse_iteration(a, lam, opts.inverse_iterations)?;
        let l = inverse_iteration(&at, lam, opts.inverse_iterations)?;
        let res = (a * &r - &r * lam).amax() / lam.abs().max(1.0);
        residual = residual.max(res);
        let dot = l.dot(&r);
        if dot.abs() < 1e-14 * l.amax() {
            return Err(Error::Spectral(format!("left and right vectors orthogonal at λ = {lam}; defective basis")));
        }
        right_d.set_column(k, &r);
        left.set_column(k, &(l / dot));
    }
    if residual > opts.residual_tol {
        return Err(Error::Spectral(format!("eigen residual {residual:.3e} above {:.1e}", opts.residual_tol)));
    }
    let cross = left.transpose() * &right_d;
    let mut defect: f64 = 0.0;
    for j in 0..m {
        for k in 0..m {
            if j != k {
                defect = defect.max(cross[(j, k)].abs());
            }
        }
    }
    if !(defect <= MAX_BIORTHOGONALITY_DEFECT) {
        return Err(Error::Spectral(format!("biorthogonality defect {defect:.3e}; eigenbasis ill-conditioned")));
    }
    let mut right = DMatrix::zeros(gen.grid().len(), m);
    for k in 0..m {
        let col: Vec<f64> = right_d.column(k).iter().copied().collect();
        right.set_column(k, &DVector::from_vec(reduced.prolongate(&col)));
    }
    Ok(SpectralDecomposition {
        eigenvalues: lambdas.iter().map(|&l| Complex64::new(l, 0.0)).collect(),
        right,
        left,
        residual_norm: residual,
        biorthogonality_defect: defect,
        grid: *gen.grid(),
        reduced,
    })
}

impl SpectralDecomposition {
    /// Expansion coefficients `c_k = l_k · u0` over the dynamic nodes.
    pub fn coefficients(&self, u0: &[f64]) -> Result<Vec<f64>> {
        if u0.len() != self.grid.len() {
            return Err(Error::DimensionMismatch { expected: self.grid.len(), got: u0.len() });
        }
        let ud = DVector::from_iterator(self.reduced.dynamic.len(), self.reduced.dynamic.iter().map(|&i| u0[i]));
        Ok((self.left.transpose() * ud).as_slice().to_vec())
    }
}

/// `v(t) = Σ_k c_k E_β(λ_k t^β) r_k`.
pub fn solve_spectral(decomp: &SpectralDecomposition, beta: f64, u0: &[f64], times: &[f64]) -> Result<DensityField> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param("beta", format!("{beta} must lie in (0, 1]")));
    }
    let c = decomp.coefficients(u0)?;
    let n = decomp.grid.len();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param("times", "must be finite and nonnegative"));
        }
        let tb = t.powf(beta);
        let mut row = vec![0.0; n];
        for (k, ck) in c.iter().enumerate() {
            let e = mittag_leffler(beta, decomp.eigenvalues[k].re * tb)?;
            let a = ck * e;
            for (r, x) in row.iter_mut().zip(decomp.right.column(k).iter()) {
                *r += a * x;
            }
        }
        rows.push(row);
    }
    DensityField::new(decomp.grid, times.to_vec(), rows)
}
