//! Field comparison metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::DensityField;
use crate::spatial::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    /// `max |a - b|`.
    pub sup: f64,
    /// `(Σ w_i (a_i - b_i)²)^{1/2}` with trapezoid weights.
    pub l2: f64,
    /// Largest gap between the normalized cumulative trapezoid profiles;
    /// absent when either profile has no positive mass.
    pub ks: Option<f64>,
}

fn same_grid(a: &Grid1D, b: &Grid1D) -> bool {
    a.n == b.n && (a.a - b.a).abs() <= 1e-12 && (a.b - b.b).abs() <= 1e-12
}

/// Normalized cumulative trapezoid profile.
fn profile(grid: &Grid1D, v: &[f64]) -> Option<Vec<f64>> {
    let h = grid.h();
    let mut c = vec![0.0; v.len()];
    for i in 1..v.len() {
        c[i] = c[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
    }
    let total = *c.last()?;
    if !(total > 0.0) {
        return None;
    }
    Some(c.into_iter().map(|x| x / total).collect())
}

/// Metrics of two nodal vectors on one grid.
pub fn compare_vectors(grid: &Grid1D, a: &[f64], b: &[f64]) -> Result<FieldMetrics> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: a.len().min(b.len()) });
    }
    let sup = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let l2 = grid.weights().iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y) * (x - y)).sum::<f64>().sqrt();
    let ks = match (profile(grid, a), profile(grid, b)) {
        (Some(p), Some(q)) => Some(p.iter().zip(&q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)),
        _ => None,
    };
    Ok(FieldMetrics { sup, l2, ks })
}

/// Metrics of two fields at time `t`.
pub fn compare_fields(a: &DensityField, b: &DensityField, t: f64) -> Result<FieldMetrics> {
    if !same_grid(a.grid(), b.grid()) {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid(), b.grid())));
    }
    compare_vectors(a.grid(), a.at(t)?, b.at(t)?)
}
