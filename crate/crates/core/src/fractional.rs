//! Discrete fractional calculus on a uniform time grid: the L1 Caputo
//! derivative, the product-trapezoid fractional integral, the
//! distributed-order operator, and the Mittag-Leffler function on the
//! negative real axis.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mixing::MixingMeasure;
use crate::quad::{self, QuadOptions};
use crate::special::{gamma, rgamma};

/// Uniform grid `t_j = j · dt`, `j = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("{dt} must be positive")));
        }
        if n < 1 {
            return Err(Error::param("n", "need at least one step"));
        }
        Ok(Self { dt, n })
    }

    /// Grid with `dt` reaching `t_final` (rounded to the nearest step count).
    pub fn covering(dt: f64, t_final: f64) -> Result<Self> {
        let n = (t_final / dt).round().max(1.0) as usize;
        Self::new(dt, n)
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t(self.n)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.t(j)).collect()
    }

    /// Index of `t` when it lies on the grid (to a relative 1e-9).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let j = (t / self.dt).round();
        if j < 0.0 || j as usize > self.n {
            return None;
        }
        ((j * self.dt - t).abs() <= 1e-9 * self.dt.max(t.abs())).then_some(j as usize)
    }
}

fn check_order(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("{beta} must lie strictly inside (0, 1)")));
    }
    Ok(())
}

/// L1 weights `b_k = (k+1)^{1-β} - k^{1-β}`.
pub(crate) fn l1_weights(beta: f64, n: usize) -> Vec<f64> {
    let p = 1.0 - beta;
    (0..n).map(|k| ((k + 1) as f64).powf(p) - (k as f64).powf(p)).collect()
}

/// L1 scale `dt^{-β} / Γ(2-β)`.
pub(crate) fn l1_scale(beta: f64, dt: f64) -> f64 {
    dt.powf(-beta) / gamma(2.0 - beta)
}

/// L1 discretization of the Caputo derivative. Entry 0 is 0.
pub fn caputo_l1(grid: &TimeGrid, samples: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_order(beta)?;
    if samples.len() < 2 {
        return Err(Error::param("samples", "need at least two samples"));
    }
    if samples.len() > grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: samples.len() });
    }
    let n = samples.len() - 1;
    let b = l1_weights(beta, n);
    let scale = l1_scale(beta, grid.dt);
    let mut out = vec![0.0; n + 1];
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        // oldest increment first
        let mut acc = 0.0;
        for i in 0..j {
            acc += b[j - 1 - i] * (samples[i + 1] - samples[i]);
        }
        *slot = scale * acc;
    }
    Ok(out)
}

/// Product-trapezoid approximation of the Riemann-Liouville integral J^α:
/// `g` is interpolated linearly and the kernel is integrated exactly.
pub fn fractional_integral(grid: &TimeGrid, samples: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", format!("{alpha} must be positive")));
    }
    if samples.len() > grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: samples.len() });
    }
    let n = samples.len().saturating_sub(1);
    let c = grid.dt.powf(alpha) / gamma(alpha + 2.0);
    let p = |k: f64| k.powf(alpha + 1.0);
    let mut out = vec![0.0; n + 1];
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        let jf = j as f64;
        let mut acc = (p(jf - 1.0) - (jf - 1.0 - alpha) * jf.powf(alpha)) * samples[0];
        for (k, s) in samples.iter().enumerate().take(j).skip(1) {
            let m = (j - k) as f64;
            acc += (p(m + 1.0) - 2.0 * p(m) + p(m - 1.0)) * s;
        }
        acc += samples[j];
        *slot = c * acc;
    }
    Ok(out)
}

/// Distributed-order derivative: μ-weighted sum of L1 Caputo derivatives over
/// the measure's atoms and frozen quadrature nodes.
pub fn distributed_caputo(grid: &TimeGrid, samples: &[f64], measure: &MixingMeasure) -> Result<Vec<f64>> {
    let mut out = vec![0.0; samples.len()];
    for atom in measure.components() {
        let d = caputo_l1(grid, samples, atom.beta)?;
        for (o, v) in out.iter_mut().zip(&d) {
            *o += atom.weight * v;
        }
    }
    Ok(out)
}

/// |z| at or below which the power series is used.
pub const ML_SERIES_RADIUS: f64 = 1.0;
/// |z| at or above which the algebraic asymptotic expansion is used.
pub const ML_ASYMPTOTIC_RADIUS: f64 = 50.0;
/// Cap on asymptotic terms.
pub const ML_ASYMPTOTIC_TERMS: usize = 20;

/// Mittag-Leffler function `E_β(z)` for `β ∈ (0, 1]`, `z ≤ 0`.
///
/// Power series for `|z| ≤ 1`, the Laplace-type integral representation
/// `E_β(-x) = sin(βπ)/(βπ) ∫_0^∞ x e^{-σ^{1/β}} / (σ² + 2σx cos βπ + x²) dσ`
/// for `1 < |z| < 50`, and `-Σ_{k≥1} z^{-k}/Γ(1-βk)` beyond.
pub fn mittag_leffler(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param("beta", format!("{beta} outside (0, 1]")));
    }
    if !(z <= 0.0) || !z.is_finite() {
        return Err(Error::param("z", format!("{z}: only finite z <= 0 is supported")));
    }
    let x = -z;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x <= ML_SERIES_RADIUS {
        return Ok(ml_series(beta, z));
    }
    if beta == 1.0 {
        return Ok(z.exp());
    }
    if x >= ML_ASYMPTOTIC_RADIUS {
        return Ok(ml_asymptotic(beta, z));
    }
    ml_integral(beta, x)
}

pub(crate) fn ml_series(beta: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut zk = 1.0;
    for k in 0..400 {
        let term = zk * rgamma(beta * k as f64 + 1.0);
        sum += term;
        if k > 3 && term.abs() <= 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        zk *= z;
    }
    sum
}

pub(crate) fn ml_asymptotic(beta: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut zk = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..=ML_ASYMPTOTIC_TERMS {
        zk /= z;
        let term = -zk * rgamma(1.0 - beta * k as f64);
        if term != 0.0 {
            // stop at the smallest term of the divergent series
            if term.abs() > prev {
                break;
            }
            prev = term.abs();
        }
        sum += term;
    }
    sum
}

pub(crate) fn ml_integral(beta: f64, x: f64) -> Result<f64> {
    let (s, c) = (beta * PI).sin_cos();
    let p = 1.0 / beta;
    let sigma_max = 46f64.powf(beta);
    let peak = (-x * c).max(0.0);
    let width = (x * s).max(1e-12);
    let breaks = [peak - 4.0 * width, peak - width, peak, peak + width, peak + 4.0 * width, 1.0];
    let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-14, max_intervals: 4000 };
    let integrand = |sigma: f64| x * (-sigma.powf(p)).exp() / (sigma * sigma + 2.0 * sigma * x * c + x * x);
    let r = quad::integrate(integrand, 0.0, sigma_max, &breaks, opts).map_err(|r| Error::QuadratureNonConvergence {
        context: format!("Mittag-Leffler beta={beta}, z={}", -x),
        error: r.error,
    })?;
    Ok(s / (beta * PI) * r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dt: f64, t: f64) -> TimeGrid {
        TimeGrid::covering(dt, t).unwrap()
    }

    /// Caputo derivative by adaptive quadrature of the defining integral,
    /// for a smooth `g'` given in closed form.
    fn caputo_oracle(dg: impl Fn(f64) -> f64, beta: f64, t: f64) -> f64 {
        // substitution s = t - u^{1/(1-β)} removes the endpoint singularity
        let p = 1.0 / (1.0 - beta);
        let umax = t.powf(1.0 - beta);
        let r = quad::integrate(
            |u: f64| dg(t - u.powf(p)) * p * u.powf(p - 1.0) * u.powf(-beta * p),
            0.0,
            umax,
            &[],
            QuadOptions::default(),
        )
        .unwrap();
        r.value / gamma(1.0 - beta)
    }

    #[test]
    fn caputo_of_constant_is_zero() {
        let g = grid(0.01, 1.0);
        let d = caputo_l1(&g, &vec![3.5; g.len()], 0.4).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn caputo_of_linear_function() {
        let g = grid(1e-3, 1.0);
        let s: Vec<f64> = g.points();
        let d = caputo_l1(&g, &s, 0.5).unwrap();
        let oracle = caputo_oracle(|_| 1.0, 0.5, 1.0);
        assert!((oracle - 1.0 / gamma(1.5)).abs() < 1e-10);
        let rel = (d[g.n] - oracle).abs() / oracle;
        assert!(rel < 0.02, "rel={rel}");
    }

    #[test]
    fn caputo_of_square() {
        let g = grid(1e-3, 1.0);
        let s: Vec<f64> = g.points().iter().map(|t| t * t).collect();
        let d = caputo_l1(&g, &s, 0.3).unwrap();
        let oracle = caputo_oracle(|t| 2.0 * t, 0.3, 1.0);
        assert!((oracle - 2.0 / gamma(2.7)).abs() < 1e-9);
        assert!((d[g.n] - oracle).abs() / oracle < 1e-3);
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn caputo_rejects_bad_order_and_short_input() {
        let g = grid(0.1, 1.0);
        assert!(caputo_l1(&g, &[0.0, 1.0], 1.0).is_err());
        assert!(caputo_l1(&g, &[0.0, 1.0], 0.0).is_err());
        assert!(caputo_l1(&g, &[0.0], 0.5).is_err());
    }

    #[test]
    fn fractional_integral_examples() {
        let g = grid(0.01, 2.0);
        let ones = vec![1.0; g.len()];
        let j1 = fractional_integral(&g, &ones, 1.0).unwrap();
        for (j, v) in j1.iter().enumerate() {
            assert!((v - g.t(j)).abs() < 1e-12);
        }
        let jh = fractional_integral(&g, &ones, 0.5).unwrap();
        for (j, v) in jh.iter().enumerate() {
            let exact = g.t(j).sqrt() / gamma(1.5);
            assert!((v - exact).abs() < 1e-12, "j={j}");
        }
        assert!(fractional_integral(&g, &ones, 0.0).is_err());
    }

    #[test]
    fn integral_of_derivative_matches_l1() {
        let g = grid(1e-3, 1.0);
        let f = |t: f64| (2.0 * t).sin() + t * t;
        let df = |t: f64| 2.0 * (2.0 * t).cos() + 2.0 * t;
        let s: Vec<f64> = g.points().iter().map(|&t| f(t)).collect();
        let ds: Vec<f64> = g.points().iter().map(|&t| df(t)).collect();
        let beta = 0.6;
        let via_integral = fractional_integral(&g, &ds, 1.0 - beta).unwrap();
        let via_l1 = caputo_l1(&g, &s, beta).unwrap();
        let diff = (via_integral[g.n] - via_l1[g.n]).abs();
        assert!(diff < 5.0 * g.dt, "diff={diff}");
    }

    #[test]
    fn distributed_caputo_single_atom_is_bit_identical() {
        let g = grid(0.01, 1.0);
        let s: Vec<f64> = g.points().iter().map(|t| t.exp()).collect();
        let m = MixingMeasure::single(0.37).unwrap();
        assert_eq!(distributed_caputo(&g, &s, &m).unwrap(), caputo_l1(&g, &s, 0.37).unwrap());
    }

    #[test]
    fn distributed_caputo_is_linear_in_measure() {
        let g = grid(0.01, 1.0);
        let s: Vec<f64> = g.points().iter().map(|t| t.exp()).collect();
        let m = MixingMeasure::from_atoms(&[(0.3, 0.5), (0.7, 0.5)]).unwrap();
        let a = distributed_caputo(&g, &s, &m).unwrap();
        let b = distributed_caputo(&g, &s, &m.scaled(2.0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() <= 1e-14 * y.abs().max(1.0));
        }
    }

    #[test]
    fn distributed_caputo_two_atoms_power_rule() {
        let g = grid(1e-3, 1.0);
        let m = MixingMeasure::from_atoms(&[(0.3, 0.5), (0.7, 0.5)]).unwrap();
        let d = distributed_caputo(&g, &g.points(), &m).unwrap();
        let exact = 0.5 / gamma(1.7) + 0.5 / gamma(1.3);
        assert!((d[g.n] - exact).abs() / exact < 0.02);
    }

    #[test]
    fn laplace_transform_of_l1_output() {
        // g = e^{-t}: L[D^β g](s) = s^β/(s+1) - s^{β-1}
        let g = grid(1e-3, 40.0);
        let s: Vec<f64> = g.points().iter().map(|t| (-t).exp()).collect();
        let beta = 0.5;
        let d = caputo_l1(&g, &s, beta).unwrap();
        for &sv in &[1.0f64, 2.0] {
            let ys: Vec<f64> = g.points().iter().zip(&d).map(|(t, v)| v * (-sv * t).exp()).collect();
            // integrable t^{-β} singularity in the first cell: add its exact share
            let numeric = quad::trapezoid(&g.points()[1..], &ys[1..]) + d[1] * g.dt / (1.0 - beta);
            let exact = sv.powf(beta) / (sv + 1.0) - sv.powf(beta - 1.0);
            assert!((numeric - exact).abs() < 1e-3, "s={sv}: {numeric} vs {exact}");
        }
    }

    #[test]
    fn mittag_leffler_special_values() {
        for &b in &[0.2, 0.5, 0.9, 1.0] {
            assert_eq!(mittag_leffler(b, 0.0).unwrap(), 1.0);
        }
        for i in 0..=50 {
            let z = -5.0 * i as f64 / 50.0;
            let v = mittag_leffler(1.0, z).unwrap();
            assert!((v - z.exp()).abs() / z.exp() < 1e-10);
        }
        assert!(mittag_leffler(0.5, 0.1).is_err());
        assert!(mittag_leffler(1.2, -1.0).is_err());
    }

    #[test]
    fn mittag_leffler_half_matches_erfc_identity() {
        // E_{1/2}(-1) = e · erfc(1), erfc by independent quadrature
        let tail = quad::integrate_to_infinity(|t: f64| (-t * t).exp(), 1.0, QuadOptions::default()).unwrap();
        let erfc1 = 2.0 / PI.sqrt() * tail.value;
        let expect = 1f64.exp() * erfc1;
        let v = mittag_leffler(0.5, -1.0).unwrap();
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        // and on the integral branch
        let tail = quad::integrate_to_infinity(|t: f64| (-t * t).exp(), 3.0, QuadOptions::default()).unwrap();
        let expect = 9f64.exp() * 2.0 / PI.sqrt() * tail.value;
        let v = mittag_leffler(0.5, -3.0).unwrap();
        assert!((v - expect).abs() / expect < 1e-10, "{v} vs {expect}");
    }

    #[test]
    fn mittag_leffler_crossovers_are_continuous() {
        for &b in &[0.1, 0.3, 0.5, 0.75, 0.9, 0.99] {
            let a = ml_series(b, -ML_SERIES_RADIUS);
            let c = ml_integral(b, ML_SERIES_RADIUS).unwrap();
            assert!((a - c).abs() < 1e-8 * a.abs(), "beta={b} series/integral {a} {c}");
            let a = ml_integral(b, ML_ASYMPTOTIC_RADIUS).unwrap();
            let c = ml_asymptotic(b, -ML_ASYMPTOTIC_RADIUS);
            assert!((a - c).abs() < 1e-8 * a.abs(), "beta={b} integral/asymptotic {a} {c}");
        }
    }

    #[test]
    fn mittag_leffler_is_completely_monotone_on_grid() {
        for &b in &[0.25, 0.5, 0.8, 0.99, 1.0] {
            let mut prev = f64::INFINITY;
            for i in 0..400 {
                let z = -(i as f64) * 0.25;
                let v = mittag_leffler(b, z).unwrap();
                assert!(v >= 0.0 && v <= prev + 1e-15, "beta={b}, z={z}: {v} > {prev}");
                prev = v;
            }
        }
    }

    #[test]
    fn time_grid_lookup() {
        let g = TimeGrid::covering(1e-3, 1.0).unwrap();
        assert_eq!(g.n, 1000);
        assert_eq!(g.index_of(0.25), Some(250));
        assert_eq!(g.index_of(0.2505), None);
        assert!(TimeGrid::new(0.0, 3).is_err());
    }
}
