//! Subordination `v = ∫ f_t(τ) u(τ) dτ`, the operator `G_γ` and the residual
//! check of the time-changed time-dependent equation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::field::DensityField;
use super::stepping::{solve_classical_at, solve_time_dependent_at, StepOptions};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::fractional::{distributed_caputo, TimeGrid};
use crate::quad;
use crate::spatial::GeneratorMatrix;
use crate::subordinators::InverseDensityTable;

/// Largest admissible `P(W_t > τ_max)` for subordination.
pub const MAX_TAIL_MASS: f64 = 1e-3;

/// Default internal step of the classical solves on the τ grid.
pub const DEFAULT_TAU_STEP: f64 = 1e-2;

/// Subordinated field with its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct Subordinated {
    /// Times `0` followed by the table's time grid.
    pub field: DensityField,
    /// Per table row, the inverse-density mass beyond the τ grid.
    pub tail_mass: Vec<f64>,
}

fn check_coverage(table: &InverseDensityTable) -> Result<Vec<f64>> {
    let tails: Vec<f64> = (0..table.t_grid().len()).map(|i| table.tail_mass(i)).collect();
    for (i, &tail) in tails.iter().enumerate() {
        if !(tail <= MAX_TAIL_MASS) {
            return Err(Error::TauCoverage { t: table.t_grid()[i], tail_mass: tail });
        }
    }
    Ok(tails)
}

fn check_field_on_tau(table: &InverseDensityTable, u: &DensityField) -> Result<()> {
    let tau = table.tau_grid();
    if u.times().len() != tau.len() || u.times().iter().zip(tau).any(|(a, b)| (a - b).abs() > 1e-12 * b.max(1.0)) {
        return Err(Error::GridMismatch("field times must equal the table's τ grid".into()));
    }
    Ok(())
}

/// Quadrature weights for `∫ g(τ) τ^γ dτ` on the nodes `tau` with `g`
/// interpolated linearly. `γ = 0` gives exactly the trapezoid weights.
pub fn power_weights(tau: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > -1.0) {
        return Err(Error::param("gamma", format!("{gamma} must exceed -1")));
    }
    if gamma == 0.0 {
        return Ok(quad::trapezoid_weights(tau));
    }
    let mut w = vec![0.0; tau.len()];
    let p0 = gamma + 1.0;
    let p1 = gamma + 2.0;
    for k in 0..tau.len().saturating_sub(1) {
        let (x0, x1) = (tau[k], tau[k + 1]);
        let h = x1 - x0;
        let m0 = (x1.powf(p0) - x0.powf(p0)) / p0;
        let m1 = (x1.powf(p1) - x0.powf(p1)) / p1;
        w[k] += (x1 * m0 - m1) / h;
        w[k + 1] += (m1 - x0 * m0) / h;
    }
    Ok(w)
}

/// `Σ_j w_j f_t(τ_j) u(τ_j, ·)` for every table row, preceded by `first`.
fn integrate_rows(table: &InverseDensityTable, u: &DensityField, weights: &[f64], first: Vec<f64>) -> Result<DensityField> {
    let n = u.grid().len();
    let mut rows = Vec::with_capacity(table.t_grid().len() + 1);
    rows.push(first);
    for i in 0..table.t_grid().len() {
        let f = table.row(i);
        let mut acc = vec![0.0; n];
        for (j, ur) in u.rows().iter().enumerate() {
            let c = weights[j] * f[j];
            if c == 0.0 {
                continue;
            }
            for (a, x) in acc.iter_mut().zip(ur) {
                *a += c * x;
            }
        }
        rows.push(acc);
    }
    let mut times = vec![0.0];
    times.extend_from_slice(table.t_grid());
    DensityField::new(*u.grid(), times, rows)
}

/// Subordinates a classical solution given on the table's τ grid.
pub fn subordinate(table: &InverseDensityTable, u: &DensityField) -> Result<Subordinated> {
    check_field_on_tau(table, u)?;
    let tail_mass = check_coverage(table)?;
    let w = quad::trapezoid_weights(table.tau_grid());
    let field = integrate_rows(table, u, &w, u.row(0).to_vec())?;
    Ok(Subordinated { field, tail_mass })
}

/// `v(t) = ∫ f_t(τ) u(τ) dτ` with `u` the Crank-Nicolson solution of
/// `du/dτ = A u` on the table's τ grid. Row `t = 0` is `u0` itself.
pub fn solve_subordination(
    gen: &GeneratorMatrix,
    u0: &[f64],
    table: &InverseDensityTable,
    opts: &StepOptions,
) -> Result<Subordinated> {
    check_coverage(table)?;
    let mut o = *opts;
    o.max_step.get_or_insert(DEFAULT_TAU_STEP);
    let u = solve_classical_at(gen, u0, table.tau_grid(), &o)?;
    subordinate(table, &u)
}

/// `G_γ v(t) = ∫ f_t(τ) τ^γ u(τ) dτ` for `u` given on the table's τ grid.
///
/// The `τ^γ` factor is integrated exactly against the piecewise-linear
/// interpolant of `f u`, so `γ < 0` needs no special edge cell. Row `t = 0`
/// is `u(0)` for `γ = 0` and zero otherwise (the true limit is unbounded
/// when `γ < 0`).
pub fn apply_g(table: &InverseDensityTable, gamma: f64, u: &DensityField) -> Result<DensityField> {
    if !(gamma > -1.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("{gamma} must lie in (-1, 1)")));
    }
    check_field_on_tau(table, u)?;
    check_coverage(table)?;
    let w = power_weights(table.tau_grid(), gamma)?;
    let first = if gamma == 0.0 {
        u.row(0).to_vec()
    } else {
        if gamma < 0.0 {
            log::debug!("G_γ at t = 0 is unbounded for γ < 0; row left at zero");
        }
        vec![0.0; u.grid().len()]
    };
    integrate_rows(table, u, &w, first)
}

/// `max |G_γ(τ^δ u) - G_{γ+δ} u|` over all table rows and nodes, with the
/// scale `max |G_{γ+δ} u|`.
pub fn semigroup_defect(table: &InverseDensityTable, gamma: f64, delta: f64, u: &DensityField) -> Result<(f64, f64)> {
    check_field_on_tau(table, u)?;
    let weighted: Vec<Vec<f64>> = u
        .rows()
        .iter()
        .zip(table.tau_grid())
        .map(|(r, &tau)| {
            let p = if delta == 0.0 { 1.0 } else { tau.powf(delta) };
            r.iter().map(|x| p * x).collect()
        })
        .collect();
    let uw = DensityField::new(*u.grid(), u.times().to_vec(), weighted)?;
    let lhs = apply_g(table, gamma, &uw)?;
    let rhs = apply_g(table, gamma + delta, u)?;
    let mut defect: f64 = 0.0;
    for (a, b) in lhs.rows().iter().zip(rhs.rows()).skip(1) {
        for (x, y) in a.iter().zip(b) {
            defect = defect.max((x - y).abs());
        }
    }
    Ok((defect, rhs.max_abs()))
}

/// Settings of [`verify_time_changed_equation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResidualOptions {
    /// Residuals are taken at `t ≥ skip_fraction · T`.
    pub skip_fraction: f64,
    pub tolerance: f64,
    pub step: StepOptions,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self { skip_fraction: 0.1, tolerance: 3e-2, step: StepOptions::default().with_max_step(DEFAULT_TAU_STEP) }
    }
}

/// Outcome of [`verify_time_changed_equation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub scale: f64,
    pub normalized: f64,
    /// Time and node of the largest residual.
    pub worst_t: f64,
    pub worst_x: f64,
    pub check: Check,
}

/// Residual of `D_μ v = B v + ((γ+1)/2) A G_γ v` where `v` subordinates the
/// solution `u` of `du/dτ = B u + ((γ+1) τ^γ/2) A u` and `G_γ` acts on that
/// `u`. `D_μ` is the L1 distributed derivative on the table's time grid,
/// which must be `dt, 2dt, ..., N dt`. The maximum over interior nodes and
/// times past the skip fraction is normalized by `max |A v|` over the same set.
pub fn verify_time_changed_equation(
    a: &GeneratorMatrix,
    b: &DMatrix<f64>,
    gamma: f64,
    table: &InverseDensityTable,
    u0: &[f64],
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    let tg = table.t_grid();
    let dt = tg[0];
    let grid = TimeGrid::new(dt, tg.len())?;
    if tg.iter().enumerate().any(|(k, &t)| (t - grid.t(k + 1)).abs() > 1e-9 * t) {
        return Err(Error::GridMismatch("table time grid must be dt, 2dt, ..., N dt".into()));
    }
    let u = solve_time_dependent_at(a, b, gamma, u0, table.tau_grid(), &opts.step)?;
    let v = subordinate(table, &u)?.field;
    let g = apply_g(table, gamma, &u)?;
    let n = a.grid().len();
    let nt = grid.len();
    let mut dv = vec![vec![0.0; n]; nt];
    for i in 1..n - 1 {
        let series: Vec<f64> = v.rows().iter().map(|r| r[i]).collect();
        let d = distributed_caputo(&grid, &series, table.measure())?;
        for (k, val) in d.into_iter().enumerate() {
            dv[k][i] = val;
        }
    }
    let c = (gamma + 1.0) / 2.0;
    let start = ((opts.skip_fraction * grid.t_final() / dt).ceil() as usize).max(1);
    let (mut worst, mut scale, mut worst_t, mut worst_x) = (0.0f64, 0.0f64, 0.0, 0.0);
    for k in start..nt {
        let av = a.apply(v.row(k))?;
        let ag = a.apply(g.row(k))?;
        for i in 1..n - 1 {
            let bv: f64 = (0..n).map(|j| b[(i, j)] * v.row(k)[j]).sum();
            let r = (dv[k][i] - bv - c * ag[i]).abs();
            scale = scale.max(av[i].abs());
            if r > worst {
                worst = r;
                worst_t = grid.t(k);
                worst_x = a.grid().x(i);
            }
        }
    }
    let normalized = if scale > 0.0 { worst / scale } else { worst };
    let check = Check::with_error("time_changed_residual", worst, 0.0, normalized, opts.tolerance)
        .note(format!("normalized by max|Av| = {scale:.3e}; worst at t = {worst_t}, x = {worst_x:.4}"));
    Ok(ResidualReport { max_residual: worst, scale, normalized, worst_t, worst_x, check })
}
