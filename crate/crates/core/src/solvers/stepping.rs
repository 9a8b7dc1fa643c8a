//! Implicit time stepping with the boundary rows kept as algebraic constraints.

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use super::field::DensityField;
use crate::error::{Error, Result};
use crate::fractional::{l1_scale, l1_weights, TimeGrid};
use crate::mixing::MixingMeasure;
use crate::spatial::{GeneratorMatrix, Grid1D, RowKind};

/// Settings of the Crank-Nicolson stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepOptions {
    /// Implicitness; 0.5 is Crank-Nicolson.
    pub theta: f64,
    /// Leading steps replaced by two backward-Euler half steps each.
    pub startup_steps: usize,
    /// Longest internal step when output times are far apart.
    pub max_step: Option<f64>,
    /// Boundary residual of `u0` above which it is projected.
    pub projection_tol: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { theta: 0.5, startup_steps: 2, max_step: None, projection_tol: 1e-12 }
    }
}

impl StepOptions {
    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = Some(max_step);
        self
    }
}

/// Discrete unit mass at the node nearest `x0`: `e_k / h`.
pub fn delta_initial(grid: &Grid1D, x0: f64) -> Vec<f64> {
    let mut u = vec![0.0; grid.len()];
    u[grid.nearest_node(x0)] = 1.0 / grid.h();
    u
}

/// Makes `u0` satisfy the constraint rows, warning when it had to change.
pub(crate) fn admissible_initial(gen: &GeneratorMatrix, u0: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = gen.grid().len();
    if u0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u0.len() });
    }
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("u0", "initial data must be finite"));
    }
    let res = gen.boundary_residual(u0)?;
    if res > tol {
        log::warn!("initial data violates the boundary rows by {res:.3e}; projecting");
        gen.project(u0)
    } else {
        Ok(u0.to_vec())
    }
}

/// One factorized system `S u_new = R u_old` where, on dynamic rows,
/// `S = I - θ M`, `R = I + (1-θ) M` for a step increment `M`, and on
/// constraint rows `S` is the generator row and the right side is zero.
pub(crate) struct ConstrainedStep {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    explicit: Option<DMatrix<f64>>,
    kinds: Vec<RowKind>,
}

impl ConstrainedStep {
    pub(crate) fn new(gen: &GeneratorMatrix, increment: &DMatrix<f64>, theta: f64, step: usize) -> Result<Self> {
        let n = gen.grid().len();
        let kinds = gen.kinds().to_vec();
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            match kinds[i] {
                RowKind::Dynamic => {
                    for j in 0..n {
                        s[(i, j)] = -theta * increment[(i, j)];
                    }
                    s[(i, i)] += 1.0;
                }
                RowKind::Constraint => {
                    for j in 0..n {
                        s[(i, j)] = gen.matrix()[(i, j)];
                    }
                }
            }
        }
        let lu = s.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularSystem { step });
        }
        let explicit = (theta < 1.0).then(|| increment * (1.0 - theta));
        Ok(Self { lu, explicit, kinds })
    }

    /// Solves with the dynamic right side `u + (1-θ) M u`.
    pub(crate) fn advance(&self, u: &[f64], step: usize) -> Result<Vec<f64>> {
        let mut rhs = DVector::from_column_slice(u);
        if let Some(e) = &self.explicit {
            rhs += e * DVector::from_column_slice(u);
        }
        self.finish(rhs, step)
    }

    /// Solves with an arbitrary dynamic right side.
    pub(crate) fn solve(&self, rhs: Vec<f64>, step: usize) -> Result<Vec<f64>> {
        self.finish(DVector::from_vec(rhs), step)
    }

    fn finish(&self, mut rhs: DVector<f64>, step: usize) -> Result<Vec<f64>> {
        for (i, k) in self.kinds.iter().enumerate() {
            if *k == RowKind::Constraint {
                rhs[i] = 0.0;
            }
        }
        let x = self.lu.solve(&rhs).ok_or(Error::SingularSystem { step })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { step });
        }
        Ok(x.as_slice().to_vec())
    }
}

/// Steps `u` across one interval with total increment `M` (the operator
/// integrated over the interval), split into `parts` equal substeps.
struct IntervalStepper {
    main: ConstrainedStep,
    startup: Option<ConstrainedStep>,
}

impl IntervalStepper {
    fn new(gen: &GeneratorMatrix, sub_increment: &DMatrix<f64>, opts: &StepOptions, with_startup: bool, step: usize) -> Result<Self> {
        let main = ConstrainedStep::new(gen, sub_increment, opts.theta, step)?;
        let startup = if with_startup && opts.theta < 1.0 {
            Some(ConstrainedStep::new(gen, &(sub_increment * 0.5), 1.0, step)?)
        } else {
            None
        };
        Ok(Self { main, startup })
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::param("times", "output times must start at 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("times", "output times must be finite and strictly increasing"));
    }
    Ok(())
}

fn substeps(dt: f64, max_step: Option<f64>) -> usize {
    match max_step {
        Some(m) if m > 0.0 => ((dt / m) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
        _ => 1,
    }
}

/// Generic driver: the operator increment over `[t0, t1]` is supplied by
/// `increment(t0, t1)`; the factorization is reused while the increment is
/// unchanged (detected through the key).
fn march<K: PartialEq + Copy>(
    gen: &GeneratorMatrix,
    u0: &[f64],
    times: &[f64],
    opts: &StepOptions,
    key: impl Fn(f64, f64) -> Option<K>,
    increment: impl Fn(f64, f64) -> DMatrix<f64>,
) -> Result<DensityField> {
    check_times(times)?;
    if !(opts.theta >= 0.5 && opts.theta <= 1.0) {
        return Err(Error::param("theta", "must lie in [0.5, 1]"));
    }
    let mut u = admissible_initial(gen, u0, opts.projection_tol)?;
    let mut rows = vec![u.clone()];
    let mut cache: Option<(K, IntervalStepper)> = None;
    let mut step = 0usize;
    for w in times.windows(2) {
        let parts = substeps(w[1] - w[0], opts.max_step);
        let h = (w[1] - w[0]) / parts as f64;
        for p in 0..parts {
            let t0 = w[0] + p as f64 * h;
            let t1 = if p + 1 == parts { w[1] } else { t0 + h };
            step += 1;
            let in_startup = step <= opts.startup_steps;
            let k = if in_startup { None } else { key(t0, t1) };
            let stepper_ok = matches!((&cache, k), (Some((ck, _)), Some(k)) if *ck == k);
            let fresh;
            let stepper = if stepper_ok {
                &cache.as_ref().expect("checked").1
            } else {
                let s = IntervalStepper::new(gen, &increment(t0, t1), opts, in_startup, step)?;
                match k {
                    Some(k) => {
                        cache = Some((k, s));
                        &cache.as_ref().expect("just set").1
                    }
                    None => {
                        fresh = s;
                        &fresh
                    }
                }
            };
            u = match (&stepper.startup, in_startup) {
                (Some(be), true) => {
                    let half = be.solve(u, step)?;
                    be.solve(half, step)?
                }
                _ => stepper.main.advance(&u, step)?,
            };
        }
        rows.push(u.clone());
    }
    DensityField::new(*gen.grid(), times.to_vec(), rows)
}

/// Crank-Nicolson solution of `du/dt = A u` at the points of `grid`.
pub fn solve_classical(gen: &GeneratorMatrix, u0: &[f64], grid: &TimeGrid, opts: &StepOptions) -> Result<DensityField> {
    solve_classical_at(gen, u0, &grid.points(), opts)
}

/// Crank-Nicolson solution of `du/dt = A u` at arbitrary increasing times
/// starting with 0. Factorizations are reused across equal step sizes.
pub fn solve_classical_at(gen: &GeneratorMatrix, u0: &[f64], times: &[f64], opts: &StepOptions) -> Result<DensityField> {
    let a = gen.matrix();
    march(gen, u0, times, opts, |t0, t1| Some((t1 - t0).to_bits()), |t0, t1| a * (t1 - t0))
}

/// Crank-Nicolson solution of `du/dt = B u + ((γ+1) t^γ / 2) A u`.
///
/// The coefficient enters through its exact cell integral
/// `(t1^{γ+1} - t0^{γ+1}) / 2`, which is finite on the first step even when
/// `γ < 0`. Constraint rows are those of `A`; `B` must be of lower order
/// (zero boundary rows).
pub fn solve_time_dependent(
    a: &GeneratorMatrix,
    b: &DMatrix<f64>,
    gamma: f64,
    u0: &[f64],
    grid: &TimeGrid,
    opts: &StepOptions,
) -> Result<DensityField> {
    solve_time_dependent_at(a, b, gamma, u0, &grid.points(), opts)
}

pub fn solve_time_dependent_at(
    a: &GeneratorMatrix,
    b: &DMatrix<f64>,
    gamma: f64,
    u0: &[f64],
    times: &[f64],
    opts: &StepOptions,
) -> Result<DensityField> {
    if !(gamma > -1.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("{gamma} must lie in (-1, 1)")));
    }
    let n = a.grid().len();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.nrows() });
    }
    for i in a.constraint_indices() {
        if b.row(i).iter().any(|&v| v != 0.0) {
            return Err(Error::param("B", "lower-order operator must vanish on constraint rows"));
        }
    }
    let am = a.matrix();
    let theta_of = |t: f64| t.powf(gamma + 1.0) / 2.0;
    if gamma == 0.0 && b.iter().all(|&v| v == 0.0) {
        // constant coefficient: identical to a classical run with A/2
        return march(a, u0, times, opts, |t0, t1| Some((t1 - t0).to_bits()), |t0, t1| am * ((t1 - t0) / 2.0));
    }
    march(a, u0, times, opts, |_, _| None::<u64>, |t0, t1| b * (t1 - t0) + am * (theta_of(t1) - theta_of(t0)))
}

/// Combined L1 lag weights `B_j = Σ_k w_k dt^{-β_k}/Γ(2-β_k) b^{(k)}_j`.
pub(crate) fn distributed_l1_weights(measure: &MixingMeasure, dt: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for atom in measure.components() {
        let s = atom.weight * l1_scale(atom.beta, dt);
        for (o, b) in out.iter_mut().zip(l1_weights(atom.beta, n)) {
            *o += s * b;
        }
    }
    out
}

/// Implicit L1 stepping of `D_μ v = A v`.
///
/// With `B_j` the combined lag weights, step `n` solves
/// `(I - A/B_0) v_n = v_{n-1} - (1/B_0) Σ_{j≥1} B_j (v_{n-j} - v_{n-j-1})`
/// on dynamic rows and `A v_n = 0` on constraint rows, with a single
/// factorization for the whole run.
pub fn solve_fractional_direct(
    gen: &GeneratorMatrix,
    measure: &MixingMeasure,
    u0: &[f64],
    grid: &TimeGrid,
    opts: &StepOptions,
) -> Result<DensityField> {
    if grid.n == 0 {
        return Err(Error::param("t_grid", "need at least one step"));
    }
    let steps = grid.n;
    let lag = distributed_l1_weights(measure, grid.dt, steps);
    let b0 = lag[0];
    let system = ConstrainedStep::new(gen, &(gen.matrix() / b0), 1.0, 1)?;
    let v0 = admissible_initial(gen, u0, opts.projection_tol)?;
    let n = v0.len();
    let mut rows = vec![v0];
    let mut incr: Vec<Vec<f64>> = Vec::with_capacity(steps);
    for step in 1..=steps {
        let prev = rows.last().expect("non-empty");
        let mut rhs = prev.clone();
        if step > 1 {
            let mut hist = vec![0.0; n];
            // oldest increment first: Δ_i carries lag step-1-i
            for (i, d) in incr.iter().enumerate() {
                let w = lag[step - 1 - i];
                for (h, di) in hist.iter_mut().zip(d) {
                    *h += w * di;
                }
            }
            for (r, h) in rhs.iter_mut().zip(&hist) {
                *r -= h / b0;
            }
        }
        let next = system.solve(rhs, step)?;
        incr.push(next.iter().zip(prev).map(|(a, b)| a - b).collect());
        rows.push(next);
    }
    DensityField::new(*gen.grid(), grid.points(), rows)
}

/// Invariant density of a forward generator without constraint rows:
/// `A p = 0` with unit trapezoid mass (the first row is replaced by the
/// mass condition).
pub fn stationary_density(forward: &GeneratorMatrix) -> Result<Vec<f64>> {
    if !forward.is_forward() || !forward.constraint_indices().is_empty() {
        return Err(Error::param("generator", "stationary density needs a forward generator with reflecting ends"));
    }
    let n = forward.grid().len();
    let mut m = forward.matrix().clone();
    for (j, w) in forward.grid().weights().into_iter().enumerate() {
        m[(0, j)] = w;
    }
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    let p = m.lu().solve(&rhs).ok_or(Error::SingularSystem { step: 0 })?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { step: 0 });
    }
    Ok(p.as_slice().to_vec())
}
