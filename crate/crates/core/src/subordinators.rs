//! Stable subordinators, their mixtures, first-passage inverses, and the
//! tabulated density of the inverse process.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, Open01};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::error::{Error, Result};
use crate::fractional::{distributed_caputo, TimeGrid};
use crate::laplace::TalbotContour;
use crate::mixing::MixingMeasure;
use crate::quad;
use crate::rng::{purpose, substream, StreamRng};

/// Standard one-sided β-stable variable with `E e^{-sS} = e^{-s^β}` (Kanter).
fn kanter<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = PI * rng.sample::<f64, _>(Open01);
        let w: f64 = rng.sample(Exp1);
        let s = (beta * u).sin() / u.sin().powf(1.0 / beta) * (((1.0 - beta) * u).sin() / w).powf((1.0 - beta) / beta);
        if s > 0.0 && s.is_finite() {
            return s;
        }
    }
}

/// One increment of a standard β-stable subordinator over `dt`.
pub fn sample_stable_increment<R: Rng + ?Sized>(beta: f64, dt: f64, rng: &mut R) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("{beta} must lie strictly inside (0, 1)")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("{dt} must be positive")));
    }
    Ok(dt.powf(1.0 / beta) * kanter(beta, rng))
}

/// Path `D_τ` on a uniform operational-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    dtau: f64,
    values: Vec<f64>,
}

impl SubordinatorPath {
    /// Wraps explicit values; they must start at 0 and be nondecreasing.
    pub fn from_values(dtau: f64, values: Vec<f64>) -> Result<Self> {
        if !(dtau > 0.0 && dtau.is_finite()) {
            return Err(Error::param("dtau", format!("{dtau} must be positive")));
        }
        if values.first() != Some(&0.0) {
            return Err(Error::param("values", "path must start at 0"));
        }
        if values.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::param("values", "path must be nondecreasing"));
        }
        Ok(Self { dtau, values })
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn tau(&self, j: usize) -> f64 {
        j as f64 * self.dtau
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|j| self.tau(j)).collect()
    }

    pub fn end(&self) -> f64 {
        *self.values.last().expect("path has at least one value")
    }
}

/// RNG stream of atom `atom` for path `path`.
pub fn stable_stream(seed: u64, atom: usize, path: u64) -> StreamRng {
    substream(seed, purpose::STABLE.wrapping_add((atom as u64) << 40), path)
}

/// Incremental sampler of `D_μ` with one substream per mixture component.
pub struct MixtureSampler {
    // (beta, scale w^{1/β})
    parts: Vec<(f64, f64)>,
    rngs: Vec<StreamRng>,
}

impl MixtureSampler {
    pub fn new(measure: &MixingMeasure, seed: u64, path: u64) -> Self {
        let parts: Vec<(f64, f64)> = measure.components().iter().map(|a| (a.beta, a.weight.powf(1.0 / a.beta))).collect();
        let rngs = (0..parts.len()).map(|k| stable_stream(seed, k, path)).collect();
        Self { parts, rngs }
    }

    /// Next increment over `dtau` (assumed validated).
    pub fn increment(&mut self, dtau: f64) -> f64 {
        let mut sum = 0.0;
        for ((beta, c), rng) in self.parts.iter().zip(self.rngs.iter_mut()) {
            sum += c * dtau.powf(1.0 / beta) * kanter(*beta, rng);
        }
        sum
    }
}

fn check_dtau(dtau: f64) -> Result<()> {
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(Error::param("dtau", format!("{dtau} must be positive")));
    }
    Ok(())
}

/// Path of the mixture `Σ_k w_k^{1/β_k} D^{(β_k)}` with `n_steps` steps.
pub fn sample_mixture_path(
    measure: &MixingMeasure,
    dtau: f64,
    n_steps: usize,
    seed: u64,
    path: u64,
) -> Result<SubordinatorPath> {
    check_dtau(dtau)?;
    if n_steps < 1 {
        return Err(Error::param("n_steps", "need at least one step"));
    }
    let mut sampler = MixtureSampler::new(measure, seed, path);
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(0.0);
    let mut d = 0.0;
    for _ in 0..n_steps {
        d += sampler.increment(dtau);
        values.push(d);
    }
    Ok(SubordinatorPath { dtau, values })
}

/// Like [`sample_mixture_path`] but extends the path until it exceeds `t_max`.
/// The first `n` steps coincide with a fixed-length path of the same seed.
pub fn sample_mixture_path_until(
    measure: &MixingMeasure,
    dtau: f64,
    t_max: f64,
    seed: u64,
    path: u64,
    max_steps: usize,
) -> Result<SubordinatorPath> {
    check_dtau(dtau)?;
    let mut sampler = MixtureSampler::new(measure, seed, path);
    let mut values = vec![0.0];
    let mut d = 0.0;
    while d <= t_max {
        if values.len() > max_steps {
            return Err(Error::PathTooShort { t: t_max, path_end: d });
        }
        d += sampler.increment(dtau);
        values.push(d);
    }
    Ok(SubordinatorPath { dtau, values })
}

/// First-passage times `W_t = min{τ_j : D_{τ_j} > t}` on the path's grid
/// (grid-right endpoint, upward bias at most `dtau`). `W_0 = 0`.
pub fn invert_path(path: &SubordinatorPath, t_query: &[f64]) -> Result<Vec<f64>> {
    let end = path.end();
    t_query
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::param("t_query", format!("{t} must be nonnegative")));
            }
            if t == 0.0 {
                return Ok(0.0);
            }
            if end <= t {
                return Err(Error::PathTooShort { t, path_end: end });
            }
            let j = path.values.partition_point(|&v| v <= t);
            Ok(path.tau(j))
        })
        .collect()
}

/// Settings of the numerical inversion producing [`InverseDensityTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InversionParams {
    pub talbot_nodes: usize,
    /// Node count retried on cells flagged as unstable.
    pub promoted_nodes: usize,
    /// Relative roundoff bound before a cell is considered unstable.
    pub conditioning: f64,
    /// Absolute roundoff floor.
    pub abs_floor: f64,
    /// Negative values of smaller magnitude are clamped to zero.
    pub clamp: f64,
    /// Keep flagged cells in the table instead of failing.
    pub allow_unstable: bool,
}

impl Default for InversionParams {
    fn default() -> Self {
        Self { talbot_nodes: 32, promoted_nodes: 64, conditioning: 1e-6, abs_floor: 1e-12, clamp: 1e-10, allow_unstable: false }
    }
}

/// Probe level for the τ cutoff.
pub const TAU_TAIL_LEVEL: f64 = 1e-12;

/// τ beyond which `(Φ(s*)/s*) e^{-τΦ(s*)} < 1e-12`, for the probe `s* = 1`
/// and, when `t_max > 1`, also for `s* = 1/t_max` (the larger cutoff wins).
pub fn tau_cutoff(measure: &MixingMeasure, t_max: f64) -> f64 {
    let probe = |s: f64| {
        let phi = measure.phi_unchecked(s);
        ((phi / s) / TAU_TAIL_LEVEL).ln().max(0.0) / phi
    };
    let mut cut = probe(1.0);
    if t_max > 1.0 {
        cut = cut.max(probe(1.0 / t_max));
    }
    cut
}

/// `0` followed by `points` geometrically spaced values from `tau_min` to `tau_max`.
pub fn geometric_tau_grid(tau_min: f64, tau_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(tau_min > 0.0 && tau_max > tau_min) || points < 2 {
        return Err(Error::param("tau grid", format!("need 0 < {tau_min} < {tau_max} and >= 2 points")));
    }
    let ratio = (tau_max / tau_min).ln() / (points - 1) as f64;
    let mut g = Vec::with_capacity(points + 1);
    g.push(0.0);
    g.extend((0..points).map(|k| tau_min * (ratio * k as f64).exp()));
    *g.last_mut().expect("non-empty") = tau_max;
    Ok(g)
}

/// Default τ grid for times up to `t_max`: 400 geometric points from `1e-4`
/// to [`tau_cutoff`].
pub fn default_tau_grid(measure: &MixingMeasure, t_max: f64) -> Vec<f64> {
    geometric_tau_grid(1e-4, tau_cutoff(measure, t_max), 400).expect("cutoff exceeds 1e-4")
}

/// `f^μ_t(τ)` on a `(t, τ)` grid, stored row-major by `t`.
#[derive(Debug, Clone)]
pub struct InverseDensityTable {
    t_grid: Vec<f64>,
    tau_grid: Vec<f64>,
    values: Vec<f64>,
    measure: MixingMeasure,
    mass: Vec<f64>,
    tail_mass: Vec<f64>,
    flagged: Vec<(usize, usize)>,
    certified_tail: usize,
    params: InversionParams,
}

impl InverseDensityTable {
    /// Number of ill-conditioned cells set to zero under a certified tail bound.
    pub fn certified_tail_cells(&self) -> usize {
        self.certified_tail
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn tau_grid(&self) -> &[f64] {
        &self.tau_grid
    }

    pub fn measure(&self) -> &MixingMeasure {
        &self.measure
    }

    pub fn params(&self) -> &InversionParams {
        &self.params
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.tau_grid.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.tau_grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Mass of row `i` over the τ grid (composite Simpson).
    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    /// `P(W_t > τ_max)` by inversion of `e^{-τ_max Φ(s)}/s`; the mass lost to truncation.
    pub fn tail_mass(&self, i: usize) -> f64 {
        self.tail_mass[i]
    }

    /// `(t index, τ index)` of cells whose inversion stayed ill-conditioned.
    pub fn flagged(&self) -> &[(usize, usize)] {
        &self.flagged
    }

    /// Index of `t` in the time grid (relative match 1e-9).
    pub fn t_index(&self, t: f64) -> Option<usize> {
        self.t_grid.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1e-300))
    }

    /// `∫ f_t(τ) φ(τ) dτ` by the trapezoid rule on the τ grid.
    pub fn integrate_row(&self, i: usize, phi: impl Fn(f64) -> f64) -> f64 {
        let ys: Vec<f64> = self.row(i).iter().zip(&self.tau_grid).map(|(f, &tau)| f * phi(tau)).collect();
        quad::trapezoid(&self.tau_grid, &ys)
    }

    /// CDF of `W_t` at the τ grid points (cumulative trapezoid).
    pub fn cdf_row(&self, i: usize) -> Vec<f64> {
        quad::cumulative_trapezoid(&self.tau_grid, self.row(i))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,tau,f")?;
        for (i, t) in self.t_grid.iter().enumerate() {
            for (tau, f) in self.tau_grid.iter().zip(self.row(i)) {
                writeln!(w, "{t},{tau},{f}")?;
            }
        }
        Ok(())
    }
}

fn check_sorted(name: &'static str, g: &[f64], positive: bool) -> Result<()> {
    if g.is_empty() {
        return Err(Error::param(name, "grid is empty"));
    }
    let lower_ok = if positive { g[0] > 0.0 } else { g[0] >= 0.0 };
    if !lower_ok || g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(name, "grid must be finite, strictly increasing and in range"));
    }
    Ok(())
}

struct RowResult {
    values: Vec<f64>,
    flagged: Vec<usize>,
    negative: Option<(usize, f64)>,
    tail: f64,
    certified: usize,
}

/// Cells whose Chernoff tail bound is below `e^{-32}` (about 1.3e-14) are
/// set to zero when their inversion is ill-conditioned.
pub const CERTIFIED_LOG_TAIL: f64 = -32.0;

/// `min_s (st - τΦ(s))`: the log of the Chernoff bound on
/// `P(W_t > τ) = P(D_τ ≤ t) ≤ e^{st} E e^{-sD_τ}`.
pub fn chernoff_log_tail(measure: &MixingMeasure, t: f64, tau: f64) -> f64 {
    let g = |ls: f64| {
        let s = ls.exp();
        s * t - tau * measure.phi_unchecked(s)
    };
    // unimodal in ln s: the derivative t - τΦ'(s) increases with s
    let (mut lo, mut hi) = ((1e-6 / t).ln(), (1e12 / t).ln());
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if g(a) < g(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    g(0.5 * (lo + hi)).min(0.0)
}

fn invert_row(
    measure: &MixingMeasure,
    t: f64,
    tau_grid: &[f64],
    params: &InversionParams,
    base: &TalbotContour,
    promoted: &TalbotContour,
) -> RowResult {
    let prep = |c: &TalbotContour| -> Vec<(Complex64, Complex64)> {
        c.points(t)
            .map(|s| {
                let phi = measure.phi_complex(s);
                (phi, phi / s)
            })
            .collect()
    };
    let pb = prep(base);
    let mut pp: Option<Vec<(Complex64, Complex64)>> = None;
    let mut values = Vec::with_capacity(tau_grid.len());
    let mut flagged = Vec::new();
    let mut negative = None;
    let mut certified = 0;
    for (j, &tau) in tau_grid.iter().enumerate() {
        let eval = |c: &TalbotContour, p: &[(Complex64, Complex64)]| c.combine(t, p.iter().map(|(phi, a)| a * (-tau * phi).exp()));
        let mut v = eval(base, &pb);
        // negative output beyond the clamp is treated like instability
        if v.is_unstable(params.conditioning, params.abs_floor) || v.value < -params.clamp {
            let p = pp.get_or_insert_with(|| prep(promoted));
            v = eval(promoted, p);
            if v.is_unstable(params.conditioning, params.abs_floor) {
                flagged.push(j);
            }
        }
        let mut x = v.value;
        let bad = flagged.last() == Some(&j) || x < -params.clamp;
        if bad && chernoff_log_tail(measure, t, tau) < CERTIFIED_LOG_TAIL {
            // deep tail: the probability beyond τ is certified negligible
            flagged.retain(|&k| k != j);
            certified += 1;
            x = 0.0;
        }
        if x < 0.0 {
            if -x < params.clamp {
                x = 0.0;
            } else if negative.is_none() && !flagged.contains(&j) {
                negative = Some((j, x));
            }
        }
        values.push(x);
    }
    let tau_max = *tau_grid.last().expect("non-empty");
    let tail = base
        .combine(t, pb.iter().zip(base.points(t)).map(|((phi, _), s)| (-tau_max * phi).exp() / s))
        .value
        .max(0.0);
    RowResult { values, flagged, negative, tail, certified }
}

/// Tabulates `f^μ_t(τ)` by fixed-Talbot inversion of `(Φ(s)/s) e^{-τΦ(s)}`.
pub fn inverse_density_table(
    measure: &MixingMeasure,
    t_grid: &[f64],
    tau_grid: &[f64],
    params: InversionParams,
) -> Result<InverseDensityTable> {
    check_sorted("t_grid", t_grid, true)?;
    check_sorted("tau_grid", tau_grid, false)?;
    if params.talbot_nodes < 2 || params.promoted_nodes < params.talbot_nodes {
        return Err(Error::param("talbot_nodes", "need 2 <= talbot_nodes <= promoted_nodes"));
    }
    let base = TalbotContour::new(params.talbot_nodes);
    let promoted = TalbotContour::new(params.promoted_nodes);
    let rows: Vec<RowResult> = t_grid
        .par_iter()
        .map(|&t| invert_row(measure, t, tau_grid, &params, &base, &promoted))
        .collect();

    let mut values = Vec::with_capacity(t_grid.len() * tau_grid.len());
    let mut flagged = Vec::new();
    let mut mass = Vec::with_capacity(t_grid.len());
    let mut tail_mass = Vec::with_capacity(t_grid.len());
    let mut certified_tail = 0;
    for (i, r) in rows.into_iter().enumerate() {
        if let Some((j, value)) = r.negative {
            return Err(Error::NegativeDensity { t: t_grid[i], tau: tau_grid[j], value });
        }
        flagged.extend(r.flagged.iter().map(|&j| (i, j)));
        mass.push(quad::simpson(tau_grid, &r.values));
        tail_mass.push(r.tail);
        certified_tail += r.certified;
        values.extend(r.values);
    }
    if certified_tail > 0 {
        log::info!("{certified_tail} ill-conditioned cell(s) in the certified tail set to zero");
    }
    if let Some(&(i, j)) = flagged.first() {
        log::warn!("{} ill-conditioned inverse-density cell(s)", flagged.len());
        if !params.allow_unstable {
            return Err(Error::InversionUnstable { cells: flagged.len(), t: t_grid[i], tau: tau_grid[j] });
        }
    }
    Ok(InverseDensityTable {
        t_grid: t_grid.to_vec(),
        tau_grid: tau_grid.to_vec(),
        values,
        measure: measure.clone(),
        mass,
        tail_mass,
        flagged,
        certified_tail,
        params,
    })
}

/// Tolerances and probe points for [`verify_density_lemmas`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaOptions {
    /// Time at which the edge and mass checks are made.
    pub t_eval: f64,
    /// Small time for the weak-delta check.
    pub weak_delta_t: f64,
    /// Times for the evolution identity.
    pub evolution_times: Vec<f64>,
    pub weak_delta_tol: f64,
    pub edge_tol: f64,
    pub tail_tol: f64,
    pub mass_tol: f64,
    pub evolution_tol: f64,
    /// Relative tolerance of the re-Laplace self-consistency check.
    pub relaplace_tol: f64,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self {
            t_eval: 1.0,
            weak_delta_t: 1e-3,
            evolution_times: vec![0.5, 1.0],
            weak_delta_tol: 0.02,
            edge_tol: 0.01,
            tail_tol: 1e-8,
            mass_tol: 1e-3,
            evolution_tol: 1e-3,
            relaplace_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityLemmaReport {
    pub checks: Vec<Check>,
}

impl DensityLemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn nearest(grid: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if (g - x).abs() < (grid[best] - x).abs() {
            best = i;
        }
    }
    best
}

/// Numerical checks of the inverse-density properties on a table: weak
/// convergence to `δ_0` as `t → 0`, the `τ → 0` edge value `K_μ(t)`, decay in
/// `τ`, mass, re-Laplace consistency, and the evolution identity
/// `D_μ f = -∂_τ f - δ_0 K_μ` in weak form.
///
/// The evolution check needs a uniform time grid `t_j = j·dt`; it is skipped
/// (with a note) otherwise.
pub fn verify_density_lemmas(table: &InverseDensityTable, opts: &LemmaOptions) -> DensityLemmaReport {
    let mut checks = Vec::new();
    let tg = table.t_grid();
    let taus = table.tau_grid();
    let m = table.measure();
    let ie = nearest(tg, opts.t_eval);
    let te = tg[ie];

    // weak delta at a small time, φ flat at the origin
    let bump = |tau: f64| (-tau * tau).exp();
    let iw = nearest(tg, opts.weak_delta_t);
    let w = table.integrate_row(iw, bump);
    checks.push(Check::relative("weak_delta", w, 1.0, opts.weak_delta_tol).note(format!("t={}", tg[iw])));

    // edge value from the two smallest positive τ
    let pos: Vec<usize> = (0..taus.len()).filter(|&j| taus[j] > 0.0).take(2).collect();
    if pos.len() == 2 {
        let (a, b) = (pos[0], pos[1]);
        let (fa, fb) = (table.value(ie, a), table.value(ie, b));
        let edge = fa - taus[a] * (fb - fa) / (taus[b] - taus[a]);
        checks.push(Check::relative("edge_vs_kernel", edge, m.kernel_k_unchecked(te), opts.edge_tol).note(format!("t={te}")));
    }

    let last = taus.len() - 1;
    let tail = (0..tg.len()).map(|i| table.value(i, last)).fold(0.0, f64::max);
    checks.push(Check::absolute("tail_decay", tail, 0.0, opts.tail_tol).note(format!("tau_max={}", taus[last])));

    let mass = table.mass(ie);
    let over = (mass - 1.0).max(0.0);
    let under = (1.0 - mass).max(0.0);
    checks.push(Check::with_error("mass", mass, 1.0, under.max(over), opts.mass_tol).note(format!("t={te}")));
    checks.push(Check::diagnostic("tail_mass", table.tail_mass(ie), 0.0, table.tail_mass(ie)));

    checks.push(relaplace_check(table, opts));
    for &t in &opts.evolution_times {
        checks.extend(evolution_checks(table, nearest(tg, t), opts));
    }
    DensityLemmaReport { checks }
}

fn relaplace_check(table: &InverseDensityTable, opts: &LemmaOptions) -> Check {
    let tg = table.t_grid();
    let t_end = *tg.last().expect("non-empty");
    let mut ts = vec![0.0];
    ts.extend_from_slice(tg);
    let m = table.measure();
    let mut worst: f64 = 0.0;
    let mut at = (0.0, 0.0);
    // s large enough that truncation at t_end is below 1e-12
    let s_lo = (28.0 / t_end).max(1.0);
    for s in [s_lo, 2.0 * s_lo] {
        for tau_probe in [0.25, 0.5, 1.0] {
            let j = nearest(table.tau_grid(), tau_probe);
            let tau = table.tau_grid()[j];
            if tau == 0.0 {
                continue;
            }
            let mut ys = vec![0.0];
            ys.extend((0..tg.len()).map(|i| (-s * tg[i]).exp() * table.value(i, j)));
            let numeric = quad::trapezoid(&ts, &ys);
            let phi = m.phi_unchecked(s);
            let exact = phi / s * (-tau * phi).exp();
            let rel = (numeric - exact).abs() / exact;
            if rel > worst {
                worst = rel;
                at = (s, tau);
            }
        }
    }
    Check::with_error("relaplace", worst, 0.0, worst, opts.relaplace_tol).note(format!("worst at s={}, tau={}", at.0, at.1))
}

fn evolution_checks(table: &InverseDensityTable, ie: usize, opts: &LemmaOptions) -> Vec<Check> {
    let tg = table.t_grid();
    let dt = tg[0];
    let uniform = tg.iter().enumerate().all(|(i, &t)| (t - (i + 1) as f64 * dt).abs() <= 1e-9 * t);
    if !uniform || tg.len() < 2 {
        return vec![Check::diagnostic("evolution", 0.0, 0.0, 0.0).note("skipped: time grid is not uniform from 0")];
    }
    let taus = table.tau_grid();
    let phi = |tau: f64| (-tau).exp();
    let dphi = |tau: f64| -(-tau).exp();
    let mut g = vec![phi(0.0)];
    g.extend((0..tg.len()).map(|i| table.integrate_row(i, phi)));
    let grid = TimeGrid::new(dt, tg.len()).expect("validated grid");
    let lhs = distributed_caputo(&grid, &g, table.measure()).expect("valid measure")[ie + 1];

    let te = tg[ie];
    let row = table.row(ie);
    let by_parts = table.integrate_row(ie, dphi);
    // -∫ (∂τ f) φ dτ - φ(0) K(t), derivative taken cell by cell
    let mut minus_dtau = 0.0;
    for j in 0..taus.len() - 1 {
        minus_dtau -= (row[j + 1] - row[j]) * 0.5 * (phi(taus[j]) + phi(taus[j + 1]));
    }
    let distributional = minus_dtau - phi(0.0) * table.measure().kernel_k_unchecked(te);
    vec![
        Check::absolute(format!("evolution_by_parts@{te}"), lhs, by_parts, opts.evolution_tol).note(format!("t={te}, phi=exp(-tau)")),
        Check::absolute(format!("evolution_distributional@{te}"), lhs, distributional, opts.evolution_tol).note(format!("t={te}, phi=exp(-tau)")),
    ]
}
