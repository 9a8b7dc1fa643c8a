//! Path simulation of the base jump-diffusion with Wentcel boundary behavior
//! and of its inverse-subordinator time change.

use std::io::Write;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixing::MixingMeasure;
use crate::rng::{purpose, substream, StreamRng};
use crate::spatial::{local_unity, Grid1D, WaldenfelsSpec, WentcelSpec};
use crate::subordinators::{invert_path, sample_mixture_path_until, MixtureSampler};

/// Largest admissible per-step jump probability `λ(x) dt`.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

/// Magic bytes of the raw path dump.
pub const PATHS_MAGIC: &[u8; 8] = b"FPKPTH01";

/// State of a path at an observation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum PathStatus {
    Alive,
    Absorbed { time: f64 },
    Killed { time: f64 },
    /// Held at an endpoint until `until`.
    Stuck { until: f64 },
}

impl PathStatus {
    /// Alive or stuck: the path still carries probability mass.
    pub fn is_present(&self) -> bool {
        matches!(self, PathStatus::Alive | PathStatus::Stuck { .. })
    }

    fn code(&self) -> (u8, f64) {
        match *self {
            PathStatus::Alive => (0, 0.0),
            PathStatus::Absorbed { time } => (1, time),
            PathStatus::Killed { time } => (2, time),
            PathStatus::Stuck { until } => (3, until),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BoundaryAction {
    Reflect,
    Absorb,
    JumpIn,
    Stick,
}

#[derive(Debug, Clone)]
struct EndpointLaw {
    x: f64,
    // cumulative categorical weights over reflect, absorb, jump-in, stick
    cumulative: [f64; 4],
    jump_in_cdf: Vec<f64>,
    stick_mean: f64,
    pure_reflecting: bool,
}

impl EndpointLaw {
    fn new(bnd: &WentcelSpec, grid: &Grid1D, x: f64) -> Result<Self> {
        bnd.validate(grid, x)?;
        let len = grid.b - grid.a;
        let nodes = grid.nodes();
        let weights = grid.weights();
        let mass_in = bnd.jump_in_mass(grid, x);
        let raw = [bnd.mu, -bnd.gamma, mass_in, bnd.delta];
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::BoundarySpec(format!("boundary weights at x={x} do not normalize (sum {total})")));
        }
        let mut cumulative = [0.0; 4];
        let mut acc = 0.0;
        for (c, r) in cumulative.iter_mut().zip(raw) {
            acc += r / total;
            *c = acc;
        }
        cumulative[3] = 1.0;
        let jump_in_cdf = if mass_in > 0.0 {
            cumulative_of(nodes.iter().zip(&weights).map(|(&y, w)| w * bnd.jump_in.density(x, y, len)))
        } else {
            Vec::new()
        };
        let stick_mean = if bnd.mu > 0.0 { bnd.delta / bnd.mu * grid.h() } else { bnd.delta * grid.h() };
        Ok(Self { x, cumulative, jump_in_cdf, stick_mean, pure_reflecting: bnd.is_pure_reflecting() })
    }

    fn choose(&self, rng: &mut StreamRng) -> BoundaryAction {
        if self.pure_reflecting {
            return BoundaryAction::Reflect;
        }
        let u: f64 = rng.random();
        let actions = [BoundaryAction::Reflect, BoundaryAction::Absorb, BoundaryAction::JumpIn, BoundaryAction::Stick];
        let k = self.cumulative.iter().position(|&c| u < c).unwrap_or(3);
        actions[k]
    }
}

/// Normalized cumulative sums; empty when the total vanishes.
fn cumulative_of(parts: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = parts
        .scan(0.0, |s, v| {
            *s += v;
            Some(*s)
        })
        .collect();
    let total = out.last().copied().unwrap_or(0.0);
    if !(total > 0.0) {
        return Vec::new();
    }
    for v in out.iter_mut() {
        *v /= total;
    }
    out
}

/// The base process `X` with tables of its jump and killing structure at
/// the nodes of a quadrature grid.
///
/// Between jumps the path follows `dX = b̃ dt + √(2a) dB` with
/// `b̃ = b - ∫ φ(x,y)(y-x) ν(x,y) dy`; it is killed at rate
/// `-(c0 + ∫ (1-φ) ν dy)` and jumps at rate `λ(x) = ∫ ν(x,y) dy` to a point
/// drawn from `ν(x,·)/λ(x)`. With these choices the generator is exactly the
/// assembled Waldenfels operator. Jump data are frozen at the nearest node.
#[derive(Debug, Clone)]
pub struct BaseProcess {
    spec: WaldenfelsSpec,
    grid: Grid1D,
    drift_shift: Vec<f64>,
    kill: Vec<f64>,
    lambda: Vec<f64>,
    jump_cdf: Vec<Vec<f64>>,
    ends: [EndpointLaw; 2],
}

impl BaseProcess {
    pub fn new(spec: &WaldenfelsSpec, bnd_a: &WentcelSpec, bnd_b: &WentcelSpec, grid: &Grid1D) -> Result<Self> {
        let nodes = grid.nodes();
        let weights = grid.weights();
        let len = grid.b - grid.a;
        let width = spec.unity_width_on(grid);
        let mut drift_shift = Vec::with_capacity(nodes.len());
        let mut kill = Vec::with_capacity(nodes.len());
        let mut lambda = Vec::with_capacity(nodes.len());
        let mut jump_cdf = Vec::with_capacity(nodes.len());
        for &x in &nodes {
            let a = spec.diffusion.eval(x);
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::ConditionViolated { node: grid.nearest_node(x), x, condition: format!("ellipticity: a = {a}") });
            }
            let c0 = spec.killing.eval(x);
            if !(c0 <= 0.0) {
                return Err(Error::ConditionViolated { node: grid.nearest_node(x), x, condition: format!("killing c0 = {c0} > 0") });
            }
            if spec.jump.is_none() {
                drift_shift.push(0.0);
                kill.push(-c0);
                lambda.push(0.0);
                jump_cdf.push(Vec::new());
                continue;
            }
            let nu: Vec<f64> = nodes.iter().zip(&weights).map(|(&y, w)| w * spec.jump.density(x, y, len)).collect();
            let shift: f64 = nodes.iter().zip(&nu).map(|(&y, n)| local_unity(width, x, y) * (y - x) * n).sum();
            let outer: f64 = nodes.iter().zip(&nu).map(|(&y, n)| (1.0 - local_unity(width, x, y)) * n).sum();
            let rate = -(c0 + outer);
            if rate < -1e-12 {
                return Err(Error::ConditionViolated {
                    node: grid.nearest_node(x),
                    x,
                    condition: format!("(C1): c0 + ∫(1-φ)ν = {} > 0", -rate),
                });
            }
            drift_shift.push(-shift);
            kill.push(rate.max(0.0));
            lambda.push(nu.iter().sum());
            jump_cdf.push(cumulative_of(nu.into_iter()));
        }
        let ends = [EndpointLaw::new(bnd_a, grid, grid.a)?, EndpointLaw::new(bnd_b, grid, grid.b)?];
        Ok(Self { spec: spec.clone(), grid: *grid, drift_shift, kill, lambda, jump_cdf, ends })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("{dt} must be positive")));
        }
        for (i, l) in self.lambda.iter().enumerate() {
            if l * dt > MAX_JUMP_PROBABILITY {
                return Err(Error::JumpProbability { x: self.grid.x(i), prob: l * dt });
            }
        }
        Ok(())
    }

    /// Draw from the discrete law `cdf` on the nodes, spread uniformly over
    /// the node's cell.
    fn sample_cell(&self, cdf: &[f64], rng: &mut StreamRng) -> f64 {
        let u: f64 = rng.random();
        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let h = self.grid.h();
        let v: f64 = rng.random();
        (self.grid.x(k) + (v - 0.5) * h).clamp(self.grid.a, self.grid.b)
    }

    /// Crossing probability of a Brownian bridge between interior points.
    fn bridge_crossing(&self, x: f64, y: f64, var: f64, end: usize) -> f64 {
        let e = self.ends[end].x;
        (-2.0 * (x - e).abs() * (y - e).abs() / var).exp()
    }

    fn fold(&self, mut y: f64) -> f64 {
        let (a, b) = (self.grid.a, self.grid.b);
        for _ in 0..64 {
            if y < a {
                y = 2.0 * a - y;
            } else if y > b {
                y = 2.0 * b - y;
            } else {
                return y;
            }
        }
        y.clamp(a, b)
    }

    /// One step of length `dt` ending at time `t_end`.
    fn step(&self, x: f64, t_end: f64, dt: f64, rng: &mut StreamRng) -> (f64, PathStatus) {
        let node = self.grid.nearest_node(x);
        let kill = self.kill[node];
        if kill > 0.0 {
            let u: f64 = rng.random();
            if u < -(-kill * dt).exp_m1() {
                return (x, PathStatus::Killed { time: t_end });
            }
        }
        let mut x = x;
        if self.lambda[node] > 0.0 {
            let u: f64 = rng.random();
            if u < self.lambda[node] * dt {
                x = self.sample_cell(&self.jump_cdf[node], rng);
            }
        }
        let node = self.grid.nearest_node(x);
        let a = self.spec.diffusion.eval(x);
        let b = self.spec.drift.eval(x) + self.drift_shift[node];
        let var = 2.0 * a * dt;
        let z: f64 = rng.sample(StandardNormal);
        let y = x + b * dt + var.sqrt() * z;
        let crossed = if y < self.grid.a {
            Some(0)
        } else if y > self.grid.b {
            Some(1)
        } else {
            // undetected excursions matter only where something other than reflection happens
            let mut hit = None;
            for end in 0..2 {
                if !self.ends[end].pure_reflecting {
                    let p = self.bridge_crossing(x, y, var, end);
                    let u: f64 = rng.random();
                    if u < p {
                        hit = Some(end);
                        break;
                    }
                }
            }
            hit
        };
        let Some(end) = crossed else {
            return (y, PathStatus::Alive);
        };
        let law = &self.ends[end];
        match law.choose(rng) {
            BoundaryAction::Reflect => (self.fold(y), PathStatus::Alive),
            BoundaryAction::Absorb => (law.x, PathStatus::Absorbed { time: t_end }),
            BoundaryAction::JumpIn => (self.sample_cell(&law.jump_in_cdf, rng), PathStatus::Alive),
            BoundaryAction::Stick => {
                let e: f64 = rng.sample(Exp1);
                (law.x, PathStatus::Stuck { until: t_end + law.stick_mean * e })
            }
        }
    }

    /// Simulates one path from `x0`, recording the state after each of the
    /// (sorted) step counts in `record`.
    fn run_path(&self, x0: f64, dt: f64, record: &[usize], rng: &mut StreamRng) -> Vec<(f64, PathStatus)> {
        let mut out = Vec::with_capacity(record.len());
        let mut x = x0;
        let mut status = PathStatus::Alive;
        let mut k = 0usize;
        for &target in record {
            while k < target {
                k += 1;
                let t_end = k as f64 * dt;
                match status {
                    PathStatus::Absorbed { .. } | PathStatus::Killed { .. } => {
                        k = target;
                        break;
                    }
                    PathStatus::Stuck { until } if t_end <= until => continue,
                    _ => {}
                }
                let (nx, ns) = self.step(x, t_end, dt, rng);
                debug_assert!(!ns.is_present() || (self.grid.a..=self.grid.b).contains(&nx), "path left the interval");
                x = nx;
                status = ns;
            }
            out.push((x, status));
        }
        out
    }

    fn initial_position(&self, init: &InitialState, seed: u64, path: u64) -> Result<f64> {
        match init {
            InitialState::Point(x) => {
                if !(*x >= self.grid.a && *x <= self.grid.b) {
                    return Err(Error::param("initial point", format!("{x} outside the interval")));
                }
                Ok(*x)
            }
            InitialState::Density(d) => {
                if d.len() != self.grid.len() {
                    return Err(Error::DimensionMismatch { expected: self.grid.len(), got: d.len() });
                }
                let cdf = cumulative_of(d.iter().zip(self.grid.weights()).map(|(v, w)| v.max(0.0) * w));
                if cdf.is_empty() {
                    return Err(Error::param("initial density", "has no positive mass"));
                }
                let mut rng = substream(seed, purpose::INITIAL, path);
                Ok(self.sample_cell(&cdf, &mut rng))
            }
        }
    }
}

/// Starting law of the paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Point(f64),
    /// Nodal density on the process grid; positions are drawn by cell.
    Density(Vec<f64>),
}

/// Positions and states of all paths at the observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `positions[k][p]`: path `p` at `times[k]`.
    pub positions: Vec<Vec<f64>>,
    pub status: Vec<Vec<PathStatus>>,
    /// Operational times `W_t` for time-changed ensembles.
    pub operational: Option<Vec<Vec<f64>>>,
    interval: (f64, f64),
}

fn check_obs(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("obs_times", "must be nonempty, nonnegative and strictly increasing"));
    }
    Ok(())
}

/// Step count of the nearest step at or before `t`.
fn steps_before(t: f64, dt: f64) -> usize {
    (t / dt * (1.0 + 1e-12)).floor() as usize
}

fn transpose(per_path: Vec<Vec<(f64, PathStatus)>>, n_times: usize) -> (Vec<Vec<f64>>, Vec<Vec<PathStatus>>) {
    let mut pos = vec![Vec::with_capacity(per_path.len()); n_times];
    let mut st = vec![Vec::with_capacity(per_path.len()); n_times];
    for rec in per_path {
        for (k, (x, s)) in rec.into_iter().enumerate() {
            pos[k].push(x);
            st[k].push(s);
        }
    }
    (pos, st)
}

/// Euler-Maruyama ensemble of the base process. Observation times are
/// mapped to the nearest step at or before them.
pub fn simulate_base(
    process: &BaseProcess,
    init: &InitialState,
    n_paths: usize,
    dt: f64,
    obs_times: &[f64],
    seed: u64,
) -> Result<PathEnsemble> {
    process.check_dt(dt)?;
    check_obs(obs_times)?;
    let record: Vec<usize> = obs_times.iter().map(|&t| steps_before(t, dt)).collect();
    let per_path: Vec<Vec<(f64, PathStatus)>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let x0 = process.initial_position(init, seed, p)?;
            let mut rng = substream(seed, purpose::BASE_PATH, p);
            Ok(process.run_path(x0, dt, &record, &mut rng))
        })
        .collect::<Result<_>>()?;
    let (positions, status) = transpose(per_path, obs_times.len());
    Ok(PathEnsemble {
        seed,
        n_paths,
        dt,
        times: obs_times.to_vec(),
        positions,
        status,
        operational: None,
        interval: (process.grid.a, process.grid.b),
    })
}

/// Settings of [`simulate_time_changed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeChangeOptions {
    pub dt: f64,
    pub dtau: f64,
    /// Bound on subordinator steps per path.
    pub max_steps: usize,
}

/// Ensemble of `X_{W_t}`: per path, a subordinator path is sampled until it
/// passes the last observation time and inverted on its grid, and an
/// independent base path is read at the nearest step before each `W_t`.
pub fn simulate_time_changed(
    process: &BaseProcess,
    init: &InitialState,
    measure: &MixingMeasure,
    n_paths: usize,
    opts: &TimeChangeOptions,
    obs_times: &[f64],
    seed: u64,
) -> Result<PathEnsemble> {
    process.check_dt(opts.dt)?;
    check_obs(obs_times)?;
    let t_max = *obs_times.last().expect("nonempty");
    type Rec = (Vec<(f64, PathStatus)>, Vec<f64>);
    let per_path: Vec<Rec> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let d = sample_mixture_path_until(measure, opts.dtau, t_max, seed, p, opts.max_steps)?;
            let w = invert_path(&d, obs_times)?;
            let record: Vec<usize> = w.iter().map(|&tau| steps_before(tau, opts.dt)).collect();
            let x0 = process.initial_position(init, seed, p)?;
            let mut rng = substream(seed, purpose::BASE_PATH, p);
            Ok((process.run_path(x0, opts.dt, &record, &mut rng), w))
        })
        .collect::<Result<_>>()?;
    let mut ws = vec![Vec::with_capacity(n_paths); obs_times.len()];
    let mut recs = Vec::with_capacity(n_paths);
    for (rec, w) in per_path {
        for (k, v) in w.into_iter().enumerate() {
            ws[k].push(v);
        }
        recs.push(rec);
    }
    let (positions, status) = transpose(recs, obs_times.len());
    Ok(PathEnsemble {
        seed,
        n_paths,
        dt: opts.dt,
        times: obs_times.to_vec(),
        positions,
        status,
        operational: Some(ws),
        interval: (process.grid.a, process.grid.b),
    })
}

/// Histogram estimate at one observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    /// Per node: present paths in the node's cell over `n_paths · w_i`.
    pub density: Vec<f64>,
    pub survival: f64,
    /// Binomial standard error of each density value.
    pub std_err: Vec<f64>,
    pub survival_std_err: f64,
}

impl PathEnsemble {
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * t.abs().max(1e-12);
        self.times.iter().position(|&s| (s - t).abs() <= tol).ok_or(Error::TimeNotObserved(t))
    }

    /// Positions of present (alive or stuck) paths at `t`.
    pub fn present_positions(&self, t: f64) -> Result<Vec<f64>> {
        let k = self.time_index(t)?;
        Ok(self.positions[k].iter().zip(&self.status[k]).filter(|(_, s)| s.is_present()).map(|(x, _)| *x).collect())
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        let k = self.time_index(t)?;
        Ok(self.status[k].iter().filter(|s| s.is_present()).count() as f64 / self.n_paths as f64)
    }

    pub fn absorbed_fraction(&self, k: usize) -> f64 {
        self.status[k].iter().filter(|s| matches!(s, PathStatus::Absorbed { .. })).count() as f64 / self.n_paths as f64
    }

    /// Summary CSV: `t,survival,absorbed,killed,stuck,mean,variance`.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,survival,absorbed,killed,stuck,mean,variance")?;
        for (k, t) in self.times.iter().enumerate() {
            let n = self.n_paths as f64;
            let count = |f: &dyn Fn(&PathStatus) -> bool| self.status[k].iter().filter(|s| f(s)).count() as f64 / n;
            let xs: Vec<f64> = self.positions[k].iter().zip(&self.status[k]).filter(|(_, s)| s.is_present()).map(|(x, _)| *x).collect();
            let (mean, var) = mean_var(&xs);
            writeln!(
                w,
                "{t},{},{},{},{},{mean},{var}",
                count(&|s| s.is_present()),
                count(&|s| matches!(s, PathStatus::Absorbed { .. })),
                count(&|s| matches!(s, PathStatus::Killed { .. })),
                count(&|s| matches!(s, PathStatus::Stuck { .. })),
            )?;
        }
        Ok(())
    }

    /// Raw dump, little-endian: magic `FPKPTH01`, `u64` time count, `u64`
    /// path count, the times, then per time and path an `f64` position, a
    /// `u8` state code (0 alive, 1 absorbed, 2 killed, 3 stuck) and an `f64`
    /// event time.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(PATHS_MAGIC)?;
        w.write_all(&(self.times.len() as u64).to_le_bytes())?;
        w.write_all(&(self.n_paths as u64).to_le_bytes())?;
        for t in &self.times {
            w.write_all(&t.to_le_bytes())?;
        }
        for (pos, st) in self.positions.iter().zip(&self.status) {
            for (x, s) in pos.iter().zip(st) {
                let (code, time) = s.code();
                w.write_all(&x.to_le_bytes())?;
                w.write_all(&[code])?;
                w.write_all(&time.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Histogram on the cells of `grid` (node `i` owns `[x_i - h/2, x_i + h/2]`
/// clipped to the interval), scaled so that the trapezoid integral of the
/// density equals the survival fraction.
pub fn estimate_density(ensemble: &PathEnsemble, grid: &Grid1D, t: f64) -> Result<DensityEstimate> {
    let (a, b) = ensemble.interval;
    if (grid.a - a).abs() > 1e-12 || (grid.b - b).abs() > 1e-12 {
        return Err(Error::GridMismatch(format!("grid [{}, {}] vs ensemble interval [{a}, {b}]", grid.a, grid.b)));
    }
    let xs = ensemble.present_positions(t)?;
    let n = ensemble.n_paths as f64;
    let mut counts = vec![0usize; grid.len()];
    for x in &xs {
        counts[grid.nearest_node(*x)] += 1;
    }
    let w = grid.weights();
    let density = counts.iter().zip(&w).map(|(c, w)| *c as f64 / (n * w)).collect();
    let std_err = counts
        .iter()
        .zip(&w)
        .map(|(c, w)| {
            let p = *c as f64 / n;
            (p * (1.0 - p) / n).sqrt() / w
        })
        .collect();
    let survival = xs.len() as f64 / n;
    Ok(DensityEstimate { density, survival, std_err, survival_std_err: (survival * (1.0 - survival) / n).sqrt() })
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// the normalized piecewise-linear-density law of nodal `density` on `grid`.
pub fn ks_against_density(samples: &[f64], grid: &Grid1D, density: &[f64]) -> Result<f64> {
    if density.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: density.len() });
    }
    if samples.is_empty() {
        return Err(Error::param("samples", "empty sample"));
    }
    let xs = grid.nodes();
    let h = grid.h();
    // exact CDF of the piecewise-linear interpolant
    let mut cdf = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        cdf[i] = cdf[i - 1] + 0.5 * h * (density[i - 1] + density[i]);
    }
    let total = *cdf.last().expect("nonempty");
    if !(total > 0.0) {
        return Err(Error::param("density", "has no positive mass"));
    }
    let eval = |x: f64| -> f64 {
        let s = ((x - grid.a) / h).clamp(0.0, (xs.len() - 1) as f64);
        let i = (s.floor() as usize).min(xs.len() - 2);
        let r = (s - i as f64) * h;
        let slope = (density[i + 1] - density[i]) / h;
        (cdf[i] + density[i] * r + 0.5 * slope * r * r) / total
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = eval(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Monte Carlo moment `E[W_t^γ]` with its standard error. The first passage
/// is read on the right grid point, so `W ≤ Ŵ < W + dtau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_paths: usize,
}

/// `E[W_t^γ]` over `n_paths` subordinator paths with step `dtau`.
pub fn inverse_subordinator_moment(
    measure: &MixingMeasure,
    t: f64,
    gamma: f64,
    n_paths: usize,
    dtau: f64,
    seed: u64,
) -> Result<MomentEstimate> {
    if !(t > 0.0) || !(dtau > 0.0) || n_paths < 2 {
        return Err(Error::param("moment", "need t > 0, dtau > 0 and at least two paths"));
    }
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut s = MixtureSampler::new(measure, seed, p);
            let mut d = 0.0;
            let mut k = 0u64;
            while d <= t {
                d += s.increment(dtau);
                k += 1;
            }
            (k as f64 * dtau).powf(gamma)
        })
        .collect();
    let (mean, var) = mean_var(&samples);
    Ok(MomentEstimate { mean, std_err: (var / n_paths as f64).sqrt(), n_paths })
}
