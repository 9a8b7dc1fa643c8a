//! Experiment configuration (TOML).

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixing::{MeasureSpec, MixingMeasure};
use crate::spatial::{Coefficient, Grid1D, JumpKernel, WaldenfelsSpec, WentcelSpec};
use crate::subordinators::{InversionParams, LemmaOptions};

/// Solution routes an experiment can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Classical,
    Direct,
    Subordination,
    Spectral,
    TimeDependent,
    Montecarlo,
    TimeChangedResidual,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Classical => "classical",
            Route::Direct => "direct",
            Route::Subordination => "subordination",
            Route::Spectral => "spectral",
            Route::TimeDependent => "time_dependent",
            Route::Montecarlo => "montecarlo",
            Route::TimeChangedResidual => "time_changed_residual",
        }
    }

    /// Routes solving the fractional problem deterministically.
    pub fn is_fractional(&self) -> bool {
        matches!(self, Route::Direct | Route::Subordination | Route::Spectral)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub a: f64,
    pub b: f64,
    /// Interior node count.
    pub n: usize,
    /// Endpoints given in units of π.
    #[serde(default)]
    pub pi_units: bool,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid1D> {
        let s = if self.pi_units { PI } else { 1.0 };
        Grid1D::new(self.a * s, self.b * s, self.n)
    }
}

/// Lower-order operator `B = b̃ ∂x + c̃` of the time-dependent problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerOrderConfig {
    #[serde(default = "zero")]
    pub drift: Coefficient,
    #[serde(default = "zero")]
    pub killing: Coefficient,
}

fn zero() -> Coefficient {
    Coefficient::constant(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub grid: GridConfig,
    pub operator: WaldenfelsSpec,
    pub boundary_a: WentcelSpec,
    pub boundary_b: WentcelSpec,
    #[serde(default)]
    pub lower_order: Option<LowerOrderConfig>,
    /// Solve the forward (density) equation instead of the backward one.
    #[serde(default)]
    pub forward: bool,
}

/// Initial data presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPreset {
    /// `sin(mode π (x-a)/(b-a))`.
    Sine {
        #[serde(default = "one_usize")]
        mode: usize,
    },
    /// Unit mass at the node nearest `x` (value `1/h`).
    Point { x: f64, #[serde(default)] pi_units: bool },
    /// `exp(-(x-center)²/(2 width²))`.
    Gaussian { center: f64, width: f64 },
    Uniform,
}

fn one_usize() -> usize {
    1
}

impl InitialPreset {
    pub fn sample(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        let len = grid.b - grid.a;
        Ok(match self {
            InitialPreset::Sine { mode } => grid.sample(|x| (*mode as f64 * PI * (x - grid.a) / len).sin()),
            InitialPreset::Point { .. } => crate::solvers::delta_initial(grid, self.point(grid).expect("point preset")),
            InitialPreset::Gaussian { center, width } => {
                if !(*width > 0.0) {
                    return Err(Error::Config("gaussian width must be positive".into()));
                }
                grid.sample(|x| (-(x - center).powi(2) / (2.0 * width * width)).exp())
            }
            InitialPreset::Uniform => vec![1.0; grid.len()],
        })
    }

    /// The node the point preset resolves to.
    pub fn point(&self, grid: &Grid1D) -> Option<f64> {
        match self {
            InitialPreset::Point { x, pi_units } => {
                let x = if *pi_units { x * PI } else { *x };
                Some(grid.x(grid.nearest_node(x)))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Times at which routes are compared; `[t_final]` when empty.
    #[serde(default)]
    pub report_times: Vec<f64>,
}

impl TimeConfig {
    pub fn report_times(&self) -> Vec<f64> {
        if self.report_times.is_empty() {
            vec![self.t_final]
        } else {
            self.report_times.clone()
        }
    }
}

/// Closed-form references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Sine initial data for `a ∂²` with absorbing ends: the mode decays as
    /// `exp(λt)`, `E_β(λ t^β)` or `exp(λ t^{γ+1}/2)` with `λ = -a (kπ/L)²`.
    SineMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeDependentConfig {
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonteCarloKind {
    /// Base process against the classical forward solution.
    Base,
    /// Time-averaged positions over a window against the forward steady state.
    Stationary,
    /// Time-changed process against the subordinated forward solution.
    TimeChanged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub kind: MonteCarloKind,
    pub n_paths: usize,
    pub dt: f64,
    #[serde(default = "default_dtau")]
    pub dtau: f64,
    /// Averaging window `[t0, t1]` for the stationary comparison.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_window_samples")]
    pub window_samples: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_dtau() -> f64 {
    1e-3
}
fn default_window_samples() -> usize {
    11
}
fn default_max_steps() -> usize {
    50_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplacePairConfig {
    pub measures: Vec<MeasureSpec>,
    #[serde(default = "default_s")]
    pub s: Vec<f64>,
    #[serde(default = "one_f64")]
    pub t_cutoff: f64,
}

fn default_s() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0]
}
fn one_f64() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityLemmaConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub options: LemmaOptions,
}

/// Comparison of the β = 1/2 table with `(πt)^{-1/2} exp(-τ²/(4t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyConfig {
    #[serde(default = "one_f64")]
    pub t: f64,
    #[serde(default = "default_levy_range")]
    pub tau_range: [f64; 2],
    #[serde(default = "default_levy_points")]
    pub points: usize,
}

fn default_levy_range() -> [f64; 2] {
    [0.05, 5.0]
}
fn default_levy_points() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GOperatorConfig {
    #[serde(default = "default_g_gamma")]
    pub gamma: f64,
    #[serde(default = "default_g_delta")]
    pub delta: f64,
    /// Times of the table used by the G checks.
    #[serde(default = "default_g_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_moment_gamma")]
    pub moment_gamma: f64,
    #[serde(default = "one_f64")]
    pub moment_t: f64,
    #[serde(default = "default_moment_paths")]
    pub moment_paths: usize,
    #[serde(default = "default_moment_dtau")]
    pub moment_dtau: f64,
}

fn default_g_gamma() -> f64 {
    0.3
}
fn default_g_delta() -> f64 {
    0.4
}
fn default_g_times() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}
fn default_moment_gamma() -> f64 {
    0.5
}
fn default_moment_paths() -> usize {
    100_000
}
fn default_moment_dtau() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalLimitConfig {
    /// Times of the comparison; `[t_final]` when empty.
    #[serde(default)]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticityConfig {
    #[serde(default = "default_xi_samples")]
    pub xi_samples: usize,
}

fn default_xi_samples() -> usize {
    64
}

/// Checks that are not tied to a single route.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub laplace_pair: Option<LaplacePairConfig>,
    #[serde(default)]
    pub density_lemmas: Option<DensityLemmaConfig>,
    #[serde(default)]
    pub levy: Option<LevyConfig>,
    #[serde(default)]
    pub g_operator: Option<GOperatorConfig>,
    #[serde(default)]
    pub classical_limit: Option<ClassicalLimitConfig>,
    #[serde(default)]
    pub ellipticity: Option<EllipticityConfig>,
}

impl DiagnosticsConfig {
    pub fn is_empty(&self) -> bool {
        self.laplace_pair.is_none()
            && self.density_lemmas.is_none()
            && self.levy.is_none()
            && self.g_operator.is_none()
            && self.classical_limit.is_none()
            && self.ellipticity.is_none()
    }
}

/// Every pass/fail threshold of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub laplace_pair: f64,
    pub levy: f64,
    pub oracle_classical: f64,
    pub oracle_fractional: f64,
    pub oracle_time_dependent: f64,
    pub route_triangle: f64,
    pub classical_limit: f64,
    pub ks_stationary: f64,
    pub ks_time_changed: f64,
    pub ks_base: f64,
    /// Monte Carlo agreement in standard errors.
    pub mc_sigmas: f64,
    pub semigroup: f64,
    pub g_identity: f64,
    pub time_changed_residual: f64,
    pub boundary_residual: f64,
    pub mass: f64,
    pub positivity: f64,
    pub initial_recovery: f64,
    pub contraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            laplace_pair: 1e-5,
            levy: 1e-4,
            oracle_classical: 1e-3,
            oracle_fractional: 5e-3,
            oracle_time_dependent: 1e-3,
            route_triangle: 5e-3,
            classical_limit: 0.02,
            ks_stationary: 0.02,
            ks_time_changed: 0.03,
            ks_base: 0.03,
            mc_sigmas: 3.0,
            semigroup: 1e-3,
            g_identity: 0.0,
            time_changed_residual: 3e-2,
            boundary_residual: 1e-8,
            mass: 1e-8,
            positivity: 1e-8,
            initial_recovery: 1e-10,
            contraction: 1e-6,
        }
    }
}

fn default_seed() -> u64 {
    20_240_901
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub routes: Vec<Route>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub initial: Option<InitialPreset>,
    #[serde(default)]
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub oracle: Option<Oracle>,
    #[serde(default)]
    pub time_dependent: Option<TimeDependentConfig>,
    #[serde(default)]
    pub montecarlo: Option<MonteCarloConfig>,
    #[serde(default)]
    pub inversion: InversionParams,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn measure(&self) -> Result<MixingMeasure> {
        let spec = self.measure.as_ref().ok_or_else(|| Error::Config("no [measure] section".into()))?;
        MixingMeasure::from_spec(spec)
    }

    fn need<T>(&self, what: &Option<T>, section: &str, route: &str) -> Result<()> {
        if what.is_none() {
            return Err(Error::Config(format!("{route} needs a [{section}] section")));
        }
        Ok(())
    }

    /// Structural checks that do not run any numerics beyond building the
    /// grid and the measure.
    pub fn validate(&self) -> Result<()> {
        if self.routes.is_empty() && self.diagnostics.is_empty() {
            return Err(Error::Config("nothing to run: the route list is empty and no diagnostics are configured".into()));
        }
        let mut seen = self.routes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.routes.len() {
            return Err(Error::Config("duplicate route".into()));
        }
        for r in &self.routes {
            let name = r.name();
            self.need(&self.problem, "problem", name)?;
            self.need(&self.initial, "initial", name)?;
            self.need(&self.time, "time", name)?;
            let time_changed_mc = self.montecarlo.as_ref().is_some_and(|m| m.kind == MonteCarloKind::TimeChanged);
            let needs_measure = match r {
                Route::Montecarlo => time_changed_mc,
                _ => r.is_fractional() || *r == Route::TimeChangedResidual,
            };
            if needs_measure {
                self.measure()?;
            }
            match r {
                Route::Spectral => {
                    if self.measure()?.single_beta().is_none() {
                        return Err(Error::Config("the spectral route needs a single-atom measure".into()));
                    }
                }
                Route::TimeDependent | Route::TimeChangedResidual => self.need(&self.time_dependent, "time_dependent", name)?,
                Route::Montecarlo => self.need(&self.montecarlo, "montecarlo", name)?,
                _ => {}
            }
        }
        if let Some(p) = &self.problem {
            p.grid.build()?;
        }
        if let Some(t) = &self.time {
            if !(t.dt > 0.0 && t.t_final > 0.0 && t.dt <= t.t_final) {
                return Err(Error::Config("need 0 < dt <= t_final".into()));
            }
            if t.report_times().iter().any(|&r| !(r > 0.0 && r <= t.t_final * (1.0 + 1e-12))) {
                return Err(Error::Config("report times must lie in (0, t_final]".into()));
            }
        }
        if let Some(td) = &self.time_dependent {
            if !(td.gamma > -1.0 && td.gamma < 1.0) {
                return Err(Error::Config("time_dependent.gamma must lie in (-1, 1)".into()));
            }
        }
        if let Some(mc) = &self.montecarlo {
            if mc.n_paths == 0 {
                return Err(Error::Config("montecarlo.n_paths must be positive".into()));
            }
            if mc.kind == MonteCarloKind::Stationary && mc.window.is_none() {
                return Err(Error::Config("stationary Monte Carlo needs a window".into()));
            }
        }
        let d = &self.diagnostics;
        if d.density_lemmas.is_some() || d.levy.is_some() || d.g_operator.is_some() {
            self.measure()?;
        }
        if d.levy.is_some() && self.measure()?.single_beta() != Some(0.5) {
            return Err(Error::Config("the Lévy closed form needs the single atom beta = 0.5".into()));
        }
        if d.classical_limit.is_some() && !self.routes.contains(&Route::Classical) {
            return Err(Error::Config("classical_limit needs the classical route".into()));
        }
        if d.ellipticity.is_some() {
            self.need(&self.problem, "problem", "ellipticity")?;
        }
        if self.oracle == Some(Oracle::SineMode) {
            self.sine_mode_rate()?;
        }
        Ok(())
    }

    /// `λ = -a (kπ/L)²` of the sine-mode oracle, after checking that it applies.
    pub fn sine_mode_rate(&self) -> Result<f64> {
        let p = self.problem.as_ref().ok_or_else(|| Error::Config("oracle needs [problem]".into()))?;
        let Some(InitialPreset::Sine { mode }) = self.initial else {
            return Err(Error::Config("sine_mode oracle needs sine initial data".into()));
        };
        let a = match p.operator.diffusion {
            Coefficient::Constant { value } => value,
            _ => return Err(Error::Config("sine_mode oracle needs constant diffusion".into())),
        };
        if !p.operator.drift.is_zero() || !p.operator.killing.is_zero() || !matches!(p.operator.jump, JumpKernel::None) {
            return Err(Error::Config("sine_mode oracle needs pure diffusion".into()));
        }
        if !(p.boundary_a.is_pure_absorbing() && p.boundary_b.is_pure_absorbing()) {
            return Err(Error::Config("sine_mode oracle needs absorbing ends".into()));
        }
        let g = p.grid.build()?;
        let k = mode as f64 * PI / (g.b - g.a);
        Ok(-a * k * k)
    }

    pub fn build_operator(&self) -> Result<(WaldenfelsSpec, WentcelSpec, WentcelSpec, Grid1D)> {
        let p = self.problem.as_ref().ok_or_else(|| Error::Config("no [problem] section".into()))?;
        Ok((p.operator.clone(), p.boundary_a.clone(), p.boundary_b.clone(), p.grid.build()?))
    }
}
