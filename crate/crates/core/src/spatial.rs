//! Dense discretizations of the one-dimensional Waldenfels operator
//!
//! `A u = a u'' + b u' + c0 u + ∫_Ω [u(y) - φ(x,y)(u(x) + (y-x)u'(x))] ν(x,y) dy`
//!
//! on `[a, b]`, closed by Wentcel boundary rows
//!
//! `γ u + μ ∂u/∂n - δ A u + ∫_Ω (u(y) - τ₂ u(x')) ν₂(y) dy = 0`.
//!
//! On a 0-dimensional boundary the tangential diffusion and on-boundary jump
//! parts of the Wentcel operator have nothing to act on; only the absorption,
//! reflection, viscosity and jump-into-the-interior terms remain.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with `n` interior nodes and both endpoints: `x_i = a + i h`, `i = 0..=n+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::param("interval", format!("need finite a < b, got [{a}, {b}]")));
        }
        if n < 3 {
            return Err(Error::param("n", "need at least 3 interior nodes"));
        }
        Ok(Self { a, b, n })
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }

    /// Total node count `n + 2`.
    pub fn len(&self) -> usize {
        self.n + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.n + 1 {
            self.b
        } else {
            self.a + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Trapezoid weights (`h/2` at the endpoints).
    pub fn weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.len()];
        w[0] = 0.5 * h;
        w[self.n + 1] = 0.5 * h;
        w
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn nearest_node(&self, x: f64) -> usize {
        (((x - self.a) / self.h()).round().max(0.0) as usize).min(self.n + 1)
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().into_iter().map(f).collect()
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A spatial coefficient `x ↦ c(x)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant { value: f64 },
    Linear { intercept: f64, slope: f64 },
    /// Piecewise-linear interpolation, constant beyond the table.
    Tabulated { x: Vec<f64>, y: Vec<f64> },
    #[serde(skip)]
    Custom(ScalarFn),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant { value } => write!(f, "Constant({value})"),
            Coefficient::Linear { intercept, slope } => write!(f, "Linear({intercept} + {slope} x)"),
            Coefficient::Tabulated { x, .. } => write!(f, "Tabulated({} points)", x.len()),
            Coefficient::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Coefficient::Constant { value }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Linear { intercept, slope } => intercept + slope * x,
            Coefficient::Tabulated { x: xs, y: ys } => {
                if x <= xs[0] {
                    return ys[0];
                }
                let k = xs.partition_point(|&p| p <= x);
                if k >= xs.len() {
                    return ys[xs.len() - 1];
                }
                let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                ys[k - 1] + t * (ys[k] - ys[k - 1])
            }
            Coefficient::Custom(f) => f(x),
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if let Coefficient::Tabulated { x, y } = self {
            if x.is_empty() || x.len() != y.len() || x.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::param(name, "tabulated coefficient needs matching, strictly increasing points"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coefficient::Constant { value } if *value == 0.0)
    }
}

/// Finite-activity Lévy kernel `ν(x, y)` on `Ω × Ω`.
#[derive(Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpKernel {
    #[default]
    None,
    /// `rate · N(y - x; 0, width²)` restricted to Ω.
    Gaussian { rate: f64, width: f64 },
    /// `rate / |Ω|`.
    Uniform { rate: f64 },
    #[serde(skip)]
    Custom(KernelFn),
}

impl fmt::Debug for JumpKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpKernel::None => write!(f, "None"),
            JumpKernel::Gaussian { rate, width } => write!(f, "Gaussian(rate={rate}, width={width})"),
            JumpKernel::Uniform { rate } => write!(f, "Uniform(rate={rate})"),
            JumpKernel::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl JumpKernel {
    pub fn is_none(&self) -> bool {
        matches!(self, JumpKernel::None)
    }

    pub fn density(&self, x: f64, y: f64, len: f64) -> f64 {
        match self {
            JumpKernel::None => 0.0,
            JumpKernel::Gaussian { rate, width } => {
                let z = (y - x) / width;
                rate * (-0.5 * z * z).exp() / (width * (2.0 * std::f64::consts::PI).sqrt())
            }
            JumpKernel::Uniform { rate } => rate / len,
            JumpKernel::Custom(f) => f(x, y),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            JumpKernel::Gaussian { rate, width } if !(*rate >= 0.0 && *width > 0.0) => {
                Err(Error::param("jump", "gaussian kernel needs rate >= 0 and width > 0"))
            }
            JumpKernel::Uniform { rate } if !(*rate >= 0.0) => Err(Error::param("jump", "uniform kernel needs rate >= 0")),
            _ => Ok(()),
        }
    }
}

/// Local unity `φ(x, y) = clamp(2 - |y-x|/w, 0, 1)`: equal to 1 for
/// `|y-x| ≤ w`, vanishing beyond `2w`.
pub fn local_unity(width: f64, x: f64, y: f64) -> f64 {
    (2.0 - (y - x).abs() / width).clamp(0.0, 1.0)
}

/// Interior operator coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaldenfelsSpec {
    /// Killing coefficient `c0(x) ≤ 0`.
    #[serde(default = "zero_coefficient")]
    pub killing: Coefficient,
    #[serde(default = "zero_coefficient")]
    pub drift: Coefficient,
    /// Diffusion coefficient `a(x) ≥ a0 > 0`.
    pub diffusion: Coefficient,
    #[serde(default)]
    pub jump: JumpKernel,
    /// Plateau half-width of the local unity; `4h` when absent.
    #[serde(default)]
    pub unity_width: Option<f64>,
}

fn zero_coefficient() -> Coefficient {
    Coefficient::constant(0.0)
}

impl WaldenfelsSpec {
    /// Pure diffusion `a u''`.
    pub fn diffusion(a: f64) -> Self {
        Self {
            killing: zero_coefficient(),
            drift: zero_coefficient(),
            diffusion: Coefficient::constant(a),
            jump: JumpKernel::None,
            unity_width: None,
        }
    }

    pub fn with_drift(mut self, drift: Coefficient) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_killing(mut self, killing: Coefficient) -> Self {
        self.killing = killing;
        self
    }

    pub fn with_jump(mut self, jump: JumpKernel) -> Self {
        self.jump = jump;
        self
    }

    pub fn unity_width_on(&self, grid: &Grid1D) -> f64 {
        self.unity_width.unwrap_or(4.0 * grid.h())
    }

    /// `∫_Ω (1 - φ(x,y)) ν(x,y) dy` by the assembly quadrature.
    pub fn outer_jump_mass(&self, grid: &Grid1D, x: f64) -> f64 {
        if self.jump.is_none() {
            return 0.0;
        }
        let w = self.unity_width_on(grid);
        let len = grid.b - grid.a;
        grid.nodes()
            .iter()
            .zip(grid.weights())
            .map(|(&y, wy)| wy * (1.0 - local_unity(w, x, y)) * self.jump.density(x, y, len))
            .sum()
    }

    /// Total jump intensity `λ(x) = ∫_Ω ν(x,y) dy` by the assembly quadrature.
    pub fn jump_rate(&self, grid: &Grid1D, x: f64) -> f64 {
        if self.jump.is_none() {
            return 0.0;
        }
        let len = grid.b - grid.a;
        grid.nodes().iter().zip(grid.weights()).map(|(&y, wy)| wy * self.jump.density(x, y, len)).sum()
    }
}

/// Jump-into-the-interior density `ν₂(y)` of a boundary point.
#[derive(Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpIn {
    #[default]
    None,
    /// `rate / |Ω|`.
    Uniform { rate: f64 },
    /// `rate · e^{-d/length} / length` with `d` the distance to the endpoint.
    Exponential { rate: f64, length: f64 },
    #[serde(skip)]
    Custom(ScalarFn),
}

impl fmt::Debug for JumpIn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpIn::None => write!(f, "None"),
            JumpIn::Uniform { rate } => write!(f, "Uniform(rate={rate})"),
            JumpIn::Exponential { rate, length } => write!(f, "Exponential(rate={rate}, length={length})"),
            JumpIn::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl JumpIn {
    pub fn is_none(&self) -> bool {
        matches!(self, JumpIn::None)
    }

    pub fn density(&self, endpoint: f64, y: f64, len: f64) -> f64 {
        match self {
            JumpIn::None => 0.0,
            JumpIn::Uniform { rate } => rate / len,
            JumpIn::Exponential { rate, length } => rate * (-(y - endpoint).abs() / length).exp() / length,
            JumpIn::Custom(f) => f(y),
        }
    }
}

/// Wentcel condition at one endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WentcelSpec {
    /// Absorption `γ ≤ 0`.
    #[serde(default)]
    pub gamma: f64,
    /// Reflection weight `μ ≥ 0` on the outward normal derivative.
    #[serde(default)]
    pub mu: f64,
    /// Viscosity weight `δ ≥ 0` on `A` at the endpoint.
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub jump_in: JumpIn,
    /// Local unity weight `τ₂ ∈ [0, 1]`.
    #[serde(default = "one")]
    pub tau2: f64,
}

fn one() -> f64 {
    1.0
}

impl WentcelSpec {
    /// `u = 0`.
    pub fn absorbing() -> Self {
        Self { gamma: -1.0, mu: 0.0, delta: 0.0, jump_in: JumpIn::None, tau2: 1.0 }
    }

    /// `∂u/∂n = 0`.
    pub fn reflecting() -> Self {
        Self { gamma: 0.0, mu: 1.0, delta: 0.0, jump_in: JumpIn::None, tau2: 1.0 }
    }

    /// `γ u + μ ∂u/∂n = 0`.
    pub fn robin(gamma: f64, mu: f64) -> Self {
        Self { gamma, mu, delta: 0.0, jump_in: JumpIn::None, tau2: 1.0 }
    }

    pub fn with_viscosity(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_jump_in(mut self, jump_in: JumpIn, tau2: f64) -> Self {
        self.jump_in = jump_in;
        self.tau2 = tau2;
        self
    }

    pub fn is_pure_reflecting(&self) -> bool {
        self.mu > 0.0 && self.gamma == 0.0 && self.delta == 0.0 && self.jump_in.is_none()
    }

    pub fn is_pure_absorbing(&self) -> bool {
        self.gamma < 0.0 && self.mu == 0.0 && self.delta == 0.0 && self.jump_in.is_none()
    }

    /// `∫_Ω ν₂(y) dy` by the assembly quadrature.
    pub fn jump_in_mass(&self, grid: &Grid1D, endpoint: f64) -> f64 {
        if self.jump_in.is_none() {
            return 0.0;
        }
        let len = grid.b - grid.a;
        grid.nodes().iter().zip(grid.weights()).map(|(&y, w)| w * self.jump_in.density(endpoint, y, len)).sum()
    }

    /// Checks sign conditions, (C2), and the finite-activity surrogate of (C3).
    pub fn validate(&self, grid: &Grid1D, endpoint: f64) -> Result<()> {
        let finite = [self.gamma, self.mu, self.delta, self.tau2].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::BoundarySpec(format!("non-finite coefficient at x={endpoint}")));
        }
        if self.gamma > 0.0 {
            return Err(Error::BoundarySpec(format!("absorption gamma={} must be <= 0 at x={endpoint}", self.gamma)));
        }
        if self.mu < 0.0 || self.delta < 0.0 {
            return Err(Error::BoundarySpec(format!("mu and delta must be >= 0 at x={endpoint}")));
        }
        if !(0.0..=1.0).contains(&self.tau2) {
            return Err(Error::BoundarySpec(format!("tau2={} outside [0, 1] at x={endpoint}", self.tau2)));
        }
        if let JumpIn::Exponential { rate, length } = self.jump_in {
            if !(rate >= 0.0 && length > 0.0) {
                return Err(Error::BoundarySpec("exponential jump-in needs rate >= 0 and length > 0".into()));
            }
        }
        if let JumpIn::Uniform { rate } = self.jump_in {
            if !(rate >= 0.0) {
                return Err(Error::BoundarySpec("uniform jump-in needs rate >= 0".into()));
            }
        }
        let c2 = self.gamma + (1.0 - self.tau2) * self.jump_in_mass(grid, endpoint);
        if c2 > 1e-12 {
            return Err(Error::ConditionViolated {
                node: if endpoint == grid.a { 0 } else { grid.n + 1 },
                x: endpoint,
                condition: format!("(C2): gamma + (1 - tau2) * mass(nu2) = {c2} > 0"),
            });
        }
        if self.mu == 0.0 && self.delta == 0.0 && !(self.gamma < 0.0) {
            return Err(Error::BoundarySpec(format!(
                "transversality: with mu = delta = 0 the absorption gamma must be negative at x={endpoint}"
            )));
        }
        Ok(())
    }
}

/// Role of a matrix row in time stepping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    /// `du_i/dt = (A u)_i`.
    Dynamic,
    /// `(A u)_i = 0` at all times.
    Constraint,
}

/// Dense generator with per-row roles.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    grid: Grid1D,
    matrix: DMatrix<f64>,
    kinds: Vec<RowKind>,
    forward: bool,
    peclet_ok: bool,
}

impl GeneratorMatrix {
    /// Wraps an explicit matrix (used for tests and lower-order operators).
    pub fn from_parts(grid: Grid1D, matrix: DMatrix<f64>, kinds: Vec<RowKind>, forward: bool) -> Result<Self> {
        let n = grid.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.nrows() });
        }
        if kinds.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: kinds.len() });
        }
        Ok(Self { grid, matrix, kinds, forward, peclet_ok: true })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kinds(&self) -> &[RowKind] {
        &self.kinds
    }

    pub fn is_forward(&self) -> bool {
        self.forward
    }

    /// Whether `h < 2 min a / max |b|` held at assembly.
    pub fn peclet_ok(&self) -> bool {
        self.peclet_ok
    }

    pub fn dynamic_indices(&self) -> Vec<usize> {
        (0..self.kinds.len()).filter(|&i| self.kinds[i] == RowKind::Dynamic).collect()
    }

    pub fn constraint_indices(&self) -> Vec<usize> {
        (0..self.kinds.len()).filter(|&i| self.kinds[i] == RowKind::Constraint).collect()
    }

    /// Matrix-vector product summed left to right.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.len();
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        Ok((0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, vj) in v.iter().enumerate() {
                    acc += self.matrix[(i, j)] * vj;
                }
                acc
            })
            .collect())
    }

    /// Largest `|(A v)_i|` over constraint rows.
    pub fn boundary_residual(&self, v: &[f64]) -> Result<f64> {
        let av = self.apply(v)?;
        Ok(self.constraint_indices().iter().map(|&i| av[i].abs()).fold(0.0, f64::max))
    }

    /// Eliminates constraint nodes: with `u_c = P u_d`, the dynamic system
    /// reads `du_d/dt = (A_dd + A_dc P) u_d`.
    pub fn reduced(&self) -> Result<ReducedGenerator> {
        let d = self.dynamic_indices();
        let c = self.constraint_indices();
        let a = &self.matrix;
        let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
        let add = sub(&d, &d);
        let prolong = if c.is_empty() {
            DMatrix::zeros(0, d.len())
        } else {
            let acc = sub(&c, &c);
            let acd = sub(&c, &d);
            let lu = acc.lu();
            let p = lu.solve(&(-acd)).ok_or(Error::SingularSystem { step: 0 })?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::SingularSystem { step: 0 });
            }
            p
        };
        let reduced = if c.is_empty() { add } else { add + sub(&d, &c) * &prolong };
        Ok(ReducedGenerator { dynamic: d, constraint: c, matrix: reduced, prolong, len: self.grid.len() })
    }

    /// Replaces the constraint-node values of `u` so that the boundary rows hold.
    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>> {
        let r = self.reduced()?;
        let ud: Vec<f64> = r.dynamic.iter().map(|&i| u[i]).collect();
        Ok(r.prolongate(&ud))
    }
}

/// Generator restricted to its dynamic nodes.
#[derive(Debug, Clone)]
pub struct ReducedGenerator {
    pub dynamic: Vec<usize>,
    pub constraint: Vec<usize>,
    pub matrix: DMatrix<f64>,
    /// Constraint values in terms of dynamic values.
    pub prolong: DMatrix<f64>,
    len: usize,
}

impl ReducedGenerator {
    /// Full nodal vector from dynamic values.
    pub fn prolongate(&self, ud: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.len];
        for (k, &i) in self.dynamic.iter().enumerate() {
            full[i] = ud[k];
        }
        if !self.constraint.is_empty() {
            let uc = &self.prolong * DVector::from_column_slice(ud);
            for (k, &i) in self.constraint.iter().enumerate() {
                full[i] = uc[k];
            }
        }
        full
    }
}

struct Sampled {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

fn sample_and_check(spec: &WaldenfelsSpec, grid: &Grid1D) -> Result<Sampled> {
    spec.diffusion.validate("diffusion")?;
    spec.drift.validate("drift")?;
    spec.killing.validate("killing")?;
    spec.jump.validate()?;
    if let Some(w) = spec.unity_width {
        if !(w > 0.0) {
            return Err(Error::param("unity_width", "must be positive"));
        }
    }
    let xs = grid.nodes();
    let a: Vec<f64> = xs.iter().map(|&x| spec.diffusion.eval(x)).collect();
    let b: Vec<f64> = xs.iter().map(|&x| spec.drift.eval(x)).collect();
    let c: Vec<f64> = xs.iter().map(|&x| spec.killing.eval(x)).collect();
    for (i, &x) in xs.iter().enumerate() {
        if !(a[i] > 0.0 && a[i].is_finite()) {
            return Err(Error::ConditionViolated { node: i, x, condition: format!("ellipticity: a = {} must be > 0", a[i]) });
        }
        if !b[i].is_finite() {
            return Err(Error::ConditionViolated { node: i, x, condition: "drift is not finite".into() });
        }
        if !(c[i] <= 0.0) {
            return Err(Error::ConditionViolated { node: i, x, condition: format!("killing c0 = {} must be <= 0", c[i]) });
        }
        let c1 = c[i] + spec.outer_jump_mass(grid, x);
        if c1 > 1e-12 {
            return Err(Error::ConditionViolated { node: i, x, condition: format!("(C1): c0 + ∫(1-φ)ν = {c1} > 0") });
        }
    }
    Ok(Sampled { a, b, c })
}

fn peclet_check(grid: &Grid1D, s: &Sampled) -> bool {
    let amin = s.a.iter().cloned().fold(f64::INFINITY, f64::min);
    let bmax = s.b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let ok = bmax == 0.0 || grid.h() < 2.0 * amin / bmax;
    if !ok {
        log::warn!("mesh Péclet condition h < 2 min a / max|b| fails (h = {}, bound = {})", grid.h(), 2.0 * amin / bmax);
    }
    ok
}

/// Jump block `J` (all nodes): `(J u)_i ≈ ∫ [u(y) - φ(u_i + (y - x_i) u'_i)] ν(x_i, y) dy`
/// with central `u'` inside and one-sided second-order `u'` at the endpoints.
fn jump_block(spec: &WaldenfelsSpec, grid: &Grid1D) -> DMatrix<f64> {
    let n = grid.len();
    let mut j = DMatrix::zeros(n, n);
    if spec.jump.is_none() {
        return j;
    }
    let xs = grid.nodes();
    let w = grid.weights();
    let width = spec.unity_width_on(grid);
    let len = grid.b - grid.a;
    for i in 0..n {
        let mut local = 0.0;
        let mut moment = 0.0;
        for k in 0..n {
            let nu = spec.jump.density(xs[i], xs[k], len);
            let phi = local_unity(width, xs[i], xs[k]);
            j[(i, k)] += w[k] * nu;
            local += w[k] * phi * nu;
            moment += w[k] * phi * nu * (xs[k] - xs[i]);
        }
        j[(i, i)] -= local;
        for (col, coef) in first_derivative(grid, i) {
            j[(i, col)] -= moment * coef;
        }
    }
    j
}

/// Stencil of `u'(x_i)`.
fn first_derivative(grid: &Grid1D, i: usize) -> Vec<(usize, f64)> {
    let h = grid.h();
    let last = grid.n + 1;
    if i == 0 {
        vec![(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
    } else if i == last {
        vec![(last, 1.5 / h), (last - 1, -2.0 / h), (last - 2, 0.5 / h)]
    } else {
        vec![(i - 1, -0.5 / h), (i + 1, 0.5 / h)]
    }
}

/// Stencil of `u''(x_i)`.
fn second_derivative(grid: &Grid1D, i: usize) -> Vec<(usize, f64)> {
    let h2 = grid.h() * grid.h();
    let last = grid.n + 1;
    if i == 0 {
        vec![(0, 2.0 / h2), (1, -5.0 / h2), (2, 4.0 / h2), (3, -1.0 / h2)]
    } else if i == last {
        vec![(last, 2.0 / h2), (last - 1, -5.0 / h2), (last - 2, 4.0 / h2), (last - 3, -1.0 / h2)]
    } else {
        vec![(i - 1, 1.0 / h2), (i, -2.0 / h2), (i + 1, 1.0 / h2)]
    }
}

/// Row of `A` at node `i` (one-sided at the endpoints).
fn operator_row(grid: &Grid1D, s: &Sampled, jump: &DMatrix<f64>, i: usize) -> Vec<f64> {
    let mut row: Vec<f64> = jump.row(i).iter().copied().collect();
    for (col, coef) in second_derivative(grid, i) {
        row[col] += s.a[i] * coef;
    }
    for (col, coef) in first_derivative(grid, i) {
        row[col] += s.b[i] * coef;
    }
    row[i] += s.c[i];
    row
}

fn wentcel_row(grid: &Grid1D, s: &Sampled, jump: &DMatrix<f64>, bnd: &WentcelSpec, i: usize) -> Vec<f64> {
    let endpoint = grid.x(i);
    let mut row = vec![0.0; grid.len()];
    row[i] += bnd.gamma;
    // outward normal: -d/dx at a, +d/dx at b
    let sign = if i == 0 { -1.0 } else { 1.0 };
    for (col, coef) in first_derivative(grid, i) {
        row[col] += bnd.mu * sign * coef;
    }
    if bnd.delta != 0.0 {
        for (col, v) in operator_row(grid, s, jump, i).iter().enumerate() {
            row[col] -= bnd.delta * v;
        }
    }
    if !bnd.jump_in.is_none() {
        let len = grid.b - grid.a;
        let mut mass = 0.0;
        for (k, (&y, w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            let nu = w * bnd.jump_in.density(endpoint, y, len);
            row[k] += nu;
            mass += nu;
        }
        row[i] -= bnd.tau2 * mass;
    }
    row
}

/// Backward generator: interior rows discretize `A`, endpoint rows are Wentcel constraints.
pub fn assemble_generator(
    spec: &WaldenfelsSpec,
    bnd_a: &WentcelSpec,
    bnd_b: &WentcelSpec,
    grid: &Grid1D,
) -> Result<GeneratorMatrix> {
    let s = sample_and_check(spec, grid)?;
    bnd_a.validate(grid, grid.a)?;
    bnd_b.validate(grid, grid.b)?;
    let peclet_ok = peclet_check(grid, &s);
    let jump = jump_block(spec, grid);
    let n = grid.len();
    let last = n - 1;
    let mut m = DMatrix::zeros(n, n);
    let mut kinds = vec![RowKind::Dynamic; n];
    for i in 1..last {
        for (j, v) in operator_row(grid, &s, &jump, i).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    for (i, bnd) in [(0, bnd_a), (last, bnd_b)] {
        for (j, v) in wentcel_row(grid, &s, &jump, bnd, i).into_iter().enumerate() {
            m[(i, j)] = v;
        }
        kinds[i] = RowKind::Constraint;
    }
    Ok(GeneratorMatrix { grid: *grid, matrix: m, kinds, forward: false, peclet_ok })
}

fn check_symmetric_kernel(spec: &WaldenfelsSpec, grid: &Grid1D) -> Result<()> {
    if spec.jump.is_none() {
        return Ok(());
    }
    let xs = grid.nodes();
    let len = grid.b - grid.a;
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for &x in &xs {
        for &y in &xs {
            let p = spec.jump.density(x, y, len);
            let q = spec.jump.density(y, x, len);
            scale = scale.max(p.abs());
            worst = worst.max((p - q).abs());
        }
    }
    if worst > 1e-12 * scale.max(1.0) {
        return Err(Error::param("jump", format!("forward assembly needs a symmetric kernel (asymmetry {worst:e})")));
    }
    Ok(())
}

/// Forward (density) operator in conservation form with current
/// `F = b p - ∂x(a p)`. Reflecting endpoints carry zero current through half
/// control volumes; absorbing endpoints are `p = 0` constraints. Other
/// Wentcel conditions are rejected.
pub fn assemble_forward(
    spec: &WaldenfelsSpec,
    bnd_a: &WentcelSpec,
    bnd_b: &WentcelSpec,
    grid: &Grid1D,
) -> Result<GeneratorMatrix> {
    let s = sample_and_check(spec, grid)?;
    bnd_a.validate(grid, grid.a)?;
    bnd_b.validate(grid, grid.b)?;
    for (bnd, x) in [(bnd_a, grid.a), (bnd_b, grid.b)] {
        if !bnd.is_pure_reflecting() && !bnd.is_pure_absorbing() {
            return Err(Error::BoundarySpec(format!(
                "forward assembly supports pure reflecting or pure absorbing endpoints only (x={x})"
            )));
        }
    }
    check_symmetric_kernel(spec, grid)?;
    let peclet_ok = peclet_check(grid, &s);
    let n = grid.len();
    let last = n - 1;
    let h = grid.h();
    let mut m = DMatrix::zeros(n, n);
    // flux through face k+1/2 as a linear form in p
    let face = |k: usize| -> [(usize, f64); 2] {
        let bm = spec.drift.eval(0.5 * (grid.x(k) + grid.x(k + 1)));
        [(k, 0.5 * bm + s.a[k] / h), (k + 1, 0.5 * bm - s.a[k + 1] / h)]
    };
    for i in 0..n {
        let vol = if i == 0 || i == last { 0.5 * h } else { h };
        if i < last {
            for (col, v) in face(i) {
                m[(i, col)] -= v / vol;
            }
        }
        if i > 0 {
            for (col, v) in face(i - 1) {
                m[(i, col)] += v / vol;
            }
        }
        m[(i, i)] += s.c[i];
    }
    // weighted adjoint of the jump block
    let jump = jump_block(spec, grid);
    let w = grid.weights();
    for i in 0..n {
        for k in 0..n {
            m[(i, k)] += w[k] * jump[(k, i)] / w[i];
        }
    }
    let mut kinds = vec![RowKind::Dynamic; n];
    for (i, bnd) in [(0, bnd_a), (last, bnd_b)] {
        if bnd.is_pure_absorbing() {
            for k in 0..n {
                m[(i, k)] = 0.0;
            }
            m[(i, i)] = 1.0;
            kinds[i] = RowKind::Constraint;
        }
    }
    Ok(GeneratorMatrix { grid: *grid, matrix: m, kinds, forward: true, peclet_ok })
}

/// Discrete probability current of a density on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Current {
    /// `F_{i+1/2}`, `i = 0..=n`.
    pub faces: Vec<f64>,
    /// Current at `x = a` (positive = towards `+x`).
    pub at_a: f64,
    pub at_b: f64,
}

/// Face currents `b p - ∂x(a p)` of `p`, with the endpoint values recovered
/// from the half-cell balance of the forward operator `m` (so they vanish at
/// reflecting ends and equal the outflow at absorbing ends).
pub fn probability_current(spec: &WaldenfelsSpec, forward: &GeneratorMatrix, p: &[f64]) -> Result<Current> {
    let grid = forward.grid();
    if p.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: p.len() });
    }
    let h = grid.h();
    let last = grid.n + 1;
    let faces: Vec<f64> = (0..last)
        .map(|k| {
            let bm = spec.drift.eval(0.5 * (grid.x(k) + grid.x(k + 1)));
            let (ak, ak1) = (spec.diffusion.eval(grid.x(k)), spec.diffusion.eval(grid.x(k + 1)));
            0.5 * bm * (p[k] + p[k + 1]) - (ak1 * p[k + 1] - ak * p[k]) / h
        })
        .collect();
    let mp = forward.apply(p)?;
    let at_a = match forward.kinds()[0] {
        // dp0/dt = (F_a - F_{1/2}) / (h/2)
        RowKind::Dynamic => faces[0] + 0.5 * h * mp[0] - 0.5 * h * spec_source(spec, forward, p, 0),
        RowKind::Constraint => faces[0],
    };
    let at_b = match forward.kinds()[last] {
        RowKind::Dynamic => faces[last - 1] - 0.5 * h * mp[last] + 0.5 * h * spec_source(spec, forward, p, last),
        RowKind::Constraint => faces[last - 1],
    };
    Ok(Current { faces, at_a, at_b })
}

// zero-order and jump contributions to (M p)_i, which are not transport
fn spec_source(spec: &WaldenfelsSpec, forward: &GeneratorMatrix, p: &[f64], i: usize) -> f64 {
    let grid = forward.grid();
    let c = spec.killing.eval(grid.x(i)) * p[i];
    if spec.jump.is_none() {
        return c;
    }
    let jump = jump_block(spec, grid);
    let w = grid.weights();
    c + (0..grid.len()).map(|k| w[k] * jump[(k, i)] / w[i] * p[k]).sum::<f64>()
}

/// Lower-order operator `B u = b u' + c u` for the time-dependent problem.
/// Endpoint rows are zero (the boundary rows of `A` act as constraints).
pub fn assemble_lower_order(drift: &Coefficient, killing: &Coefficient, grid: &Grid1D) -> Result<DMatrix<f64>> {
    drift.validate("drift")?;
    killing.validate("killing")?;
    let n = grid.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 1..n - 1 {
        let x = grid.x(i);
        let (b, c) = (drift.eval(x), killing.eval(x));
        if !(b.is_finite() && c.is_finite()) {
            return Err(Error::ConditionViolated { node: i, x, condition: "lower-order coefficient not finite".into() });
        }
        for (col, coef) in first_derivative(grid, i) {
            m[(i, col)] += b * coef;
        }
        m[(i, i)] += c;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn heat(n: usize) -> (Grid1D, GeneratorMatrix) {
        let g = Grid1D::new(0.0, PI, n).unwrap();
        let m = assemble_generator(&WaldenfelsSpec::diffusion(1.0), &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &g).unwrap();
        (g, m)
    }

    #[test]
    fn interior_stencil_is_second_difference() {
        let (g, m) = heat(10);
        let h2 = g.h() * g.h();
        for i in 1..=g.n {
            for j in 0..g.len() {
                let expect = if j == i {
                    -2.0 / h2
                } else if j + 1 == i || j == i + 1 {
                    1.0 / h2
                } else {
                    0.0
                };
                assert!((m.matrix()[(i, j)] - expect).abs() < 1e-9 * (1.0 / h2));
            }
        }
        assert_eq!(m.constraint_indices(), vec![0, g.n + 1]);
    }

    #[test]
    fn five_node_hand_computed_row() {
        // [0, 4] with 3 interior nodes: h = 1; a = 2, b = 1, c0 = -0.5
        let g = Grid1D::new(0.0, 4.0, 3).unwrap();
        let spec = WaldenfelsSpec::diffusion(2.0).with_drift(Coefficient::constant(1.0)).with_killing(Coefficient::constant(-0.5));
        let m = assemble_generator(&spec, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &g).unwrap();
        let u = [1.0, 2.0, 4.0, 3.0, 0.5];
        let au = m.apply(&u).unwrap();
        // node 2: 2(2 - 8 + 3) + (3 - 2)/2 - 0.5 * 4 = -6 + 0.5 - 2
        assert!((au[2] + 7.5).abs() < 1e-12);
        // absorbing rows: -u
        assert_eq!(au[0], -1.0);
        assert_eq!(au[4], -0.5);
    }

    #[test]
    fn constants_are_annihilated_with_reflection() {
        let g = Grid1D::new(-1.0, 2.0, 40).unwrap();
        let spec = WaldenfelsSpec::diffusion(0.7).with_drift(Coefficient::Linear { intercept: 0.2, slope: -0.3 });
        let m = assemble_generator(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &g).unwrap();
        let au = m.apply(&vec![1.0; g.len()]).unwrap();
        assert!(au.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn constant_test_function_gives_c1_quantity() {
        let g = Grid1D::new(0.0, 1.0, 60).unwrap();
        let base = WaldenfelsSpec::diffusion(1.0).with_jump(JumpKernel::Gaussian { rate: 2.0, width: 0.2 });
        let need: f64 = g.nodes().iter().map(|&x| base.outer_jump_mass(&g, x)).fold(0.0, f64::max);
        let spec = base.with_killing(Coefficient::constant(-need));
        let m = assemble_generator(&spec, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &g).unwrap();
        let au = m.apply(&vec![1.0; g.len()]).unwrap();
        for i in 1..=g.n {
            let expect = -need + spec.outer_jump_mass(&g, g.x(i));
            assert!((au[i] - expect).abs() < 1e-10, "node {i}");
            assert!(au[i] <= 1e-12);
        }
    }

    #[test]
    fn condition_violations_are_reported() {
        let g = Grid1D::new(0.0, 1.0, 20).unwrap();
        let bad_a = WaldenfelsSpec::diffusion(1.0).with_killing(Coefficient::constant(0.1));
        let e = assemble_generator(&bad_a, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &g).unwrap_err();
        assert!(matches!(e, Error::ConditionViolated { node: 0, .. }));
        let jumpy = WaldenfelsSpec::diffusion(1.0).with_jump(JumpKernel::Uniform { rate: 1.0 });
        assert!(matches!(
            assemble_generator(&jumpy, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &g),
            Err(Error::ConditionViolated { .. })
        ));
        let degenerate = WaldenfelsSpec { diffusion: Coefficient::Linear { intercept: 0.5, slope: -1.0 }, ..WaldenfelsSpec::diffusion(1.0) };
        assert!(assemble_generator(&degenerate, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &g).is_err());
        // (C3) surrogate and (C2)
        let neither = WentcelSpec { gamma: 0.0, mu: 0.0, delta: 0.0, jump_in: JumpIn::None, tau2: 1.0 };
        assert!(matches!(
            assemble_generator(&WaldenfelsSpec::diffusion(1.0), &neither, &WentcelSpec::absorbing(), &g),
            Err(Error::BoundarySpec(_))
        ));
        let c2 = WentcelSpec::reflecting().with_jump_in(JumpIn::Uniform { rate: 1.0 }, 0.5);
        assert!(matches!(
            assemble_generator(&WaldenfelsSpec::diffusion(1.0), &c2, &WentcelSpec::absorbing(), &g),
            Err(Error::ConditionViolated { .. })
        ));
        let c2_ok = WentcelSpec::robin(-0.5, 1.0).with_jump_in(JumpIn::Uniform { rate: 1.0 }, 0.5);
        assert!(assemble_generator(&WaldenfelsSpec::diffusion(1.0), &c2_ok, &WentcelSpec::absorbing(), &g).is_ok());
    }

    #[test]
    fn wentcel_row_hand_check() {
        // robin + viscosity at a: γu + μ(-u') - δ(a u'' + c u)
        let g = Grid1D::new(0.0, 1.0, 9).unwrap();
        let spec = WaldenfelsSpec::diffusion(1.5).with_killing(Coefficient::constant(-1.0));
        let bnd = WentcelSpec::robin(-2.0, 0.5).with_viscosity(0.25);
        let m = assemble_generator(&spec, &bnd, &WentcelSpec::absorbing(), &g).unwrap();
        // u = x^2: u(0) = 0, u'(0) = 0, u''(0) = 2 (one-sided stencils are exact for quadratics)
        let u = g.sample(|x| x * x);
        let r = m.apply(&u).unwrap()[0];
        assert!((r - (-0.25 * (1.5 * 2.0))).abs() < 1e-10, "{r}");
        // u = 1 + x: γ - μ - δ(-1)
        let u = g.sample(|x| 1.0 + x);
        let r = m.apply(&u).unwrap()[0];
        assert!((r - (-2.0 - 0.5 + 0.25)).abs() < 1e-10, "{r}");
    }

    #[test]
    fn dirichlet_eigenvalues() {
        let (_, m) = heat(100);
        let red = m.reduced().unwrap();
        let mut ev: Vec<f64> = red.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for k in 1..=3 {
            let exact = -((k * k) as f64);
            let h = PI / 101.0;
            assert!((ev[k - 1] - exact).abs() < (k * k) as f64 * (k * k) as f64 * h * h, "k={k}: {}", ev[k - 1]);
        }
    }

    #[test]
    fn jump_quadrature_converges_at_second_order() {
        let spec_on = |g: &Grid1D| {
            let base = WaldenfelsSpec::diffusion(1.0).with_jump(JumpKernel::Gaussian { rate: 1.0, width: 0.3 });
            let need = g.nodes().iter().map(|&x| base.outer_jump_mass(g, x)).fold(0.0, f64::max);
            WaldenfelsSpec { unity_width: Some(0.1), ..base.with_killing(Coefficient::constant(-need - 0.5)) }
        };
        let u = |x: f64| (2.0 * x).sin() + x * x;
        let eval = |n: usize| {
            let g = Grid1D::new(0.0, 2.0, n).unwrap();
            let spec = spec_on(&g);
            let m = assemble_generator(&spec, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &g).unwrap();
            let full = m.apply(&g.sample(u)).unwrap();
            // value at x = 1 minus the local part
            let i = g.nearest_node(1.0);
            full[i] - (-4.0 * (2.0f64).sin() + 2.0) - spec.killing.eval(1.0) * u(1.0)
        };
        let (e1, e2, e3) = (eval(39), eval(79), eval(159));
        let rate = ((e1 - e2) / (e2 - e3)).abs().log2();
        assert!(rate > 1.7, "observed order {rate}");
    }

    #[test]
    fn forward_reflecting_conserves_mass() {
        let g = Grid1D::new(0.0, 1.0, 50).unwrap();
        let spec = WaldenfelsSpec::diffusion(1.0).with_drift(Coefficient::Linear { intercept: 0.5, slope: -1.0 });
        let m = assemble_forward(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &g).unwrap();
        let w = g.weights();
        for j in 0..g.len() {
            let col: f64 = (0..g.len()).map(|i| w[i] * m.matrix()[(i, j)]).sum();
            assert!(col.abs() < 1e-12 * (g.len() as f64) / (g.h() * g.h()), "column {j}: {col}");
        }
    }

    #[test]
    fn forward_steady_state_has_zero_current() {
        let g = Grid1D::new(0.0, 1.0, 80).unwrap();
        let spec = WaldenfelsSpec::diffusion(0.5).with_drift(Coefficient::constant(-1.0));
        let fwd = assemble_forward(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &g).unwrap();
        // steady state: null vector of the forward operator
        let svd = fwd.matrix().clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let k = svd.singular_values.imin();
        let mut p: Vec<f64> = vt.row(k).iter().copied().collect();
        let mass = g.integrate(&p);
        p.iter_mut().for_each(|v| *v /= mass);
        let cur = probability_current(&spec, &fwd, &p).unwrap();
        assert!(cur.at_a.abs() < 1e-12 && cur.at_b.abs() < 1e-12, "{} {}", cur.at_a, cur.at_b);
        assert!(cur.faces.iter().all(|f| f.abs() < 1e-9));
        // exponential profile p ∝ e^{-2x}
        let ratio = p[g.n + 1] / p[0];
        assert!((ratio - (-2.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn forward_absorbing_rows_and_rejections() {
        let g = Grid1D::new(0.0, 1.0, 20).unwrap();
        let spec = WaldenfelsSpec::diffusion(1.0);
        let m = assemble_forward(&spec, &WentcelSpec::absorbing(), &WentcelSpec::reflecting(), &g).unwrap();
        assert_eq!(m.constraint_indices(), vec![0]);
        let p = g.sample(|x| x * (2.0 - x));
        assert!(m.boundary_residual(&p).unwrap() < 1e-15);
        assert!(assemble_forward(&spec, &WentcelSpec::robin(-1.0, 1.0), &WentcelSpec::reflecting(), &g).is_err());
        let skew = spec.clone().with_jump(JumpKernel::Custom(Arc::new(|x, y| if y > x { 0.1 } else { 0.0 })));
        let skew = skew.with_killing(Coefficient::constant(-1.0));
        assert!(assemble_forward(&skew, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &g).is_err());
    }

    #[test]
    fn forward_jumps_conserve_mass_when_compensated() {
        let g = Grid1D::new(0.0, 1.0, 40).unwrap();
        let base = WaldenfelsSpec::diffusion(0.3).with_jump(JumpKernel::Uniform { rate: 1.0 });
        // per-node compensation keeps A 1 = 0 exactly
        let xs = g.nodes();
        let masses: Vec<f64> = xs.iter().map(|&x| base.outer_jump_mass(&g, x)).collect();
        let tab = Coefficient::Tabulated { x: xs.clone(), y: masses.iter().map(|m| -m).collect() };
        let spec = base.with_killing(tab);
        let m = assemble_forward(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &g).unwrap();
        let p = g.sample(|x| 1.0 + x);
        let rate = g.integrate(&m.apply(&p).unwrap());
        assert!(rate.abs() < 1e-10, "{rate}");
    }

    #[test]
    fn projection_satisfies_constraints() {
        let g = Grid1D::new(0.0, 1.0, 30).unwrap();
        let m = assemble_generator(
            &WaldenfelsSpec::diffusion(1.0),
            &WentcelSpec::robin(-1.0, 0.5),
            &WentcelSpec::reflecting().with_viscosity(0.1),
            &g,
        )
        .unwrap();
        let u = m.project(&g.sample(|x| (3.0 * x).cos())).unwrap();
        assert!(m.boundary_residual(&u).unwrap() < 1e-10);
    }

    #[test]
    fn apply_checks_dimensions_and_is_linear() {
        let (g, m) = heat(12);
        assert!(m.apply(&[1.0; 3]).is_err());
        let u = g.sample(|x| x.sin());
        let v = g.sample(|x| x * x);
        let lhs = m.apply(&u.iter().zip(&v).map(|(a, b)| 2.0 * a - 3.0 * b).collect::<Vec<_>>()).unwrap();
        let (au, av) = (m.apply(&u).unwrap(), m.apply(&v).unwrap());
        for i in 0..g.len() {
            assert!((lhs[i] - (2.0 * au[i] - 3.0 * av[i])).abs() < 1e-9 * au[i].abs().max(av[i].abs()).max(1.0));
        }
        let zero = GeneratorMatrix::from_parts(g, DMatrix::zeros(g.len(), g.len()), vec![RowKind::Dynamic; g.len()], false).unwrap();
        assert!(zero.apply(&u).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn peclet_warning_flag() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let spec = WaldenfelsSpec::diffusion(0.01).with_drift(Coefficient::constant(5.0));
        let m = assemble_generator(&spec, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &g).unwrap();
        assert!(!m.peclet_ok());
        let (_, m) = heat(10);
        assert!(m.peclet_ok());
    }

    #[test]
    fn coefficient_presets_round_trip_through_toml() {
        let spec = WaldenfelsSpec::diffusion(1.0)
            .with_drift(Coefficient::Tabulated { x: vec![0.0, 1.0], y: vec![1.0, 3.0] })
            .with_jump(JumpKernel::Gaussian { rate: 1.0, width: 0.1 });
        let text = toml::to_string(&spec).unwrap();
        let back: WaldenfelsSpec = toml::from_str(&text).unwrap();
        assert_eq!(back.drift.eval(0.25), 1.5);
        assert_eq!(back.drift.eval(2.0), 3.0);
        assert!(matches!(back.jump, JumpKernel::Gaussian { .. }));
    }
}
