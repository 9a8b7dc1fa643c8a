//! Borel mixing measures on (0, 1) and the functions they induce:
//! `phi(s) = ∫ s^β dμ(β)` and `K(t) = ∫ t^{-β} / Γ(1-β) dμ(β)`.
//!
//! A continuous part is discretized once, at construction, by Gauss-Legendre
//! quadrature on its support; afterwards the measure behaves as a finite sum
//! of atoms. Nothing here normalizes the total mass unless asked to.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::special::gamma;

pub const DEFAULT_CONTINUOUS_NODES: usize = 64;

/// One atom (or quadrature node) of the measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub beta: f64,
    pub weight: f64,
}

/// Density of the continuous part on (0, 1).
pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ContinuousPart {
    density: DensityFn,
    lo: f64,
    hi: f64,
    nodes: Vec<Atom>,
}

impl ContinuousPart {
    pub fn nodes(&self) -> &[Atom] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn density(&self, beta: f64) -> f64 {
        (self.density)(beta)
    }
}

impl fmt::Debug for ContinuousPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousPart")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("node_count", &self.nodes.len())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct MixingMeasure {
    atoms: Vec<Atom>,
    continuous: Option<ContinuousPart>,
    // atoms followed by continuous nodes, frozen at construction
    components: Vec<Atom>,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("{beta} is not strictly inside (0, 1)")));
    }
    Ok(())
}

impl MixingMeasure {
    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(atoms, None)
    }

    pub fn single(beta: f64) -> Result<Self> {
        Self::from_atoms(&[(beta, 1.0)])
    }

    /// General constructor. `continuous` is `(density, lo, hi, nodes)`; the
    /// density is integrated over `[lo, hi] ⊂ (0, 1)` with Gauss-Legendre.
    pub fn new(atoms: &[(f64, f64)], continuous: Option<(DensityFn, f64, f64, usize)>) -> Result<Self> {
        let mut list = Vec::with_capacity(atoms.len());
        for &(beta, weight) in atoms {
            check_beta(beta)?;
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::param("weight", format!("{weight} must be positive and finite")));
            }
            list.push(Atom { beta, weight });
        }
        let continuous = match continuous {
            None => None,
            Some((density, lo, hi, n)) => {
                if !(lo > 0.0 && hi < 1.0 && lo < hi) {
                    return Err(Error::param("continuous support", format!("[{lo}, {hi}] must lie inside (0, 1)")));
                }
                if n == 0 {
                    return Err(Error::param("nodes", "continuous part needs at least one node"));
                }
                let (x, w) = quad::gauss_legendre(n);
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                let mut nodes = Vec::with_capacity(n);
                for (xi, wi) in x.iter().zip(&w) {
                    let beta = mid + half * xi;
                    let d = density(beta);
                    if !(d >= 0.0 && d.is_finite()) {
                        return Err(Error::param("density", format!("value {d} at beta={beta}")));
                    }
                    if d > 0.0 {
                        nodes.push(Atom { beta, weight: wi * half * d });
                    }
                }
                Some(ContinuousPart { density, lo, hi, nodes })
            }
        };
        let mut components = list.clone();
        if let Some(c) = &continuous {
            components.extend_from_slice(&c.nodes);
        }
        let total: f64 = components.iter().map(|a| a.weight).sum();
        if components.is_empty() || !(total > 0.0 && total.is_finite()) {
            return Err(Error::param("measure", "total mass must be finite and positive"));
        }
        Ok(Self { atoms: list, continuous, components })
    }

    /// Uniform density `mass / (hi - lo)` on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, mass: f64, nodes: usize) -> Result<Self> {
        let height = mass / (hi - lo);
        Self::new(&[], Some((Arc::new(move |_| height), lo, hi, nodes)))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn continuous(&self) -> Option<&ContinuousPart> {
        self.continuous.as_ref()
    }

    /// Atoms followed by the frozen quadrature nodes of the continuous part.
    pub fn components(&self) -> &[Atom] {
        &self.components
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|a| a.weight).sum()
    }

    pub fn single_beta(&self) -> Option<f64> {
        match self.components.as_slice() {
            [a] => Some(a.beta),
            _ => None,
        }
    }

    /// Smallest and largest β carrying mass.
    pub fn support_extremes(&self) -> (f64, f64) {
        let lo = self.components.iter().map(|a| a.beta).fold(f64::INFINITY, f64::min);
        let hi = self.components.iter().map(|a| a.beta).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.total_mass())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &[Atom]| v.iter().map(|a| Atom { beta: a.beta, weight: a.weight * factor }).collect::<Vec<_>>();
        let continuous = self.continuous.as_ref().map(|c| {
            let d = c.density.clone();
            ContinuousPart {
                density: Arc::new(move |b| factor * d(b)),
                lo: c.lo,
                hi: c.hi,
                nodes: scale(&c.nodes),
            }
        });
        Self { atoms: scale(&self.atoms), continuous, components: scale(&self.components) }
    }

    pub fn phi(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::param("s", format!("{s} must be positive")));
        }
        Ok(self.phi_unchecked(s))
    }

    pub(crate) fn phi_unchecked(&self, s: f64) -> f64 {
        self.components.iter().map(|a| a.weight * s.powf(a.beta)).sum()
    }

    /// Φ at a complex argument on the principal branch.
    pub fn phi_complex(&self, s: num_complex::Complex64) -> num_complex::Complex64 {
        let ln = s.ln();
        self.components
            .iter()
            .map(|a| a.weight * (ln * a.beta).exp())
            .sum()
    }

    pub fn kernel_k(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::param("t", format!("{t} must be positive")));
        }
        Ok(self.kernel_k_unchecked(t))
    }

    pub(crate) fn kernel_k_unchecked(&self, t: f64) -> f64 {
        self.components
            .iter()
            .map(|a| a.weight * t.powf(-a.beta) / gamma(1.0 - a.beta))
            .sum()
    }

    /// Numerically Laplace-transforms K and compares with Φ(s)/s.
    ///
    /// The range `[0, t_cutoff]` uses the substitution `t = t_cutoff · u^p`
    /// with `p(1 - β_max) ≥ 1`, which removes the `t^{-β}` singularity.
    pub fn verify_laplace_pair(&self, s_samples: &[f64], t_cutoff: f64) -> Result<LaplacePairReport> {
        if s_samples.is_empty() {
            return Err(Error::param("s_samples", "must be nonempty"));
        }
        if !(t_cutoff > 0.0) {
            return Err(Error::param("t_cutoff", "must be positive"));
        }
        let (_, beta_max) = self.support_extremes();
        let p = (1.0 / (1.0 - beta_max)).ceil().max(1.0);
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 4000 };
        let mut entries = Vec::with_capacity(s_samples.len());
        for &s in s_samples {
            if !(s > 0.0) {
                return Err(Error::param("s", format!("{s} must be positive")));
            }
            let near = quad::integrate(
                |u: f64| {
                    if u <= 0.0 {
                        return 0.0;
                    }
                    let t = t_cutoff * u.powf(p);
                    self.kernel_k_unchecked(t) * (-s * t).exp() * t_cutoff * p * u.powf(p - 1.0)
                },
                0.0,
                1.0,
                &[],
                opts,
            );
            let far = quad::integrate_to_infinity(
                |t: f64| self.kernel_k_unchecked(t) * (-s * t).exp(),
                t_cutoff,
                opts,
            );
            let (near, far) = match (near, far) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(r), _) | (_, Err(r)) => {
                    return Err(Error::QuadratureNonConvergence { context: format!("s={s}"), error: r.error });
                }
            };
            let numeric = near.value + far.value;
            let exact = self.phi_unchecked(s) / s;
            entries.push(LaplacePairEntry { s, numeric, exact, relative_error: (numeric - exact).abs() / exact });
        }
        let max_relative_error = entries.iter().map(|e| e.relative_error).fold(0.0, f64::max);
        Ok(LaplacePairReport { entries, max_relative_error })
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        let atoms: Vec<(f64, f64)> = spec.atoms.iter().map(|a| (a[0], a[1])).collect();
        let continuous = match &spec.continuous {
            None => None,
            Some(c) => Some(c.build()?),
        };
        Self::new(&atoms, continuous)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LaplacePairEntry {
    pub s: f64,
    pub numeric: f64,
    pub exact: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LaplacePairReport {
    pub entries: Vec<LaplacePairEntry>,
    pub max_relative_error: f64,
}

/// Serialized form: `{atoms = [[beta, weight], ...], continuous = {kind, params, nodes}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: Vec<[f64; 2]>,
    #[serde(default)]
    pub continuous: Option<ContinuousSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousKind {
    /// params = [lo, hi, mass]
    Uniform,
    /// density `c · β^p` on (0, 1) with total mass `mass`; params = [p, mass]
    Power,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ContinuousSpec {
    pub kind: ContinuousKind,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_nodes() -> usize {
    DEFAULT_CONTINUOUS_NODES
}

impl ContinuousSpec {
    fn build(&self) -> Result<(DensityFn, f64, f64, usize)> {
        match self.kind {
            ContinuousKind::Uniform => {
                let (lo, hi, mass) = match self.params.as_slice() {
                    [] => (0.0, 1.0, 1.0),
                    [lo, hi] => (*lo, *hi, 1.0),
                    [lo, hi, m] => (*lo, *hi, *m),
                    _ => return Err(Error::Config("uniform params are [lo, hi, mass]".into())),
                };
                // GL nodes never touch the endpoints, so the full (0, 1) is allowed here
                let (lo, hi) = (lo.max(f64::MIN_POSITIVE), hi.min(1.0 - f64::EPSILON));
                let height = mass / (hi - lo);
                Ok((Arc::new(move |_| height), lo, hi, self.nodes))
            }
            ContinuousKind::Power => {
                let (p, mass) = match self.params.as_slice() {
                    [p] => (*p, 1.0),
                    [p, m] => (*p, *m),
                    _ => return Err(Error::Config("power params are [exponent, mass]".into())),
                };
                if !(p > -1.0) {
                    return Err(Error::Config("power exponent must exceed -1".into()));
                }
                let c = mass * (p + 1.0);
                Ok((Arc::new(move |b: f64| c * b.powf(p)), f64::MIN_POSITIVE, 1.0 - f64::EPSILON, self.nodes))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn two_atoms() -> MixingMeasure {
        MixingMeasure::from_atoms(&[(0.3, 0.5), (0.7, 0.5)]).unwrap()
    }

    #[test]
    fn phi_examples() {
        let m = MixingMeasure::single(0.5).unwrap();
        assert_eq!(m.phi(4.0).unwrap(), 2.0);
        assert!((two_atoms().phi(1.0).unwrap() - 1.0).abs() < 1e-15);
        let expected = 0.5 * 4f64.powf(0.3) + 0.5 * 4f64.powf(0.7);
        assert!((two_atoms().phi(4.0).unwrap() - expected).abs() < 1e-14);
        assert!(m.phi(0.0).is_err());
        assert!(m.phi(-1.0).is_err());
    }

    #[test]
    fn kernel_examples() {
        let m = MixingMeasure::single(0.5).unwrap();
        assert!((m.kernel_k(1.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-14);
        for &t in &[0.01, 0.3, 2.0, 17.0] {
            let v = MixingMeasure::single(0.35).unwrap().kernel_k(t).unwrap();
            let expect = t.powf(-0.35) / gamma(0.65);
            assert!((v - expect).abs() / expect < 1e-14);
        }
        // Γ(0.7) = 1.298055332647558, Γ(0.3) = 2.991568987687590
        let expect = 0.5 * 2f64.powf(-0.3) / 1.298_055_332_647_558 + 0.5 * 2f64.powf(-0.7) / 2.991_568_987_687_59;
        assert!((two_atoms().kernel_k(2.0).unwrap() - expect).abs() < 1e-13);
        assert!(m.kernel_k(0.0).is_err());
    }

    #[test]
    fn constructor_rejects_endpoints_and_bad_weights() {
        assert!(MixingMeasure::from_atoms(&[(0.0, 1.0)]).is_err());
        assert!(MixingMeasure::from_atoms(&[(1.0, 1.0)]).is_err());
        assert!(MixingMeasure::from_atoms(&[(0.5, 0.0)]).is_err());
        assert!(MixingMeasure::from_atoms(&[(0.5, -1.0)]).is_err());
        assert!(MixingMeasure::from_atoms(&[]).is_err());
    }

    #[test]
    fn uniform_continuous_part_has_64_nodes_and_unit_mass() {
        let spec = MeasureSpec {
            atoms: vec![],
            continuous: Some(ContinuousSpec { kind: ContinuousKind::Uniform, params: vec![], nodes: 64 }),
        };
        let m = MixingMeasure::from_spec(&spec).unwrap();
        assert_eq!(m.continuous().unwrap().node_count(), 64);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        // ∫ s^β dβ over (0,1) = (s - 1)/ln s
        let s: f64 = 3.0;
        assert!((m.phi(s).unwrap() - (s - 1.0) / s.ln()).abs() < 1e-12);
    }

    #[test]
    fn scaling_and_normalization() {
        let m = two_atoms().scaled(3.0);
        assert!((m.total_mass() - 3.0).abs() < 1e-15);
        assert!((m.normalized().total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_pair_single_half() {
        let m = MixingMeasure::single(0.5).unwrap();
        let r = m.verify_laplace_pair(&[1.0], 1.0).unwrap();
        assert!(r.max_relative_error < 1e-6, "{r:?}");
        // analytic table value: L[t^{-1/2}/sqrt(pi)](1) = 1
        assert!((r.entries[0].exact - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_pair_two_atoms() {
        let r = two_atoms().verify_laplace_pair(&[0.5, 1.0, 2.0, 5.0], 1.0).unwrap();
        assert!(r.max_relative_error < 1e-5, "{r:?}");
    }

    #[test]
    fn phi_over_s_decays_for_mass_one() {
        let m = two_atoms();
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let s = 1.5f64.powi(k);
            let v = m.phi(s).unwrap() / s;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(two_atoms().verify_laplace_pair(&[], 1.0).is_err());
    }
}
