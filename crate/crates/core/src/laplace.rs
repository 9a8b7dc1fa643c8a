//! Fixed-Talbot numerical inversion of Laplace transforms.

use std::f64::consts::PI;

use num_complex::Complex64;

/// One inversion with its conditioning diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TalbotValue {
    pub value: f64,
    /// Largest single contribution to the sum (before the `r/M` factor).
    pub max_term: f64,
    /// Roundoff estimate `r/M · max_term · M · ε`.
    pub roundoff: f64,
    /// Largest scaled contribution from the last quarter of the contour; a
    /// converged sum has negligible terms there.
    pub tail_term: f64,
    pub finite: bool,
}

impl TalbotValue {
    /// True when the estimated roundoff or the contour tail exceeds
    /// `rel · |value| + abs`.
    pub fn is_unstable(&self, rel: f64, abs: f64) -> bool {
        let bound = rel * self.value.abs() + abs;
        !self.finite || self.roundoff > bound || self.tail_term > bound
    }
}

/// Nodes of the fixed-Talbot contour for `t = 1`; scale by `1/t` for other `t`.
#[derive(Debug, Clone)]
pub struct TalbotContour {
    m: usize,
    // (node δ_k, weight e^{δ_k} (1 + iσ_k) / 1) at t = 1; first entry is the real point r
    nodes: Vec<(Complex64, Complex64)>,
    r: f64,
}

impl TalbotContour {
    pub fn new(m: usize) -> Self {
        let m = m.max(2);
        let mf = m as f64;
        let r = 2.0 * mf / 5.0;
        let mut nodes = Vec::with_capacity(m);
        nodes.push((Complex64::new(r, 0.0), Complex64::new(0.5 * r.exp(), 0.0)));
        for k in 1..m {
            let theta = k as f64 * PI / mf;
            let cot = theta.cos() / theta.sin();
            let delta = Complex64::new(r * theta * cot, r * theta);
            let sigma = theta + (theta * cot - 1.0) * cot;
            nodes.push((delta, delta.exp() * Complex64::new(1.0, sigma)));
        }
        Self { m, nodes, r }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Contour points `s_k` at time `t`, in the order expected by [`Self::combine`].
    pub fn points(&self, t: f64) -> impl Iterator<Item = Complex64> + '_ {
        self.nodes.iter().map(move |(d, _)| d / t)
    }

    /// Combines transform values `F(s_k)` (same order as [`Self::points`]).
    pub fn combine(&self, t: f64, values: impl IntoIterator<Item = Complex64>) -> TalbotValue {
        let mut sum = 0.0;
        let mut max_term = 0.0f64;
        let mut tail_term = 0.0f64;
        let mut finite = true;
        let tail_start = self.m - self.m / 4;
        for (k, ((_, w), fv)) in self.nodes.iter().zip(values).enumerate() {
            let term = (w * fv).re;
            if !term.is_finite() {
                finite = false;
            }
            max_term = max_term.max(term.abs());
            if k >= tail_start {
                tail_term = tail_term.max(term.abs());
            }
            sum += term;
        }
        let scale = self.r / (self.m as f64 * t);
        TalbotValue {
            value: scale * sum,
            max_term,
            roundoff: scale * max_term * self.m as f64 * f64::EPSILON,
            tail_term: scale * tail_term,
            finite: finite && sum.is_finite(),
        }
    }

    /// Inverts `F` at `t > 0`.
    pub fn invert(&self, t: f64, f: impl Fn(Complex64) -> Complex64) -> TalbotValue {
        let vals: Vec<Complex64> = self.points(t).map(f).collect();
        self.combine(t, vals)
    }
}
