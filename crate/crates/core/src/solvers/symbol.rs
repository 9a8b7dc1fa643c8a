//! Symbol-level ellipticity of constant-coefficient generators.

use crate::check::Check;
use crate::spatial::{Grid1D, WaldenfelsSpec};

/// `-Re σ(x, ξ)` of the generator frozen at `x` on the whole line:
/// `a ξ² - c0 - ∫ (cos ξ(y-x) - 1) ν(x, y) dy`, the jump integral taken by the
/// trapezoid rule over the interval with `8 (n+1)` cells.
pub fn neg_symbol_real(spec: &WaldenfelsSpec, grid: &Grid1D, x: f64, xi: f64) -> f64 {
    let a = spec.diffusion.eval(x);
    let c0 = spec.killing.eval(x);
    let mut jump = 0.0;
    if !spec.jump.is_none() {
        let cells = 8 * (grid.n + 1);
        let dy = (grid.b - grid.a) / cells as f64;
        let len = grid.b - grid.a;
        for k in 0..=cells {
            let y = grid.a + k as f64 * dy;
            let w = if k == 0 || k == cells { 0.5 * dy } else { dy };
            jump += w * ((xi * (y - x)).cos() - 1.0) * spec.jump.density(x, y, len);
        }
    }
    a * xi * xi - c0 - jump
}

/// Checks `-Re σ(x, ξ) ≥ κ |ξ|^2` with `κ = min a` over the sample points,
/// for `ξ` up to the grid Nyquist number `π/h`. The observed value is
/// `min -Re σ / (κ ξ²)`, which must be at least 1.
pub fn ellipticity_check(spec: &WaldenfelsSpec, grid: &Grid1D, xs: &[f64], xi_samples: usize) -> Check {
    let kappa = xs.iter().map(|&x| spec.diffusion.eval(x)).fold(f64::INFINITY, f64::min);
    let xi_max = std::f64::consts::PI / grid.h();
    let mut worst = f64::INFINITY;
    for &x in xs {
        for k in 1..=xi_samples {
            let xi = xi_max * k as f64 / xi_samples as f64;
            worst = worst.min(neg_symbol_real(spec, grid, x, xi) / (kappa * xi * xi));
        }
    }
    let error = (1.0 - worst).max(0.0);
    Check::with_error("symbol_ellipticity", worst, 1.0, error, 1e-12).note(format!("kappa = {kappa}, exponent 2"))
}
