use std::f64::consts::PI;

use super::*;
use crate::fractional::{mittag_leffler, TimeGrid};
use crate::mixing::MixingMeasure;
use crate::spatial::{assemble_forward, assemble_generator, assemble_lower_order, Coefficient, Grid1D, JumpKernel, WaldenfelsSpec, WentcelSpec};
use crate::subordinators::{default_tau_grid, inverse_density_table, InversionParams};
use nalgebra::DMatrix;

fn heat(n: usize) -> crate::spatial::GeneratorMatrix {
    let grid = Grid1D::new(0.0, PI, n).unwrap();
    assemble_generator(&WaldenfelsSpec::diffusion(1.0), &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &grid).unwrap()
}

fn sup_error(field: &DensityField, k: usize, exact: impl Fn(f64) -> f64) -> f64 {
    let g = field.grid();
    field.row(k).iter().enumerate().map(|(i, v)| (v - exact(g.x(i))).abs()).fold(0.0, f64::max)
}

/// Dirichlet eigenvalue of the three-point Laplacian for the mode `sin x`.
fn discrete_lambda(h: f64) -> f64 {
    -2.0 * (1.0 - h.cos()) / (h * h)
}

#[test]
fn classical_heat_sine_matches_exponential() {
    let a = heat(200);
    let u0 = a.grid().sample(f64::sin);
    let f = solve_classical(&a, &u0, &TimeGrid::covering(1e-3, 1.0).unwrap(), &StepOptions::default()).unwrap();
    let k = f.time_index(1.0).unwrap();
    let err = sup_error(&f, k, |x| (-1.0f64).exp() * x.sin());
    assert!(err < 1e-4, "err {err}");
    assert!(f.row(0).iter().zip(&u0).all(|(a, b)| a == b));
}

#[test]
fn forward_reflecting_conserves_mass() {
    let grid = Grid1D::new(0.0, 1.0, 80).unwrap();
    let spec = WaldenfelsSpec::diffusion(0.5).with_drift(Coefficient::Linear { intercept: 0.3, slope: -0.6 });
    let fwd = assemble_forward(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &grid).unwrap();
    let u0 = grid.sample(|x| (1.0 + (3.0 * x).cos()).max(0.0));
    let f = solve_classical(&fwd, &u0, &TimeGrid::covering(1e-2, 1.0).unwrap(), &StepOptions::default()).unwrap();
    let m0 = f.mass()[0];
    for m in f.mass() {
        assert!((m - m0).abs() < 1e-8, "{m} vs {m0}");
    }
    assert!(f.min_value() > -1e-8);
}

#[test]
fn zero_data_stays_zero_on_every_route() {
    let a = heat(40);
    let z = vec![0.0; a.grid().len()];
    let tg = TimeGrid::covering(1e-2, 0.5).unwrap();
    let o = StepOptions::default();
    let m = MixingMeasure::single(0.5).unwrap();
    assert_eq!(solve_classical(&a, &z, &tg, &o).unwrap().max_abs(), 0.0);
    assert_eq!(solve_fractional_direct(&a, &m, &z, &tg, &o).unwrap().max_abs(), 0.0);
    let b = DMatrix::zeros(a.grid().len(), a.grid().len());
    assert_eq!(solve_time_dependent(&a, &b, -0.5, &z, &tg, &o).unwrap().max_abs(), 0.0);
    let d = decompose(&a, &SpectralOptions::default()).unwrap();
    assert_eq!(solve_spectral(&d, 0.5, &z, &[0.0, 0.5]).unwrap().max_abs(), 0.0);
}

#[test]
fn direct_l1_sine_matches_mittag_leffler() {
    let a = heat(200);
    let u0 = a.grid().sample(f64::sin);
    let m = MixingMeasure::single(0.5).unwrap();
    let f = solve_fractional_direct(&a, &m, &u0, &TimeGrid::covering(1e-3, 1.0).unwrap(), &StepOptions::default()).unwrap();
    for t in [0.25f64, 1.0] {
        let e = mittag_leffler(0.5, -t.sqrt()).unwrap();
        let err = sup_error(&f, f.time_index(t).unwrap(), |x| e * x.sin());
        assert!(err < 2e-3, "t={t} err {err}");
    }
}

#[test]
fn spectral_single_mode_and_initial_recovery() {
    let a = heat(100);
    let h = a.grid().h();
    let u0 = a.grid().sample(f64::sin);
    let d = decompose(&a, &SpectralOptions::default()).unwrap();
    assert!(d.biorthogonality_defect < 1e-6 && d.residual_norm < 1e-6);
    let lam = discrete_lambda(h);
    let times = [0.0, 0.25, 1.0];
    let f = solve_spectral(&d, 0.5, &u0, &times).unwrap();
    assert!(sup_error(&f, 0, f64::sin) < 1e-10);
    for (k, &t) in times.iter().enumerate().skip(1) {
        let e = mittag_leffler(0.5, lam * t.sqrt()).unwrap();
        let err = sup_error(&f, k, |x| e * x.sin());
        assert!(err < 1e-6, "t={t} err {err}");
    }
    // β = 1 reduces to the semi-discrete exponential
    let g = solve_spectral(&d, 1.0, &u0, &[1.0]).unwrap();
    assert!(sup_error(&g, 0, |x| lam.exp() * x.sin()) < 1e-10);
}

#[test]
fn spectral_agrees_with_direct_on_drift_diffusion() {
    let grid = Grid1D::new(0.0, 1.0, 100).unwrap();
    let spec = WaldenfelsSpec::diffusion(0.05).with_drift(Coefficient::Constant { value: 0.2 });
    let a = assemble_generator(&spec, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &grid).unwrap();
    let u0 = grid.sample(|x| (PI * x).sin().powi(2));
    let d = decompose(&a, &SpectralOptions::default()).unwrap();
    let s = solve_spectral(&d, 0.6, &u0, &[0.0, 0.5, 1.0]).unwrap();
    let m = MixingMeasure::single(0.6).unwrap();
    let l1 = solve_fractional_direct(&a, &m, &u0, &TimeGrid::covering(1e-3, 1.0).unwrap(), &StepOptions::default()).unwrap();
    for (k, t) in [0.5, 1.0].into_iter().enumerate() {
        let diff = s.row(k + 1).iter().zip(l1.at(t).unwrap()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 2e-3, "t={t} diff {diff}");
    }
}

#[test]
fn spectral_rejects_complex_spectrum() {
    let grid = Grid1D::new(0.0, 1.0, 5).unwrap();
    let mut m = DMatrix::zeros(7, 7);
    m[(2, 3)] = 1.0;
    m[(3, 2)] = -1.0;
    for i in 1..6 {
        m[(i, i)] -= 1.0;
    }
    m[(0, 0)] = 1.0;
    m[(6, 6)] = 1.0;
    let kinds = (0..7).map(|i| if i == 0 || i == 6 { crate::spatial::RowKind::Constraint } else { crate::spatial::RowKind::Dynamic }).collect();
    let g = crate::spatial::GeneratorMatrix::from_parts(grid, m, kinds, false).unwrap();
    assert!(matches!(decompose(&g, &SpectralOptions::default()), Err(crate::Error::Spectral(_))));
}

#[test]
fn fbm_time_dependent_matches_time_substitution() {
    let a = heat(200);
    let u0 = a.grid().sample(f64::sin);
    let b = DMatrix::zeros(a.grid().len(), a.grid().len());
    let tg = TimeGrid::covering(1e-3, 1.0).unwrap();
    for hurst in [0.25, 0.75] {
        let gamma = 2.0 * hurst - 1.0;
        let f = solve_time_dependent(&a, &b, gamma, &u0, &tg, &StepOptions::default()).unwrap();
        for t in [0.1, 0.5, 1.0] {
            let err = sup_error(&f, f.time_index(t).unwrap(), |x| (-t.powf(2.0 * hurst) / 2.0).exp() * x.sin());
            assert!(err < 1e-3, "H={hurst} t={t} err {err}");
        }
    }
}

#[test]
fn time_dependent_gamma_zero_is_half_classical() {
    let a = heat(60);
    let half = crate::spatial::GeneratorMatrix::from_parts(*a.grid(), a.matrix() / 2.0, a.kinds().to_vec(), false).unwrap();
    let u0 = a.grid().sample(|x| x * (PI - x));
    let b = DMatrix::zeros(a.grid().len(), a.grid().len());
    let tg = TimeGrid::covering(1e-2, 1.0).unwrap();
    let o = StepOptions::default();
    let td = solve_time_dependent(&a, &b, 0.0, &u0, &tg, &o).unwrap();
    let cl = solve_classical(&half, &u0, &tg, &o).unwrap();
    let diff = td.rows().iter().flatten().zip(cl.rows().iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn time_dependent_forward_reflecting_conserves_mass() {
    let grid = Grid1D::new(0.0, 1.0, 60).unwrap();
    let spec = WaldenfelsSpec::diffusion(0.3);
    let fwd = assemble_forward(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &grid).unwrap();
    let b = assemble_lower_order(&Coefficient::Constant { value: 0.0 }, &Coefficient::Constant { value: 0.0 }, &grid).unwrap();
    let u0 = grid.sample(|x| (-(x - 0.3) * (x - 0.3) * 50.0).exp());
    let f = solve_time_dependent(&fwd, &b, 0.5, &u0, &TimeGrid::covering(1e-2, 1.0).unwrap(), &StepOptions::default()).unwrap();
    let m0 = f.mass()[0];
    assert!(f.mass().iter().all(|m| (m - m0).abs() < 1e-8));
}

#[test]
fn power_weights_are_exact_for_linear_integrands() {
    let tau = [0.0, 0.1, 0.3, 0.7, 1.5];
    for gamma in [-0.6, 0.0, 0.3, 0.7] {
        let w = power_weights(&tau, gamma).unwrap();
        // ∫_0^1.5 (2 + 3τ) τ^γ dτ
        let exact = 2.0 * 1.5f64.powf(gamma + 1.0) / (gamma + 1.0) + 3.0 * 1.5f64.powf(gamma + 2.0) / (gamma + 2.0);
        let got: f64 = w.iter().zip(&tau).map(|(w, t)| w * (2.0 + 3.0 * t)).sum();
        assert!((got - exact).abs() < 1e-13 * exact, "γ={gamma}: {got} vs {exact}");
    }
}

fn half_table(times: &[f64]) -> crate::subordinators::InverseDensityTable {
    let m = MixingMeasure::single(0.5).unwrap();
    let t_max = *times.last().unwrap();
    inverse_density_table(&m, times, &default_tau_grid(&m, t_max), InversionParams::default()).unwrap()
}

#[test]
fn subordination_matches_direct_and_g_identities() {
    let a = heat(100);
    let u0 = a.grid().sample(f64::sin);
    let table = half_table(&[0.25, 0.5, 1.0]);
    let sub = solve_subordination(&a, &u0, &table, &StepOptions::default()).unwrap();
    assert!(sub.tail_mass.iter().all(|&m| m < 1e-3));
    let m = MixingMeasure::single(0.5).unwrap();
    let l1 = solve_fractional_direct(&a, &m, &u0, &TimeGrid::covering(1e-3, 1.0).unwrap(), &StepOptions::default()).unwrap();
    for t in [0.25, 0.5, 1.0] {
        let vs = sub.field.at(t).unwrap();
        let vd = l1.at(t).unwrap();
        let diff = vs.iter().zip(vd).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 5e-3, "t={t}: {diff}");
        assert!(a.boundary_residual(vs).unwrap() < 1e-8);
    }
    assert_eq!(sub.field.row(0), u0.as_slice());

    let u = solve_classical_at(&a, &u0, table.tau_grid(), &StepOptions::default().with_max_step(DEFAULT_TAU_STEP)).unwrap();
    let g0 = apply_g(&table, 0.0, &u).unwrap();
    assert_eq!(g0, subordinate(&table, &u).unwrap().field);

    let uexp = DensityField::new(
        *a.grid(),
        table.tau_grid().to_vec(),
        table.tau_grid().iter().map(|&t| a.grid().sample(|x| (-t).exp() * x.sin())).collect(),
    )
    .unwrap();
    let (defect, scale) = semigroup_defect(&table, 0.3, 0.4, &uexp).unwrap();
    assert!(defect < 1e-3 && scale > 0.1, "{defect} {scale}");
}

#[test]
fn subordination_reports_short_tau_coverage() {
    let m = MixingMeasure::single(0.5).unwrap();
    let tau = crate::subordinators::geometric_tau_grid(1e-4, 1.0, 100).unwrap();
    let table = inverse_density_table(&m, &[1.0], &tau, InversionParams::default()).unwrap();
    let a = heat(20);
    let u0 = a.grid().sample(f64::sin);
    let err = solve_subordination(&a, &u0, &table, &StepOptions::default()).unwrap_err();
    assert!(matches!(err, crate::Error::TauCoverage { .. }), "{err}");
}

#[test]
fn time_changed_residual_small_for_heat() {
    let a = heat(100);
    let u0 = a.grid().sample(f64::sin);
    let times: Vec<f64> = (1..=200).map(|k| k as f64 * 5e-3).collect();
    let table = half_table(&times);
    let b = DMatrix::zeros(a.grid().len(), a.grid().len());
    let r0 = verify_time_changed_equation(&a, &b, 0.0, &table, &u0, &ResidualOptions::default()).unwrap();
    assert!(r0.normalized < 1e-2, "{:?}", r0);
    let rz = verify_time_changed_equation(&a, &b, 0.5, &table, &vec![0.0; u0.len()], &ResidualOptions::default()).unwrap();
    assert_eq!(rz.max_residual, 0.0);
}

#[test]
fn symbol_ellipticity_holds_with_jumps() {
    let grid = Grid1D::new(0.0, 1.0, 50).unwrap();
    let spec = WaldenfelsSpec::diffusion(0.4)
        .with_killing(Coefficient::Constant { value: -0.2 })
        .with_jump(JumpKernel::Gaussian { rate: 2.0, width: 0.1 });
    let c = ellipticity_check(&spec, &grid, &[0.25, 0.5, 0.75], 64);
    assert!(c.passed, "{c:?}");
}

#[test]
fn delta_initial_has_unit_mass() {
    let grid = Grid1D::new(0.0, 1.0, 49).unwrap();
    let d = delta_initial(&grid, 0.5);
    assert!((d.iter().sum::<f64>() * grid.h() - 1.0).abs() < 1e-14);
    assert_eq!(grid.integrate(&d), 1.0);
}

#[test]
fn stationary_density_of_drifted_diffusion() {
    // a p'' - b p' = 0 with zero current: p ∝ exp(b x / a)
    let grid = Grid1D::new(0.0, 1.0, 199).unwrap();
    let spec = WaldenfelsSpec::diffusion(0.5).with_drift(Coefficient::Constant { value: 1.0 });
    let fwd = assemble_forward(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &grid).unwrap();
    let p = stationary_density(&fwd).unwrap();
    let z = (2.0f64.exp() - 1.0) / 2.0;
    let err = p.iter().enumerate().map(|(i, v)| (v - (2.0 * grid.x(i)).exp() / z).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4, "{err}");
    assert!((grid.integrate(&p) - 1.0).abs() < 1e-12);
}
