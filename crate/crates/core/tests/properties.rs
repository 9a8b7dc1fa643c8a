//! Property tests for invariants that hold for every admissible input.

use fpklab::fractional::{caputo_l1, mittag_leffler, TimeGrid};
use fpklab::harness::compare_vectors;
use fpklab::mixing::MixingMeasure;
use fpklab::montecarlo::ks_against_density;
use fpklab::solvers::{power_weights, solve_classical, StepOptions};
use fpklab::special::gamma;
use fpklab::spatial::{assemble_forward, assemble_generator, Coefficient, Grid1D, WaldenfelsSpec, WentcelSpec};
use proptest::prelude::*;

fn measure() -> impl Strategy<Value = MixingMeasure> {
    prop::collection::vec((0.1f64..0.9, 0.1f64..2.0), 1..4).prop_map(|atoms| MixingMeasure::from_atoms(&atoms).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn laplace_pair_holds_for_atom_mixtures(m in measure()) {
        let r = m.verify_laplace_pair(&[0.5, 1.0, 2.0, 5.0], 1.0).unwrap();
        prop_assert!(r.max_relative_error <= 1e-5, "{}", r.max_relative_error);
    }

    #[test]
    fn phi_is_increasing_and_kernel_decreasing(m in measure(), s in 0.01f64..10.0, t in 0.01f64..10.0) {
        prop_assert!(m.phi(2.0 * s).unwrap() > m.phi(s).unwrap());
        prop_assert!(m.kernel_k(2.0 * t).unwrap() < m.kernel_k(t).unwrap());
    }

    #[test]
    fn mittag_leffler_is_completely_monotone_on_the_negative_axis(beta in 0.1f64..1.0, x in 0.0f64..40.0) {
        let e = mittag_leffler(beta, -x).unwrap();
        let e2 = mittag_leffler(beta, -x - 0.5).unwrap();
        prop_assert!(e > 0.0 && e <= 1.0 + 1e-12);
        prop_assert!(e2 < e);
    }

    #[test]
    fn caputo_l1_is_exact_for_linear_data(beta in 0.05f64..0.95, slope in -3.0f64..3.0) {
        let grid = TimeGrid::new(0.01, 100).unwrap();
        let samples: Vec<f64> = grid.points().iter().map(|t| 1.0 + slope * t).collect();
        let d = caputo_l1(&grid, &samples, beta).unwrap();
        for (j, v) in d.iter().enumerate().skip(1) {
            let exact = slope * grid.t(j).powf(1.0 - beta) / gamma(2.0 - beta);
            prop_assert!((v - exact).abs() <= 1e-10 * (1.0 + exact.abs()), "{j}: {v} vs {exact}");
        }
    }

    #[test]
    fn power_weights_integrate_linear_functions_exactly(g in -0.9f64..1.0, a in -2.0f64..2.0, b in -2.0f64..2.0, n in 3usize..40) {
        let taus: Vec<f64> = (0..n).map(|i| (i as f64 / (n - 1) as f64).powi(2) * 3.0).collect();
        let w = power_weights(&taus, g).unwrap();
        let sum: f64 = w.iter().zip(&taus).map(|(w, t)| w * (a + b * t)).sum();
        let t = taus[n - 1];
        let exact = a * t.powf(g + 1.0) / (g + 1.0) + b * t.powf(g + 2.0) / (g + 2.0);
        prop_assert!((sum - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
    }

    #[test]
    fn metrics_are_symmetric_and_satisfy_the_triangle_inequality(
        a in prop::collection::vec(-1.0f64..1.0, 12),
        b in prop::collection::vec(-1.0f64..1.0, 12),
        c in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let grid = Grid1D::new(0.0, 1.0, 10).unwrap();
        let ab = compare_vectors(&grid, &a, &b).unwrap();
        let ba = compare_vectors(&grid, &b, &a).unwrap();
        let ac = compare_vectors(&grid, &a, &c).unwrap();
        let cb = compare_vectors(&grid, &c, &b).unwrap();
        prop_assert_eq!(ab.sup, ba.sup);
        prop_assert!((ab.l2 - ba.l2).abs() <= 1e-15);
        prop_assert!(ab.sup <= ac.sup + cb.sup + 1e-15);
        prop_assert!(ab.l2 <= ac.l2 + cb.l2 + 1e-12);
    }

    #[test]
    fn ks_distance_lies_in_the_unit_interval(xs in prop::collection::vec(0.0f64..1.0, 1..200)) {
        let grid = Grid1D::new(0.0, 1.0, 20).unwrap();
        let d = ks_against_density(&xs, &grid, &vec![1.0; grid.len()]).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }
}

fn operator() -> impl Strategy<Value = WaldenfelsSpec> {
    (0.05f64..1.0, 0.0f64..0.5, -0.5f64..0.5).prop_map(|(a0, slope, drift)| {
        let mut spec = WaldenfelsSpec::diffusion(a0).with_drift(Coefficient::constant(drift));
        spec.diffusion = Coefficient::Linear { intercept: a0, slope };
        spec
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn forward_reflecting_generator_conserves_mass(spec in operator(), center in 0.2f64..0.8) {
        let grid = Grid1D::new(0.0, 1.0, 40).unwrap();
        let gen = assemble_forward(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &grid).unwrap();
        let u0 = grid.sample(|x| (-(x - center).powi(2) / 0.02).exp());
        let f = solve_classical(&gen, &u0, &TimeGrid::new(0.01, 50).unwrap(), &StepOptions::default()).unwrap();
        let m0 = f.mass()[0];
        for m in f.mass() {
            prop_assert!((m - m0).abs() <= 1e-10 * m0);
        }
    }

    #[test]
    fn backward_generator_annihilates_constants(spec in operator()) {
        let grid = Grid1D::new(0.0, 1.0, 30).unwrap();
        let gen = assemble_generator(&spec, &WentcelSpec::reflecting(), &WentcelSpec::reflecting(), &grid).unwrap();
        let image = gen.apply(&vec![1.0; grid.len()]).unwrap();
        prop_assert!(image.iter().all(|v| v.abs() <= 1e-9));
    }

    #[test]
    fn absorbing_solutions_stay_in_the_initial_range(spec in operator()) {
        let grid = Grid1D::new(0.0, 1.0, 40).unwrap();
        let gen = assemble_generator(&spec, &WentcelSpec::absorbing(), &WentcelSpec::absorbing(), &grid).unwrap();
        let u0 = grid.sample(|x| (std::f64::consts::PI * x).sin());
        let f = solve_classical(&gen, &u0, &TimeGrid::new(0.01, 30).unwrap(), &StepOptions::default()).unwrap();
        prop_assert!(f.min_value() >= -1e-8);
        prop_assert!(f.max_abs() <= 1.0 + 1e-8);
    }
}
