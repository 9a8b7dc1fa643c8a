//! Executes an experiment configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;

use super::config::{ExperimentConfig, MonteCarloKind, Oracle, Route};
use super::metrics::{compare_fields, compare_vectors};
use super::plot;
use super::report::{ComparisonReport, RouteSummary};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::fractional::{mittag_leffler, TimeGrid};
use crate::mixing::MixingMeasure;
use crate::montecarlo::{
    estimate_density, inverse_subordinator_moment, ks_against_density, simulate_base, simulate_time_changed, BaseProcess,
    InitialState, TimeChangeOptions,
};
use crate::solvers::{
    apply_g, decompose, ellipticity_check, semigroup_defect, solve_classical, solve_classical_at, solve_fractional_direct,
    solve_spectral, solve_subordination, solve_time_dependent, stationary_density, subordinate, verify_time_changed_equation,
    DensityField, ResidualOptions, SpectralOptions, StepOptions, DEFAULT_TAU_STEP,
};
use crate::spatial::{
    assemble_forward, assemble_generator, assemble_lower_order, Coefficient, GeneratorMatrix, Grid1D, WaldenfelsSpec,
    WentcelSpec,
};
use crate::subordinators::{default_tau_grid, inverse_density_table, verify_density_lemmas, InverseDensityTable};

/// Report, fields and wall-clock timings of one run.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ComparisonReport,
    pub fields: BTreeMap<String, DensityField>,
    /// Seconds per route or diagnostic; not part of the report.
    pub timings: BTreeMap<String, f64>,
}

struct Problem {
    spec: WaldenfelsSpec,
    bnd_a: WentcelSpec,
    bnd_b: WentcelSpec,
    grid: Grid1D,
    gen: GeneratorMatrix,
    u0: Vec<f64>,
    u0_admissible: Vec<f64>,
    tg: TimeGrid,
    report_times: Vec<f64>,
}

fn problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let (spec, bnd_a, bnd_b, grid) = cfg.build_operator()?;
    let p = cfg.problem.as_ref().expect("validated");
    let gen = if p.forward {
        assemble_forward(&spec, &bnd_a, &bnd_b, &grid)?
    } else {
        assemble_generator(&spec, &bnd_a, &bnd_b, &grid)?
    };
    let u0 = cfg.initial.as_ref().ok_or_else(|| Error::Config("no [initial] section".into()))?.sample(&grid)?;
    let u0_admissible = if gen.boundary_residual(&u0)? > StepOptions::default().projection_tol { gen.project(&u0)? } else { u0.clone() };
    let time = cfg.time.as_ref().ok_or_else(|| Error::Config("no [time] section".into()))?;
    let tg = TimeGrid::covering(time.dt, time.t_final)?;
    let mut report_times = time.report_times();
    report_times.sort_by(f64::total_cmp);
    report_times.dedup();
    Ok(Problem { spec, bnd_a, bnd_b, grid, gen, u0, u0_admissible, tg, report_times })
}

fn lower_order(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<DMatrix<f64>> {
    match cfg.problem.as_ref().and_then(|p| p.lower_order.as_ref()) {
        Some(l) => assemble_lower_order(&l.drift, &l.killing, grid),
        None => Ok(DMatrix::zeros(grid.len(), grid.len())),
    }
}

/// Time scale turning `w ∂^β` into `∂^β`: `E_β(λ t^β / w) = E_β(λ (t s)^β)`.
fn single_atom(measure: &MixingMeasure) -> Option<(f64, f64)> {
    let beta = measure.single_beta()?;
    let w = measure.components()[0].weight;
    Some((beta, w.powf(-1.0 / beta)))
}

fn table_on(cfg: &ExperimentConfig, measure: &MixingMeasure, times: &[f64]) -> Result<InverseDensityTable> {
    let t_max = times.last().copied().unwrap_or(1.0);
    inverse_density_table(measure, times, &default_tau_grid(measure, t_max), cfg.inversion)
}

fn route_field(cfg: &ExperimentConfig, route: Route, p: &Problem, report: &mut ComparisonReport) -> Result<Option<DensityField>> {
    let opts = StepOptions::default();
    let tol = &cfg.tolerances;
    Ok(Some(match route {
        Route::Classical => solve_classical(&p.gen, &p.u0, &p.tg, &opts)?,
        Route::Direct => solve_fractional_direct(&p.gen, &cfg.measure()?, &p.u0, &p.tg, &opts)?,
        Route::Subordination => {
            let measure = cfg.measure()?;
            let table = table_on(cfg, &measure, &p.report_times)?;
            let sub = solve_subordination(&p.gen, &p.u0, &table, &opts)?;
            for (t, m) in p.report_times.iter().zip(&sub.tail_mass) {
                report.push(Check::diagnostic(format!("subordination:tail_mass@{t}"), *m, 0.0, *m));
            }
            sub.field
        }
        Route::Spectral => {
            let (beta, scale) = single_atom(&cfg.measure()?).ok_or_else(|| Error::Config("spectral needs one atom".into()))?;
            let d = decompose(&p.gen, &SpectralOptions::default())?;
            report.push(Check::diagnostic("spectral:residual_norm", d.residual_norm, 0.0, d.residual_norm));
            report.push(Check::diagnostic("spectral:biorthogonality", d.biorthogonality_defect, 0.0, d.biorthogonality_defect));
            let mut times = vec![0.0];
            times.extend_from_slice(&p.report_times);
            let scaled: Vec<f64> = times.iter().map(|t| t * scale).collect();
            let f = solve_spectral(&d, beta, &p.u0, &scaled)?;
            DensityField::new(p.grid, times, f.rows().to_vec())?
        }
        Route::TimeDependent => {
            let gamma = cfg.time_dependent.expect("validated").gamma;
            solve_time_dependent(&p.gen, &lower_order(cfg, &p.grid)?, gamma, &p.u0, &p.tg, &opts)?
        }
        Route::TimeChangedResidual => {
            let gamma = cfg.time_dependent.expect("validated").gamma;
            let measure = cfg.measure()?;
            let times: Vec<f64> = (1..p.tg.len()).map(|k| p.tg.t(k)).collect();
            let table = table_on(cfg, &measure, &times)?;
            let ro = ResidualOptions { tolerance: tol.time_changed_residual, ..ResidualOptions::default() };
            let r = verify_time_changed_equation(&p.gen, &lower_order(cfg, &p.grid)?, gamma, &table, &p.u0, &ro)?;
            report.push(r.check);
            return Ok(None);
        }
        Route::Montecarlo => return montecarlo(cfg, p, report).map(Some),
    }))
}

fn montecarlo(cfg: &ExperimentConfig, p: &Problem, report: &mut ComparisonReport) -> Result<DensityField> {
    let mc = cfg.montecarlo.as_ref().expect("validated");
    let tol = &cfg.tolerances;
    let process = BaseProcess::new(&p.spec, &p.bnd_a, &p.bnd_b, &p.grid)?;
    let preset = cfg.initial.as_ref().expect("validated");
    let init = match preset.point(&p.grid) {
        Some(x) => InitialState::Point(x),
        None => InitialState::Density(p.u0.clone()),
    };
    let fwd = assemble_forward(&p.spec, &p.bnd_a, &p.bnd_b, &p.grid)?;
    let m0 = p.grid.integrate(&p.u0);
    let opts = StepOptions::default();
    let (ensemble, pde) = match mc.kind {
        MonteCarloKind::Stationary => {
            let [w0, w1] = mc.window.expect("validated");
            let k = mc.window_samples.max(2);
            let obs: Vec<f64> = (0..k).map(|i| w0 + (w1 - w0) * i as f64 / (k - 1) as f64).collect();
            let e = simulate_base(&process, &init, mc.n_paths, mc.dt, &obs, cfg.seed)?;
            let steady = stationary_density(&fwd)?;
            let mut pooled = Vec::with_capacity(mc.n_paths * obs.len());
            for &t in &obs {
                pooled.extend(e.present_positions(t)?);
            }
            let ks = ks_against_density(&pooled, &p.grid, &steady)?;
            report.push(
                Check::with_error("montecarlo:ks_stationary", ks, 0.0, ks, tol.ks_stationary)
                    .note(format!("{} pooled positions over t in [{w0}, {w1}]", pooled.len())),
            );
            let rows: Vec<Vec<f64>> = obs.iter().map(|&t| estimate_density(&e, &p.grid, t).map(|d| d.density)).collect::<Result<_>>()?;
            return DensityField::new(p.grid, obs, rows);
        }
        MonteCarloKind::Base => {
            let e = simulate_base(&process, &init, mc.n_paths, mc.dt, &p.report_times, cfg.seed)?;
            let mut times = vec![0.0];
            times.extend_from_slice(&p.report_times);
            (e, solve_classical_at(&fwd, &p.u0, &times, &opts.with_max_step(p.tg.dt))?)
        }
        MonteCarloKind::TimeChanged => {
            let measure = cfg.measure()?;
            let o = TimeChangeOptions { dt: mc.dt, dtau: mc.dtau, max_steps: mc.max_steps };
            let e = simulate_time_changed(&process, &init, &measure, mc.n_paths, &o, &p.report_times, cfg.seed)?;
            let table = table_on(cfg, &measure, &p.report_times)?;
            (e, solve_subordination(&fwd, &p.u0, &table, &opts)?.field)
        }
    };
    let ks_tol = if mc.kind == MonteCarloKind::Base { tol.ks_base } else { tol.ks_time_changed };
    let mut rows = Vec::new();
    for &t in &p.report_times {
        let est = estimate_density(&ensemble, &p.grid, t)?;
        let reference = pde.at(t)?;
        let pde_survival = p.grid.integrate(reference) / m0;
        let samples = ensemble.present_positions(t)?;
        let name = if mc.kind == MonteCarloKind::Base { "base" } else { "time_changed" };
        if !samples.is_empty() && p.grid.integrate(reference) > 0.0 {
            let ks = ks_against_density(&samples, &p.grid, reference)?;
            report.push(
                Check::with_error(format!("montecarlo:ks_{name}@{t}"), ks, 0.0, ks, ks_tol)
                    .note(format!("{} surviving paths", samples.len())),
            );
        }
        let se = est.survival_std_err;
        let gap = (est.survival - pde_survival).abs();
        let survival = Check::with_error(format!("montecarlo:survival_{name}@{t}"), est.survival, pde_survival, gap, tol.mc_sigmas * se)
            .note(format!("standard error {se:.3e}"));
        // the time-changed survival also carries τ-quadrature and dtau bias; reported only
        if mc.kind == MonteCarloKind::Base {
            report.push(survival);
        } else {
            report.push(Check::diagnostic(survival.name, survival.observed, survival.expected, survival.error).note(survival.note));
        }
        rows.push(est.density.iter().map(|d| d * m0).collect());
    }
    DensityField::new(p.grid, p.report_times.clone(), rows)
}

fn structural_checks(cfg: &ExperimentConfig, route: Route, p: &Problem, f: &DensityField, classical_sup: Option<f64>, report: &mut ComparisonReport) -> Result<()> {
    let tol = &cfg.tolerances;
    let name = route.name();
    let mut bres: f64 = 0.0;
    for row in f.rows() {
        bres = bres.max(p.gen.boundary_residual(row)?);
    }
    report.push(Check::with_error(format!("{name}:boundary_residual"), bres, 0.0, bres, tol.boundary_residual));
    if f.times().first() == Some(&0.0) {
        let rec = f.row(0).iter().zip(&p.u0_admissible).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        report.push(Check::with_error(format!("{name}:initial_recovery"), rec, 0.0, rec, tol.initial_recovery));
    }
    if p.u0.iter().all(|&v| v >= 0.0) {
        let min = f.min_value();
        report.push(Check::with_error(format!("{name}:positivity"), min, 0.0, (-min).max(0.0), tol.positivity));
    }
    let conservative = p.gen.is_forward() && p.bnd_a.is_pure_reflecting() && p.bnd_b.is_pure_reflecting();
    if conservative {
        let m0 = f.mass()[0];
        let drift = f.mass().iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
        let c = Check::with_error(format!("{name}:mass"), drift, 0.0, drift, tol.mass);
        if route == Route::Subordination {
            // the τ quadrature of the inverse density does not integrate to one exactly
            report.push(Check::diagnostic(c.name, c.observed, c.expected, c.error).note("tau-quadrature mass defect"));
        } else {
            report.push(c);
        }
    }
    if route.is_fractional() {
        let reference = classical_sup.unwrap_or_else(|| p.u0_admissible.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let sup = f.max_abs();
        let excess = (sup / reference.max(f64::MIN_POSITIVE) - 1.0).max(0.0);
        report.push(
            Check::with_error(format!("{name}:contraction"), sup, reference, excess, tol.contraction)
                .note(if classical_sup.is_some() { "against the classical route" } else { "against the initial data" }),
        );
    }
    Ok(())
}

fn oracle_checks(cfg: &ExperimentConfig, route: Route, p: &Problem, f: &DensityField, report: &mut ComparisonReport) -> Result<()> {
    let Some(Oracle::SineMode) = cfg.oracle else { return Ok(()) };
    let lambda = cfg.sine_mode_rate()?;
    let tol = &cfg.tolerances;
    for &t in &p.report_times {
        let (factor, tolerance) = match route {
            Route::Classical => ((lambda * t).exp(), tol.oracle_classical),
            Route::Direct | Route::Subordination | Route::Spectral => {
                let Some((beta, scale)) = single_atom(&cfg.measure()?) else { return Ok(()) };
                (mittag_leffler(beta, lambda * (t * scale).powf(beta))?, tol.oracle_fractional)
            }
            Route::TimeDependent => {
                let gamma = cfg.time_dependent.expect("validated").gamma;
                let mut rate = 0.0;
                if let Some(l) = cfg.problem.as_ref().and_then(|p| p.lower_order.as_ref()) {
                    match (&l.drift, &l.killing) {
                        (d, Coefficient::Constant { value }) if d.is_zero() => rate = *value,
                        _ => return Ok(()),
                    }
                }
                ((lambda * t.powf(gamma + 1.0) / 2.0 + rate * t).exp(), tol.oracle_time_dependent)
            }
            _ => return Ok(()),
        };
        let exact: Vec<f64> = p.u0.iter().map(|u| factor * u).collect();
        let err = compare_vectors(&p.grid, f.at(t)?, &exact)?.sup;
        report.push(Check::with_error(format!("{}:oracle@{t}", route.name()), err, 0.0, err, tolerance));
    }
    Ok(())
}

fn diagnostics(cfg: &ExperimentConfig, report: &mut ComparisonReport, timings: &mut BTreeMap<String, f64>) -> Result<()> {
    let d = &cfg.diagnostics;
    let tol = &cfg.tolerances;
    if let Some(lp) = &d.laplace_pair {
        let start = Instant::now();
        for (k, spec) in lp.measures.iter().enumerate() {
            let m = MixingMeasure::from_spec(spec)?;
            let r = m.verify_laplace_pair(&lp.s, lp.t_cutoff)?;
            report.push(
                Check::with_error(format!("laplace_pair:{k}"), r.max_relative_error, 0.0, r.max_relative_error, tol.laplace_pair)
                    .note(format!("s = {:?}", lp.s)),
            );
        }
        timings.insert("laplace_pair".into(), start.elapsed().as_secs_f64());
    }
    if let Some(dl) = &d.density_lemmas {
        let start = Instant::now();
        let m = cfg.measure()?;
        let n = (dl.t_final / dl.dt).round() as usize;
        let times: Vec<f64> = (1..=n).map(|k| k as f64 * dl.dt).collect();
        let table = table_on(cfg, &m, &times)?;
        for c in verify_density_lemmas(&table, &dl.options).checks {
            let mut c = c;
            c.name = format!("lemma:{}", c.name);
            report.push(c);
        }
        timings.insert("density_lemmas".into(), start.elapsed().as_secs_f64());
    }
    if let Some(lv) = &d.levy {
        let m = cfg.measure()?;
        let [lo, hi] = lv.tau_range;
        let k = lv.points.max(2);
        let taus: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
        let table = inverse_density_table(&m, &[lv.t], &taus, cfg.inversion)?;
        let exact = |tau: f64| (-tau * tau / (4.0 * lv.t)).exp() / (std::f64::consts::PI * lv.t).sqrt();
        let worst = taus.iter().enumerate().map(|(j, &tau)| (table.value(0, j) - exact(tau)).abs() / exact(tau)).fold(0.0, f64::max);
        report.push(Check::with_error("levy:max_relative_error", worst, 0.0, worst, tol.levy).note(format!("t = {}, tau in [{lo}, {hi}]", lv.t)));
    }
    if let Some(g) = &d.g_operator {
        let start = Instant::now();
        g_operator_checks(cfg, g, report)?;
        timings.insert("g_operator".into(), start.elapsed().as_secs_f64());
    }
    if let Some(e) = &d.ellipticity {
        let (spec, _, _, grid) = cfg.build_operator()?;
        let xs: Vec<f64> = grid.nodes()[1..grid.len() - 1].to_vec();
        report.push(ellipticity_check(&spec, &grid, &xs, e.xi_samples));
    }
    Ok(())
}

fn g_operator_checks(cfg: &ExperimentConfig, g: &super::config::GOperatorConfig, report: &mut ComparisonReport) -> Result<()> {
    let tol = &cfg.tolerances;
    let measure = cfg.measure()?;
    let mut times = g.times.clone();
    times.push(g.moment_t);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let table = table_on(cfg, &measure, &times)?;
    let taus = table.tau_grid().to_vec();
    let (grid, u) = match cfg.problem {
        Some(_) => {
            let p = problem(cfg)?;
            let u = solve_classical_at(&p.gen, &p.u0, &taus, &StepOptions::default().with_max_step(DEFAULT_TAU_STEP))?;
            (p.grid, u)
        }
        None => {
            let grid = Grid1D::new(0.0, std::f64::consts::PI, 63)?;
            let rows = taus.iter().map(|&t| grid.sample(|x| (-t).exp() * x.sin())).collect();
            (grid, DensityField::new(grid, taus.clone(), rows)?)
        }
    };
    let g0 = apply_g(&table, 0.0, &u)?;
    let sub = subordinate(&table, &u)?.field;
    let mut diff: f64 = 0.0;
    let mut identical = true;
    for (a, b) in g0.rows().iter().flatten().zip(sub.rows().iter().flatten()) {
        diff = diff.max((a - b).abs());
        identical &= a.to_bits() == b.to_bits();
    }
    report.push(
        Check::with_error("g:gamma_zero_identity", diff, 0.0, if identical { 0.0 } else { diff.max(f64::MIN_POSITIVE) }, tol.g_identity)
            .note(if identical { "bit-for-bit" } else { "bits differ" }),
    );

    let rows = taus.iter().map(|&t| grid.sample(|x| (-t).exp() * x.sin())).collect();
    let uexp = DensityField::new(grid, taus.clone(), rows)?;
    let (defect, scale) = semigroup_defect(&table, g.gamma, g.delta, &uexp)?;
    report.push(
        Check::with_error("g:semigroup", defect, 0.0, defect, tol.semigroup)
            .note(format!("gamma = {}, delta = {}, scale {scale:.3e}", g.gamma, g.delta)),
    );

    let ones_grid = Grid1D::new(0.0, 1.0, 3)?;
    let ones = DensityField::new(ones_grid, taus.clone(), vec![vec![1.0; ones_grid.len()]; taus.len()])?;
    let gm = apply_g(&table, g.moment_gamma, &ones)?;
    let exact = gm.at(g.moment_t)?[2];
    let mc = inverse_subordinator_moment(&measure, g.moment_t, g.moment_gamma, g.moment_paths, g.moment_dtau, cfg.seed)?;
    // grid-right first passage overshoots by < dtau: bias ≤ γ dtau E[W^{γ-1}] when γ - 1 > -1
    let bias_note = if g.moment_gamma > 0.0 {
        let inv = apply_g(&table, g.moment_gamma - 1.0, &ones)?.at(g.moment_t)?[2];
        format!("; bias bound {:.2e}", g.moment_gamma * g.moment_dtau * inv)
    } else {
        String::new()
    };
    report.push(
        Check::with_error("g:moment", mc.mean, exact, (mc.mean - exact).abs(), tol.mc_sigmas * mc.std_err)
            .note(format!("{} paths, standard error {:.3e}{bias_note}", mc.n_paths, mc.std_err)),
    );
    Ok(())
}

/// Runs all configured routes and diagnostics. Route failures are recorded
/// in the report; configuration errors abort before any numerics. When the
/// configuration names an output directory, artifacts are written there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut report = ComparisonReport::new(&cfg.name, cfg.seed);
    let mut fields = BTreeMap::new();
    let mut timings = BTreeMap::new();
    if !cfg.routes.is_empty() {
        let p = problem(cfg)?;
        let mut classical_sup = None;
        let mut order = cfg.routes.clone();
        order.sort();
        for route in order {
            let start = Instant::now();
            let outcome = route_field(cfg, route, &p, &mut report);
            timings.insert(route.name().to_string(), start.elapsed().as_secs_f64());
            match outcome {
                Ok(field) => {
                    report.routes.push(RouteSummary {
                        route: route.name().into(),
                        completed: true,
                        error: None,
                        grid_nodes: p.grid.len(),
                        time_points: field.as_ref().map_or(0, |f| f.times().len()),
                    });
                    if let Some(f) = field {
                        if route != Route::Montecarlo {
                            structural_checks(cfg, route, &p, &f, classical_sup, &mut report)?;
                            oracle_checks(cfg, route, &p, &f, &mut report)?;
                        }
                        if route == Route::Classical {
                            classical_sup = Some(f.max_abs());
                        }
                        fields.insert(route.name().to_string(), f);
                    }
                }
                Err(e) => {
                    log::error!("route {} failed: {e}", route.name());
                    report.routes.push(RouteSummary {
                        route: route.name().into(),
                        completed: false,
                        error: Some(e.to_string()),
                        grid_nodes: p.grid.len(),
                        time_points: 0,
                    });
                    report.push(Check::with_error(format!("{}:completed", route.name()), 0.0, 1.0, 1.0, 0.0).note(e.to_string()));
                }
            }
        }
        pairwise(cfg, &p, &fields, &mut report)?;
    }
    diagnostics(cfg, &mut report, &mut timings)?;
    let outcome = ExperimentOutcome { report, fields, timings };
    if let Some(dir) = &cfg.output_dir {
        write_artifacts(&outcome, dir)?;
    }
    Ok(outcome)
}

fn pairwise(cfg: &ExperimentConfig, p: &Problem, fields: &BTreeMap<String, DensityField>, report: &mut ComparisonReport) -> Result<()> {
    let tol = &cfg.tolerances;
    let names: Vec<&String> = fields.keys().filter(|k| k.as_str() != "montecarlo").collect();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            for &t in &p.report_times {
                let (fa, fb) = (&fields[*a], &fields[*b]);
                if fa.time_index(t).is_none() || fb.time_index(t).is_none() {
                    continue;
                }
                let m = compare_fields(fa, fb, t)?;
                report.push_metric(a, b, t, m);
                let frac = |n: &str| matches!(n, "direct" | "subordination" | "spectral");
                if frac(a) && frac(b) {
                    report.push(Check::with_error(format!("triangle:{a}-{b}@{t}"), m.sup, 0.0, m.sup, tol.route_triangle));
                }
            }
        }
    }
    if let Some(cl) = &cfg.diagnostics.classical_limit {
        let Some(u) = fields.get("classical") else { return Ok(()) };
        let times = if cl.times.is_empty() { vec![p.tg.t_final()] } else { cl.times.clone() };
        for name in ["direct", "subordination", "spectral"] {
            let Some(v) = fields.get(name) else { continue };
            for &t in &times {
                let m = compare_fields(v, u, t)?;
                let scale = u.at(t)?.iter().map(|x| x.abs()).fold(0.0, f64::max);
                let rel = m.sup / scale.max(f64::MIN_POSITIVE);
                report.push(
                    Check::with_error(format!("classical_limit:{name}@{t}"), rel, 0.0, rel, tol.classical_limit)
                        .note("relative sup difference to the classical route"),
                );
            }
        }
    }
    Ok(())
}

/// Writes `report.json`, one CSV per field, `timings.json` and SVG plots.
pub fn write_artifacts(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), outcome.report.to_json()?)?;
    let timings = serde_json::to_string_pretty(&outcome.timings).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("timings.json"), timings)?;
    for (name, f) in &outcome.fields {
        f.write_csv(std::io::BufWriter::new(fs::File::create(dir.join(format!("{name}.csv")))?))?;
    }
    for (name, svg) in emit_plots(outcome) {
        fs::write(dir.join(name), svg)?;
    }
    Ok(())
}

/// SVG documents (file name, contents): density snapshots at every time
/// shared by at least one field, mass against time, and the check summary.
pub fn emit_plots(outcome: &ExperimentOutcome) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let named: Vec<(String, &DensityField)> = outcome.fields.iter().map(|(k, v)| (k.clone(), v)).collect();
    let mut times: Vec<f64> = Vec::new();
    for (_, f) in &named {
        if f.times().len() <= 16 {
            times.extend(f.times().iter().copied().filter(|&t| t > 0.0));
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    for (k, t) in times.iter().enumerate() {
        out.push((format!("snapshot_{k:02}.svg"), plot::snapshot_plot(*t, &named)));
    }
    if !named.is_empty() {
        out.push(("mass.svg".into(), plot::mass_plot(&named)));
    }
    if !outcome.report.checks.is_empty() {
        out.push(("checks.svg".into(), plot::check_plot(&outcome.report.checks)));
    }
    out
}

