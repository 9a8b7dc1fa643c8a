use fpklab::harness::{benchmark, emit_plots, run_experiment, ComparisonReport, ExperimentConfig, Route};
use fpklab::solvers::DensityField;

const SMALL_SINE: &str = r#"
name = "small_sine"
routes = ["classical", "direct", "subordination", "spectral"]
oracle = "sine_mode"

[problem]
grid = { a = 0.0, b = 1.0, n = 60, pi_units = true }
operator = { diffusion = { kind = "constant", value = 1.0 } }
boundary_a = { gamma = -1.0 }
boundary_b = { gamma = -1.0 }

[measure]
atoms = [[0.5, 1.0]]

[initial]
kind = "sine"

[time]
dt = 2e-3
t_final = 0.5
report_times = [0.25, 0.5]
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml(SMALL_SINE).unwrap()
}

#[test]
fn empty_route_list_without_diagnostics_is_rejected() {
    let text = SMALL_SINE.replace(r#"routes = ["classical", "direct", "subordination", "spectral"]"#, "routes = []");
    let err = ExperimentConfig::from_toml(&text).unwrap_err();
    assert!(err.to_string().contains("nothing to run"), "{err}");
}

#[test]
fn missing_sections_and_duplicates_are_rejected() {
    let no_measure = SMALL_SINE.replace("[measure]\natoms = [[0.5, 1.0]]\n", "");
    assert!(ExperimentConfig::from_toml(&no_measure).is_err());
    let dup = SMALL_SINE.replace(r#"routes = ["classical", "#, r#"routes = ["classical", "classical", "#);
    assert!(ExperimentConfig::from_toml(&dup).is_err());
    let two_atoms = SMALL_SINE.replace("atoms = [[0.5, 1.0]]", "atoms = [[0.5, 0.5], [0.7, 0.5]]");
    assert!(ExperimentConfig::from_toml(&two_atoms).unwrap_err().to_string().contains("spectral"));
}

#[test]
fn config_survives_a_toml_round_trip() {
    let cfg = small();
    let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(again.routes, cfg.routes);
    assert_eq!(again.tolerances, cfg.tolerances);
    assert_eq!(again.time, cfg.time);
}

#[test]
fn small_sine_passes_and_is_deterministic() {
    let a = run_experiment(&small()).unwrap();
    let b = run_experiment(&small()).unwrap();
    assert!(a.report.passed, "{:?}", a.report.failures());
    assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
    assert_eq!(a.fields.len(), 4);
    for route in [Route::Direct, Route::Subordination, Route::Spectral] {
        assert!(a.report.check(&format!("{}:oracle@0.5", route.name())).is_some_and(|c| c.passed));
    }
    assert_eq!(a.report.checks_with_prefix("triangle:").count(), 6);
}

#[test]
fn failing_route_is_recorded_not_raised() {
    // Talbot inversion is not attempted beyond its stable range
    let text = SMALL_SINE
        .replace("atoms = [[0.5, 1.0]]", "atoms = [[0.99, 1.0]]")
        .replace(r#"routes = ["classical", "direct", "subordination", "spectral"]"#, r#"routes = ["classical", "subordination"]"#);
    let out = run_experiment(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
    assert!(!out.report.passed);
    let sub = out.report.routes.iter().find(|r| r.route == "subordination").unwrap();
    assert!(!sub.completed && sub.error.is_some());
    assert!(out.report.routes.iter().find(|r| r.route == "classical").unwrap().completed);
    assert!(out.fields.contains_key("classical"));
}

#[test]
fn artifacts_are_written_and_plotting_leaves_the_report_alone() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.output_dir = Some(dir.path().to_path_buf());
    let out = run_experiment(&cfg).unwrap();
    let before = out.report.to_json().unwrap();
    let plots = emit_plots(&out);
    assert_eq!(out.report.to_json().unwrap(), before);
    assert!(plots.iter().any(|(n, _)| n == "mass.svg"));
    assert!(plots.iter().all(|(_, svg)| svg.starts_with("<svg") || svg.starts_with("<?xml")));

    let written = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(ComparisonReport::from_json(&written).unwrap(), out.report);
    let csv = std::fs::read_to_string(dir.path().join("direct.csv")).unwrap();
    assert!(csv.starts_with("t,x,value"));
    let field: &DensityField = &out.fields["direct"];
    assert_eq!(csv.lines().count(), 1 + field.times().len() * field.grid().len());
    for (name, _) in &plots {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn seed_changes_monte_carlo_estimates() {
    let mut cfg = benchmark("mc_absorbing").unwrap();
    if let Some(mc) = cfg.montecarlo.as_mut() {
        mc.n_paths = 2000;
    }
    let a = run_experiment(&cfg).unwrap().report;
    cfg.seed += 1;
    let b = run_experiment(&cfg).unwrap().report;
    let ks = |r: &ComparisonReport| r.check("montecarlo:ks_base@1").unwrap().observed;
    assert_ne!(ks(&a), ks(&b));
}
