//! Experiment harness: configuration, route execution, comparison reports
//! and the shipped benchmark configurations.

mod benchmarks;
mod config;
mod metrics;
mod plot;
mod report;
mod run;

pub use benchmarks::{benchmark, benchmark_names, Benchmark, BENCHMARKS};
pub use config::{
    ClassicalLimitConfig, DensityLemmaConfig, DiagnosticsConfig, EllipticityConfig, ExperimentConfig, GOperatorConfig, GridConfig,
    InitialPreset, LaplacePairConfig, LevyConfig, LowerOrderConfig, MonteCarloConfig, MonteCarloKind, Oracle, ProblemConfig, Route,
    TimeConfig, TimeDependentConfig, Tolerances,
};
pub use metrics::{compare_fields, compare_vectors, FieldMetrics};
pub use plot::{check_plot, line_plot, mass_plot, snapshot_plot, Series};
pub use report::{ComparisonReport, PairMetric, RouteSummary, SCHEMA_VERSION};
pub use run::{emit_plots, run_experiment, write_artifacts, ExperimentOutcome};
