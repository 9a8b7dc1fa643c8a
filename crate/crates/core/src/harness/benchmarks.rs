//! Benchmark configurations shipped with the library.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// A named, embedded TOML configuration.
#[derive(Debug, Clone, Copy)]
pub struct Benchmark {
    pub name: &'static str,
    pub toml: &'static str,
}

macro_rules! shipped {
    ($($name:literal),* $(,)?) => {
        &[$(Benchmark { name: $name, toml: include_str!(concat!("../../benchmarks/", $name, ".toml")) }),*]
    };
}

pub const BENCHMARKS: &[Benchmark] = shipped![
    "laplace_pair",
    "density_lemmas",
    "sine_fractional",
    "classical_limit",
    "mc_reflecting",
    "mc_time_changed",
    "mc_absorbing",
    "fbm_h025",
    "fbm_h075",
    "g_operator",
    "time_changed_equation",
    "mass_conservation",
];

pub fn benchmark_names() -> impl Iterator<Item = &'static str> {
    BENCHMARKS.iter().map(|b| b.name)
}

/// Parses and validates a shipped benchmark by name.
pub fn benchmark(name: &str) -> Result<ExperimentConfig> {
    let b = BENCHMARKS
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::Config(format!("unknown benchmark `{name}`")))?;
    ExperimentConfig::from_toml(b.toml)
}
