//! Versioned experiment report.

use serde::{Deserialize, Serialize};

use super::metrics::FieldMetrics;
use crate::check::Check;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub route: String,
    pub completed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub grid_nodes: usize,
    pub time_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetric {
    pub a: String,
    pub b: String,
    pub t: f64,
    pub metrics: FieldMetrics,
}

/// Everything an experiment concluded. Timings are kept out so that the
/// serialized report is a pure function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub routes: Vec<RouteSummary>,
    pub metrics: Vec<PairMetric>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else if v < 0.0 {
        -f64::MAX
    } else {
        f64::MAX
    }
}

impl ComparisonReport {
    pub fn new(name: &str, seed: u64) -> Self {
        Self { schema_version: SCHEMA_VERSION, name: name.into(), seed, routes: vec![], metrics: vec![], checks: vec![], passed: true }
    }

    /// Adds a check; non-finite numbers are stored as ±`f64::MAX` (the check
    /// then fails with a note) so the report stays valid JSON.
    pub fn push(&mut self, mut c: Check) {
        if !(c.observed.is_finite() && c.expected.is_finite() && c.error.is_finite()) {
            c.passed = false;
            c.note = if c.note.is_empty() { "non-finite value".into() } else { format!("{}; non-finite value", c.note) };
        }
        c.observed = finite(c.observed);
        c.expected = finite(c.expected);
        c.error = finite(c.error);
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn push_metric(&mut self, a: &str, b: &str, t: f64, mut m: FieldMetrics) {
        m.sup = finite(m.sup);
        m.l2 = finite(m.l2);
        m.ks = m.ks.map(finite);
        self.metrics.push(PairMetric { a: a.into(), b: b.into(), t, metrics: m });
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Checks whose names start with `prefix`.
    pub fn checks_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))?;
        if r.schema_version > SCHEMA_VERSION {
            return Err(Error::Io(format!("report schema {} is newer than {SCHEMA_VERSION}", r.schema_version)));
        }
        Ok(r)
    }
}
