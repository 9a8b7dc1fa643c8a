//! Named pass/fail diagnostics shared by verification routines and reports.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    /// The quantity compared against `tolerance` (absolute or relative, per check).
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    pub fn absolute(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        let error = (observed - expected).abs();
        Self::with_error(name, observed, expected, error, tolerance)
    }

    pub fn relative(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        let error = (observed - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        Self::with_error(name, observed, expected, error, tolerance)
    }

    /// Check on a precomputed error measure.
    pub fn with_error(name: impl Into<String>, observed: f64, expected: f64, error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            expected,
            error,
            tolerance,
            passed: error.is_finite() && error <= tolerance,
            note: String::new(),
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Informational entry that never fails.
    pub fn diagnostic(name: impl Into<String>, observed: f64, expected: f64, error: f64) -> Self {
        Self { name: name.into(), observed, expected, error, tolerance: f64::MAX, passed: true, note: "diagnostic".into() }
    }
}
