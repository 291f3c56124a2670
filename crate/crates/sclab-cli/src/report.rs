use serde::Serialize;
use serde_json::Value;

use crate::registry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// Pass iff `residual < tolerance`.
    Below,
    /// Pass iff `residual > tolerance`.
    Above,
    /// Pass iff `|residual - tolerance| < 0.5`; used for integer counts.
    Equal,
    /// Recorded, not judged.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub equation: &'static str,
    pub comparison: Comparison,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, comparison: Comparison, residual: f64, tolerance: f64) -> Check {
        let name = name.into();
        let pass = match comparison {
            Comparison::Below => residual < tolerance,
            Comparison::Above => residual > tolerance,
            Comparison::Equal => (residual - tolerance).abs() < 0.5,
            Comparison::Info => true,
        };
        Check { equation: registry::equation(&name), name, comparison, residual, tolerance, pass }
    }

    pub fn below(name: impl Into<String>, residual: f64, tolerance: f64) -> Check {
        Check::new(name, Comparison::Below, residual, tolerance)
    }

    pub fn above(name: impl Into<String>, residual: f64, tolerance: f64) -> Check {
        Check::new(name, Comparison::Above, residual, tolerance)
    }

    pub fn info(name: impl Into<String>, value: f64) -> Check {
        Check::new(name, Comparison::Info, value, 0.0)
    }
}

/// A run's outcome. Contains no timings, so identical inputs give
/// byte-identical output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub spec_version: &'static str,
    pub tool_version: &'static str,
    pub kind: &'static str,
    pub seed: u64,
    pub scenario: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.checks {
            w.serialize(c).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}
