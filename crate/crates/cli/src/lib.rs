//! Report schema and shared plumbing for the `fairbound` binary.

use fairbound_core::bounds::{BoundsResult, ConeStatus, SupportEvv};
use serde::{Deserialize, Serialize};

/// Machine-readable result of one CLI run, printed to stdout as JSON.
/// Everything except `wall_ms` is reproducible for a fixed instance, seed
/// and flag set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// sha256 of the instance file bytes
    pub instance_digest: String,
    pub mode: String,
    pub claims: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cone_status: Option<ConeStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<SupportEvv>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_met: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn new(digest: String, mode: &str, claims: Vec<f64>) -> Self {
        RunReport {
            instance_digest: digest,
            mode: mode.to_string(),
            claims,
            cone_status: None,
            lower: None,
            upper: None,
            support: Vec::new(),
            iterations: None,
            gap_met: None,
            oracle_value: None,
            oracle_cells: None,
            trace_path: None,
            wall_ms: 0.0,
        }
    }

    pub fn with_bounds(mut self, bounds: &BoundsResult) -> Self {
        self.cone_status = Some(bounds.cone_status);
        self.lower = bounds.lower;
        self.upper = Some(bounds.upper);
        self.support = bounds.support.clone();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Formats with six significant digits for the human-readable summary.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips() {
        let mut report = RunReport::new("sha256:abc".into(), "bounds-legut", vec![0.5, 0.5]);
        report.lower = Some(1.25);
        report.upper = Some(1.5);
        report.cone_status = Some(ConeStatus::Interior);
        report.support = vec![SupportEvv {
            beta: vec![0.5, 0.5],
            u: vec![0.3, 0.9],
        }];
        report.wall_ms = 12.5;
        let json = report.to_json();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn sig6_examples() {
        assert_eq!(sig6(1.2345678), "1.23457");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(1234567.0), "1234567");
        assert_eq!(sig6(0.0), "0");
    }
}
