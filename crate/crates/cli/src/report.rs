use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::{Suite, SuiteConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Error,
    Inconclusive,
    NotApplicable,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
            Status::Inconclusive => "inconclusive",
            Status::NotApplicable => "not-applicable",
        }
    }

    pub fn is_pass(self) -> bool {
        matches!(self, Status::Pass | Status::NotApplicable)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub tolerance: f64,
    pub worst_point: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
struct Running {
    max: f64,
    sum: f64,
    count: usize,
    tolerance: f64,
    worst_point: Vec<f64>,
}

/// Residual statistics built up in sample order.
#[derive(Clone, Debug, Default)]
pub struct Accumulator {
    entries: BTreeMap<String, Running>,
}

impl Accumulator {
    pub fn record(&mut self, name: &str, value: f64, tolerance: f64, point: &[f64]) {
        let e = self.entries.entry(name.to_string()).or_insert_with(|| Running {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            count: 0,
            tolerance,
            worst_point: point.to_vec(),
        });
        if value > e.max || (value.is_nan() && !e.max.is_nan()) {
            e.max = value;
            e.worst_point = point.to_vec();
        }
        e.sum += value;
        e.count += 1;
    }

    pub fn finish(self) -> BTreeMap<String, ResidualStats> {
        self.entries
            .into_iter()
            .map(|(k, r)| {
                let stats = ResidualStats {
                    max: r.max,
                    mean: r.sum / r.count as f64,
                    count: r.count,
                    tolerance: r.tolerance,
                    worst_point: r.worst_point,
                    pass: r.max < r.tolerance,
                };
                (k, stats)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub algebra_dim: usize,
    pub label: String,
    pub class: String,
    pub rank_gap: f64,
    pub confident: bool,
    pub fixed_vectors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Classification {
    Structure {
        kind: String,
        expected: String,
        evidence: BTreeMap<String, f64>,
        periods: BTreeMap<String, f64>,
    },
    Holonomy {
        restricted: bool,
        chart: String,
        base: Vec<f64>,
        expected: String,
        curvature_span: EstimateReport,
        loops: EstimateReport,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub status: Status,
    pub pass: bool,
    pub residuals: BTreeMap<String, ResidualStats>,
    #[serde(skip_serializing_if = "is_zero")]
    pub singular_skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl SuiteReport {
    pub fn new(suite: Suite, status: Status) -> Self {
        SuiteReport {
            suite,
            status,
            pass: status.is_pass(),
            residuals: BTreeMap::new(),
            singular_skipped: 0,
            classification: None,
            note: None,
            wall_time_s: None,
        }
    }

    pub fn not_applicable(suite: Suite, why: impl Into<String>) -> Self {
        SuiteReport { note: Some(why.into()), ..Self::new(suite, Status::NotApplicable) }
    }

    pub fn error(suite: Suite, message: impl Into<String>) -> Self {
        SuiteReport { note: Some(message.into()), ..Self::new(suite, Status::Error) }
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self.pass = status.is_pass();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: SuiteConfig,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(config: SuiteConfig, suites: Vec<SuiteReport>) -> Self {
        let exit_code = exit_code(&suites);
        Report { schema_version: SCHEMA_VERSION, config, pass: exit_code == 0, suites, exit_code, wall_time_s: None }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only plain data");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "manifold {}  mode {}  samples {}  seed {}  fd_step {:e}",
            c.manifold,
            c.mode.as_str(),
            c.samples,
            c.seed,
            c.fd_step
        );
        if let Some(at) = &c.at {
            let _ = writeln!(out, "evaluated at {at:?}");
        }
        for s in &self.suites {
            let _ = write!(out, "[{}] {}", s.status.as_str(), s.suite);
            if let Some(t) = s.wall_time_s {
                let _ = write!(out, "  ({t:.2} s)");
            }
            out.push('\n');
            if let Some(note) = &s.note {
                let _ = writeln!(out, "    {note}");
            }
            let width = s.residuals.keys().map(|k| k.chars().count()).max().unwrap_or(0);
            for (name, r) in &s.residuals {
                let _ = writeln!(
                    out,
                    "    {}{name:width$}  max {:.3e}  mean {:.3e}  n {}  tol {:.0e}",
                    if r.pass { " " } else { "!" },
                    r.max,
                    r.mean,
                    r.count,
                    r.tolerance,
                );
            }
            if s.singular_skipped > 0 {
                let _ = writeln!(out, "    {} samples skipped on the singular locus", s.singular_skipped);
            }
            match &s.classification {
                Some(Classification::Structure { kind, expected, periods, .. }) => {
                    let _ = writeln!(out, "    kind {kind} (expected {expected})");
                    for (label, v) in periods {
                        let _ = writeln!(out, "    period {label}: {:.6}", v + 0.0);
                    }
                }
                Some(Classification::Holonomy { chart, curvature_span, loops, expected, .. }) => {
                    let _ = writeln!(out, "    restricted holonomy on {chart} (expected {expected})");
                    for (name, e) in [("curvature span", curvature_span), ("loops", loops)] {
                        let _ = writeln!(
                            out,
                            "    {name:14}  dim {}  {}  gap {:.1e}{}",
                            e.algebra_dim,
                            e.label,
                            e.rank_gap,
                            if e.confident { "" } else { "  (not confident)" }
                        );
                    }
                }
                None => {}
            }
        }
        let _ = write!(out, "overall: {} (exit {})", if self.pass { "pass" } else { "fail" }, self.exit_code);
        if let Some(t) = self.wall_time_s {
            let _ = write!(out, " in {t:.2} s");
        }
        out.push('\n');
        out
    }
}

/// A failing suite outranks an inconclusive one.
pub fn exit_code(suites: &[SuiteReport]) -> i32 {
    if suites.iter().any(|s| matches!(s.status, Status::Fail | Status::Error)) {
        1
    } else if suites.iter().any(|s| s.status == Status::Inconclusive) {
        3
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_tracks_the_worst_point() {
        let mut acc = Accumulator::default();
        acc.record("r", 1e-6, 1e-4, &[0.0]);
        acc.record("r", 3e-6, 1e-4, &[1.0]);
        acc.record("r", 2e-6, 1e-4, &[2.0]);
        let out = acc.finish();
        let r = &out["r"];
        assert_eq!(r.count, 3);
        assert_eq!(r.max, 3e-6);
        assert_eq!(r.worst_point, vec![1.0]);
        assert!((r.mean - 2e-6).abs() < 1e-18);
        assert!(r.pass);
    }

    #[test]
    fn nan_residuals_fail() {
        let mut acc = Accumulator::default();
        acc.record("r", 1e-6, 1e-4, &[0.0]);
        acc.record("r", f64::NAN, 1e-4, &[1.0]);
        acc.record("r", 1e-5, 1e-4, &[2.0]);
        let r = &acc.finish()["r"];
        assert!(!r.pass);
        assert_eq!(r.worst_point, vec![1.0]);
    }

    #[test]
    fn exit_codes_follow_the_worst_status() {
        let s = |st| SuiteReport::new(Suite::Holonomy, st);
        assert_eq!(exit_code(&[]), 0);
        assert_eq!(exit_code(&[s(Status::Pass), s(Status::NotApplicable)]), 0);
        assert_eq!(exit_code(&[s(Status::Pass), s(Status::Inconclusive)]), 3);
        assert_eq!(exit_code(&[s(Status::Inconclusive), s(Status::Fail)]), 1);
        assert_eq!(exit_code(&[s(Status::Error)]), 1);
    }
}
