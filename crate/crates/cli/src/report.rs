//! Report schema, summary table and the `verify` re-check.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use weyl_core::lorentz::ClassificationFlags;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inapplicable,
    /// Measured and reported against a reference tolerance, never judged.
    Info,
}

/// How a defect is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass when `defect <= tolerance`.
    #[default]
    AtMost,
    /// Pass when `defect >= tolerance` (sensitivity and negative controls).
    AtLeast,
}

impl Comparison {
    pub fn passes(self, defect: f64, tolerance: f64) -> bool {
        match self {
            Comparison::AtMost => defect <= tolerance,
            Comparison::AtLeast => defect >= tolerance,
        }
    }

    fn is_default(&self) -> bool {
        *self == Comparison::AtMost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Comparison::is_default")]
    pub comparison: Comparison,
    /// A measured quantity that is not itself a defect (a fitted coefficient,
    /// a fraction of instances).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Instances aggregated into this record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn judged(name: &str, defect: f64, tolerance: f64, cmp: Comparison) -> Self {
        let status = if cmp.passes(defect, tolerance) {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            status,
            defect: Some(defect),
            tolerance: Some(tolerance),
            comparison: cmp,
            value: None,
            count: None,
            note: None,
        }
    }

    pub fn at_most(name: &str, defect: f64, tolerance: f64) -> Self {
        Self::judged(name, defect, tolerance, Comparison::AtMost)
    }

    pub fn info(name: &str, defect: f64, tolerance: f64) -> Self {
        Self {
            status: Status::Info,
            ..Self::at_most(name, defect, tolerance)
        }
    }

    pub fn inapplicable(name: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Inapplicable,
            defect: None,
            tolerance: None,
            comparison: Comparison::AtMost,
            value: None,
            count: None,
            note: Some(reason.into()),
        }
    }

    pub fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_count(mut self, c: usize) -> Self {
        self.count = Some(c);
        self
    }

    /// The status implied by the stored numbers.
    pub fn recomputed_status(&self) -> Status {
        match (self.status, self.defect, self.tolerance) {
            (Status::Pass | Status::Fail, Some(d), Some(t)) => {
                if self.comparison.passes(d, t) {
                    Status::Pass
                } else {
                    Status::Fail
                }
            }
            (Status::Pass | Status::Fail, _, _) => Status::Fail,
            (s, _, _) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSummary {
    pub alpha: Vec<f64>,
    pub residual: f64,
    pub c2: f64,
    pub alpha_sq: f64,
    pub recurrent: bool,
    pub parallel_weyl: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closedness_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub coordinates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub conformally_flat: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrence: Option<RecurrenceSummary>,
    /// Classification flags; kept as JSON so saved reports load back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<serde_json::Value>,
    pub checks: Vec<CheckRecord>,
}

impl PointRecord {
    pub fn set_flags(&mut self, flags: &ClassificationFlags) {
        self.flags = serde_json::to_value(flags).ok();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRecord {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub instances: usize,
    pub checks: Vec<CheckRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_defect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Comparison::is_default")]
    pub comparison: Comparison,
    pub pass: usize,
    pub fail: usize,
    pub inapplicable: usize,
    pub info: usize,
    pub verdict: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub failed_checks: Vec<String>,
    pub points_evaluated: usize,
    pub points_errored: usize,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    pub name: String,
    pub version: String,
    pub signature_convention: String,
    pub conventions: serde_json::Value,
    /// Outcome of the sign-convention anchoring test.
    pub convention_self_test: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub generated_at: String,
    pub engine: Engine,
    pub config: serde_json::Value,
    pub tolerances: BTreeMap<String, f64>,
    pub points: Vec<PointRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticRecord>,
    pub summary: Vec<SummaryRow>,
    pub verdict: Verdict,
}

impl Report {
    /// Every check record, point records first.
    pub fn records(&self) -> impl Iterator<Item = &CheckRecord> {
        self.points
            .iter()
            .flat_map(|p| p.checks.iter())
            .chain(self.synthetic.iter().flat_map(|s| s.checks.iter()))
    }

    /// Rebuilds summary rows and the verdict from the stored records.
    pub fn finalize(&mut self) {
        self.summary = summarize(self.records());
        self.verdict = verdict(&self.summary, &self.points);
    }

    /// Pretty JSON with the timestamp removed, for comparisons.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("generated_at");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}

pub fn summarize<'a>(records: impl Iterator<Item = &'a CheckRecord>) -> Vec<SummaryRow> {
    let mut rows: BTreeMap<String, SummaryRow> = BTreeMap::new();
    let mut order = Vec::new();
    for r in records {
        let row = rows.entry(r.name.clone()).or_insert_with(|| {
            order.push(r.name.clone());
            SummaryRow {
                name: r.name.clone(),
                worst_defect: None,
                tolerance: None,
                comparison: r.comparison,
                pass: 0,
                fail: 0,
                inapplicable: 0,
                info: 0,
                verdict: Status::Inapplicable,
            }
        });
        match r.status {
            Status::Pass => row.pass += 1,
            Status::Fail => row.fail += 1,
            Status::Inapplicable => row.inapplicable += 1,
            Status::Info => row.info += 1,
        }
        if let Some(d) = r.defect {
            let worse = match (row.worst_defect, r.comparison) {
                (None, _) => true,
                (Some(w), Comparison::AtMost) => d > w || d.is_nan(),
                (Some(w), Comparison::AtLeast) => d < w || d.is_nan(),
            };
            if worse {
                row.worst_defect = Some(d);
            }
            if row.tolerance.is_none() {
                row.tolerance = r.tolerance;
            }
        }
    }
    order
        .into_iter()
        .map(|name| {
            let mut row = rows.remove(&name).expect("row exists");
            row.verdict = if row.fail > 0 {
                Status::Fail
            } else if row.pass > 0 {
                Status::Pass
            } else if row.info > 0 {
                Status::Info
            } else {
                Status::Inapplicable
            };
            row
        })
        .collect()
}

pub fn verdict(summary: &[SummaryRow], points: &[PointRecord]) -> Verdict {
    let failed_checks: Vec<String> = summary.iter().filter(|r| r.fail > 0).map(|r| r.name.clone()).collect();
    let errored = points.iter().filter(|p| p.error.is_some()).count();
    let all_errored = !points.is_empty() && errored == points.len();
    let passed = failed_checks.is_empty() && !all_errored;
    Verdict {
        passed,
        failed_checks,
        points_evaluated: points.len(),
        points_errored: errored,
        exit_code: if passed { 0 } else { 1 },
    }
}

fn fmt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}

/// One row per check: worst defect, tolerance, verdict.
pub fn summary_table(report: &Report) -> String {
    let width = report.summary.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>11}  {:>2} {:>10}  {:>5} {:>5} {:>5} {:>5}  verdict",
        "check", "worst", "", "tolerance", "pass", "fail", "n/a", "info"
    );
    for r in &report.summary {
        let cmp = match r.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        let verdict = match r.verdict {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inapplicable => "n/a",
            Status::Info => "info",
        };
        let _ = writeln!(
            s,
            "{:<width$}  {:>11}  {:>2} {:>10}  {:>5} {:>5} {:>5} {:>5}  {}",
            r.name,
            fmt_num(r.worst_defect),
            cmp,
            fmt_num(r.tolerance),
            r.pass,
            r.fail,
            r.inapplicable,
            r.info,
            verdict
        );
    }
    let v = &report.verdict;
    let _ = writeln!(
        s,
        "points: {} evaluated, {} errored; verdict: {}",
        v.points_evaluated,
        v.points_errored,
        if v.passed { "PASS" } else { "FAIL" }
    );
    s
}

/// Outcome of re-checking a saved report.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    /// Records whose stored status disagrees with their stored numbers.
    pub inconsistent: Vec<String>,
    /// The stored verdict disagrees with the recomputed one.
    pub verdict_mismatch: bool,
    pub recomputed: Verdict,
}

impl VerifyOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.inconsistent.is_empty() && !self.verdict_mismatch && self.recomputed.passed {
            0
        } else {
            1
        }
    }
}

pub fn verify(report: &Report) -> VerifyOutcome {
    let mut inconsistent = Vec::new();
    let mut fixed = report.clone();
    for (pi, p) in fixed.points.iter_mut().enumerate() {
        for c in &mut p.checks {
            let s = c.recomputed_status();
            if s != c.status {
                inconsistent.push(format!("point {pi}: {}", c.name));
                c.status = s;
            }
        }
    }
    if let Some(syn) = &mut fixed.synthetic {
        for c in &mut syn.checks {
            let s = c.recomputed_status();
            if s != c.status {
                inconsistent.push(format!("synthetic: {}", c.name));
                c.status = s;
            }
        }
    }
    fixed.finalize();
    VerifyOutcome {
        verdict_mismatch: fixed.verdict != report.verdict || fixed.summary != report.summary,
        inconsistent,
        recomputed: fixed.verdict,
    }
}
