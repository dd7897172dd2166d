//! Report types, re-checking, and file emission.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const CONFIRMED: &str = "mechanism-confirmed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Lt => value < threshold,
            Comparison::Le => value <= threshold,
            Comparison::Gt => value > threshold,
            Comparison::Ge => value >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }
}

/// One numeric check: `value comparison threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Margin {
    pub fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, comparison, pass: comparison.holds(value, threshold) }
    }

    /// Boolean check recorded as `0 <= 0` or `1 <= 0`.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 0.0 } else { 1.0 }, Comparison::Le, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Integer,
    HalfInteger,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub id: u8,
    pub name: String,
    pub branch: Branch,
    pub pass: bool,
    pub margins: Vec<Margin>,
    pub notes: Vec<String>,
    /// Set when the stage could not be evaluated.
    pub error: Option<String>,
}

impl StageResult {
    pub fn new(id: u8, name: &str, branch: Branch) -> Self {
        Self { id, name: name.into(), branch, pass: false, margins: Vec::new(), notes: Vec::new(), error: None }
    }

    pub fn push(&mut self, m: Margin) {
        self.margins.push(m);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Sets `pass` from the margins and the error slot.
    pub fn seal(mut self) -> Self {
        self.pass = self.error.is_none() && !self.margins.is_empty() && self.margins.iter().all(|m| m.pass);
        self
    }

    pub fn failed_margins(&self) -> Vec<&str> {
        self.margins.iter().filter(|m| !m.pass).map(|m| m.name.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchVerdict {
    pub branch: Branch,
    pub stages: Vec<u8>,
    pub pass: bool,
    pub verdict: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinStatReport {
    pub config: RunConfig,
    pub stages: Vec<StageResult>,
    pub integer: BranchVerdict,
    pub half_integer: BranchVerdict,
    /// The implication links exercised, in order.
    pub chain: Vec<String>,
    pub verdict: String,
}

impl SpinStatReport {
    pub fn assemble(config: RunConfig, stages: Vec<StageResult>, chain: Vec<String>) -> Self {
        let integer = branch_verdict(&stages, Branch::Integer);
        let half_integer = branch_verdict(&stages, Branch::HalfInteger);
        let verdict = if integer.pass && half_integer.pass {
            CONFIRMED.to_string()
        } else {
            first_failure(&stages).unwrap_or_else(|| "incomplete".into())
        };
        Self { config, stages, integer, half_integer, chain, verdict }
    }

    pub fn confirmed(&self) -> bool {
        self.verdict == CONFIRMED
    }

    pub fn stage(&self, id: u8) -> Option<&StageResult> {
        self.stages.iter().find(|s| s.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Stage ids that feed each branch.
pub fn branch_stages(b: Branch) -> &'static [u8] {
    match b {
        Branch::Integer => &[1, 2, 3, 4, 5, 7],
        Branch::HalfInteger => &[1, 2, 3, 6, 7],
        Branch::Both => &[1, 2, 3, 4, 5, 6, 7],
    }
}

fn branch_verdict(stages: &[StageResult], branch: Branch) -> BranchVerdict {
    let ids = branch_stages(branch);
    let pass = ids.iter().all(|id| stages.iter().any(|s| s.id == *id && s.pass));
    let relevant: Vec<StageResult> = stages.iter().filter(|s| ids.contains(&s.id)).cloned().collect();
    let verdict = if pass {
        CONFIRMED.to_string()
    } else {
        first_failure(&relevant).unwrap_or_else(|| "incomplete".into())
    };
    BranchVerdict { branch, stages: ids.to_vec(), pass, verdict }
}

fn first_failure(stages: &[StageResult]) -> Option<String> {
    let s = stages.iter().find(|s| !s.pass)?;
    let what = match &s.error {
        Some(e) => e.clone(),
        None => s.failed_margins().join(", "),
    };
    Some(format!("failed at stage {} ({}): {what}", s.id, s.name))
}

/// Recomputes every margin, stage and branch flag from the report data.
/// Returns the list of inconsistencies (empty when the report is sound).
pub fn verify(report: &SpinStatReport) -> Vec<String> {
    let mut issues = Vec::new();
    for s in &report.stages {
        for m in &s.margins {
            let ok = m.comparison.holds(m.value, m.threshold);
            if ok != m.pass {
                issues.push(format!("stage {} margin {}: recorded pass = {}, recomputed {}", s.id, m.name, m.pass, ok));
            }
        }
        let ok = s.error.is_none() && !s.margins.is_empty() && s.margins.iter().all(|m| m.comparison.holds(m.value, m.threshold));
        if ok != s.pass {
            issues.push(format!("stage {}: recorded pass = {}, recomputed {}", s.id, s.pass, ok));
        }
    }
    let again = SpinStatReport::assemble(report.config.clone(), report.stages.clone(), report.chain.clone());
    if again.integer.pass != report.integer.pass || again.half_integer.pass != report.half_integer.pass {
        issues.push("branch flags do not follow from the stages".into());
    }
    if again.verdict != report.verdict {
        issues.push(format!("verdict {:?} does not follow from the stages ({:?})", report.verdict, again.verdict));
    }
    if report.confirmed() {
        for s in &report.stages {
            for m in &s.margins {
                if !m.comparison.holds(m.value, m.threshold) {
                    issues.push(format!("confirmed verdict with failing margin {} in stage {}", m.name, s.id));
                }
            }
        }
    }
    issues
}

pub fn render_text(r: &SpinStatReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "spin-statistics pipeline");
    let _ = writeln!(out, "verdict: {}", r.verdict);
    let _ = writeln!(out, "integer branch: {}", r.integer.verdict);
    let _ = writeln!(out, "half-integer branch: {}", r.half_integer.verdict);
    for s in &r.stages {
        let _ = writeln!(out, "\n[{}] stage {} {}", if s.pass { "PASS" } else { "FAIL" }, s.id, s.name);
        if let Some(e) = &s.error {
            let _ = writeln!(out, "  error: {e}");
        }
        for m in &s.margins {
            let _ = writeln!(
                out,
                "  {} {:<44} {:>12.4e} {:>2} {:<11.4e}",
                if m.pass { "ok " } else { "BAD" },
                m.name,
                m.value,
                m.comparison.symbol(),
                m.threshold
            );
        }
        for n in &s.notes {
            let _ = writeln!(out, "  note: {n}");
        }
    }
    let _ = writeln!(out, "\nchain checked:");
    for (k, c) in r.chain.iter().enumerate() {
        let _ = writeln!(out, "  {}. {c}", k + 1);
    }
    out
}

pub fn margins_csv(r: &SpinStatReport) -> String {
    let mut out = String::from("stage,stage_name,margin,value,comparison,threshold,pass\n");
    for s in &r.stages {
        for m in &s.margins {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{},{:e},{}",
                s.id,
                s.name,
                m.name,
                m.value,
                m.comparison.symbol(),
                m.threshold,
                m.pass
            );
        }
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents).map_err(Error::from)
}
