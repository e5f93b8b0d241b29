//! Per-goal results and their text/JSON rendering.

use std::time::Duration;

use serde::Serialize;

use relvc_core::oracle::{OracleReport, Verdict};
use relvc_core::smt::{CounterModel, SolverError, SolverVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Valid,
    Invalid,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub state: String,
    pub addr: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub cells: Vec<Cell>,
    pub ints: Vec<(String, String)>,
    pub calls: Vec<(String, bool)>,
    /// Whether the model was checked to falsify the goal; null if unchecked.
    pub replayed: Option<bool>,
    pub summary: String,
}

impl From<&CounterModel> for ModelReport {
    fn from(m: &CounterModel) -> Self {
        ModelReport {
            cells: m
                .samples
                .iter()
                .map(|s| Cell {
                    state: s.state.clone(),
                    addr: s.addr.to_string(),
                    value: s.value.to_string(),
                })
                .collect(),
            ints: m.ints.iter().map(|(v, n)| (v.clone(), n.to_string())).collect(),
            calls: m.calls.clone(),
            replayed: m.replay,
            summary: m.summary(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GoalResult {
    pub goal: String,
    pub status: Status,
    pub time_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl GoalResult {
    pub fn from_verdict(goal: &str, v: &SolverVerdict, elapsed: Duration) -> Self {
        let (model, reason) = match v {
            SolverVerdict::Valid => (None, None),
            SolverVerdict::Invalid(m) => (Some(ModelReport::from(m)), None),
            SolverVerdict::Unknown(r) => (None, Some(r.clone())),
        };
        GoalResult {
            goal: goal.to_string(),
            status: match v {
                SolverVerdict::Valid => Status::Valid,
                SolverVerdict::Invalid(_) => Status::Invalid,
                SolverVerdict::Unknown(_) => Status::Unknown,
            },
            time_ms: elapsed.as_millis(),
            model,
            reason,
        }
    }

    pub fn from_error(goal: &str, e: &SolverError, elapsed: Duration) -> Self {
        GoalResult {
            goal: goal.to_string(),
            status: Status::Unknown,
            time_ms: elapsed.as_millis(),
            model: None,
            reason: Some(format!("solver error: {e}")),
        }
    }
}

pub fn print_text(rows: &[GoalResult]) {
    let width = rows.iter().map(|r| r.goal.len()).max().unwrap_or(0);
    for r in rows {
        let tail = match (r.status, &r.model, &r.reason) {
            (Status::Invalid, Some(m), _) => format!("  model: {}", m.summary),
            (Status::Unknown, _, Some(reason)) => format!("  not verified ({reason})"),
            (Status::Unknown, _, None) => "  not verified".into(),
            _ => String::new(),
        };
        let status = match r.status {
            Status::Valid => "valid",
            Status::Invalid => "invalid",
            Status::Unknown => "unknown",
        };
        println!("{status:<8} {:<width$} {:>6} ms{tail}", r.goal, r.time_ms);
    }
    let count = |s| rows.iter().filter(|r| r.status == s).count();
    println!(
        "{} goal(s): {} valid, {} invalid, {} unknown",
        rows.len(),
        count(Status::Valid),
        count(Status::Invalid),
        count(Status::Unknown)
    );
}

pub fn print_json(rows: &[GoalResult]) {
    println!("{}", serde_json::to_string_pretty(rows).expect("report serializes"));
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub item: String,
    pub verdict: String,
    pub holds: bool,
    pub checked: u64,
    pub left_window: bool,
    pub time_ms: u128,
    pub detail: String,
}

impl OracleResult {
    pub fn new(item: String, r: &OracleReport, elapsed: Duration) -> Self {
        OracleResult {
            item,
            verdict: match r.verdict {
                Verdict::Holds => "holds",
                Verdict::Counterexample { .. } => "counterexample",
                Verdict::Inconclusive { .. } => "inconclusive",
            }
            .into(),
            holds: r.verdict.holds(),
            checked: r.checked,
            left_window: r.left_window,
            time_ms: elapsed.as_millis(),
            detail: r.verdict.to_string(),
        }
    }
}

pub fn print_oracle_text(rows: &[OracleResult]) {
    for r in rows {
        let warn = if r.left_window { " (some run wrote outside the window)" } else { "" };
        println!("{}: {} [{} checked]{warn}", r.item, r.detail, r.checked);
    }
}

pub fn print_oracle_json(rows: &[OracleResult]) {
    println!("{}", serde_json::to_string_pretty(rows).expect("report serializes"));
}
