use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    TryRule,
    Applicable,
    RejectedTest,
    ConstraintClash,
    Success,
    Fail,
    MemoHit,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::TryRule => "try-rule",
            TraceKind::Applicable => "applicable",
            TraceKind::RejectedTest => "rejected-test",
            TraceKind::ConstraintClash => "constraint-clash",
            TraceKind::Success => "success",
            TraceKind::Fail => "fail",
            TraceKind::MemoHit => "memo-hit",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One search step. `rule` is `-` for category-level events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub depth: usize,
    pub kind: TraceKind,
    pub category: String,
    pub rule: String,
    pub digest: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.depth, self.kind, self.category, self.rule, self.digest
        )
    }
}

/// Tab-separated lines, one event per line.
pub fn format_trace(events: &[TraceEvent]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}

/// One JSON object per line with the same fields as [`format_trace`].
pub fn format_trace_json(events: &[TraceEvent]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(e).expect("trace events serialize") + "\n")
        .collect()
}
