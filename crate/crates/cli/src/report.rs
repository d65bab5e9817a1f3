use std::fmt;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Flagged,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::Flagged => 1,
        }
    }

    /// Worst of two statuses: fail beats flagged beats pass.
    pub fn and(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Flagged, _) | (_, Flagged) => Flagged,
            _ => Pass,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Flagged => "flagged",
        };
        write!(f, "{s}")
    }
}

/// Machine-readable outcome of one command. Field order is fixed and maps are
/// key-sorted, so equal inputs give byte-identical JSON.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub n: Option<usize>,
    pub config: Value,
    pub status: Status,
    pub summary: Vec<String>,
    pub details: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Short human-readable text for standard output.
    pub fn human(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, self.status);
        for line in &self.summary {
            out.push_str("  ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}
