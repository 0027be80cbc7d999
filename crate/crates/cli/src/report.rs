use serde::Serialize;
use serde_json::Value;

/// Bumped on any breaking change to the report layout.
pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool_version: &'static str,
    pub runtime_ms: Option<u64>,
    pub worker_count: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: String,
    pub params: Value,
    pub seed: u64,
    pub results: Value,
    pub meta: Meta,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub schema_version: &'static str,
    pub error: ErrorBody,
}

impl ErrorReport {
    pub fn new(kind: &str, message: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            error: ErrorBody {
                kind: kind.into(),
                message: message.into(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("error serializes");
        s.push('\n');
        s
    }
}
