use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallStatus {
    Ok,
    SchemaError,
    TransportError,
    ProviderRefused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: u64,
    pub label: String,
    pub provider: String,
    pub model: String,
    pub started_ms: u128,
    pub finished_ms: u128,
    pub attempts: u32,
    /// One entry per failed attempt, in order.
    pub errors: Vec<String>,
    pub status: CallStatus,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

#[derive(Debug, Default)]
struct Inner {
    records: Vec<AuditRecord>,
    file: Option<PathBuf>,
}

/// Append-only log of gateway exchanges, optionally mirrored to a JSON-lines file.
/// Cloning shares the same log.
#[derive(Debug, Clone, Default)]
pub struct AuditLog {
    inner: Arc<Mutex<Inner>>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_file(path: impl Into<PathBuf>) -> Self {
        let log = Self::default();
        log.inner.lock().unwrap().file = Some(path.into());
        log
    }

    /// Stamps `record.seq` and appends it. File errors only produce a warning.
    pub fn append(&self, mut record: AuditRecord) {
        let mut inner = self.inner.lock().unwrap();
        record.seq = inner.records.len() as u64;
        if let Some(path) = &inner.file {
            let line = serde_json::to_string(&record).expect("audit record serializes");
            let written = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .and_then(|mut f| writeln!(f, "{line}"));
            if let Err(e) = written {
                eprintln!("warning: could not write audit log {}: {e}", path.display());
            }
        }
        inner.records.push(record);
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        self.inner.lock().unwrap().records.clone()
    }
}
