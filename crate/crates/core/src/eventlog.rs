//! JSON-lines event log records.
//!
//! One record per line with the fixed key order `event_type`, `height`,
//! `caller`, `payload`. Payload objects have their keys sorted, every digest
//! is lowercase `0x` hex, and no record carries a floating point number, so
//! a given event sequence has exactly one byte encoding.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::crypto::AccountId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub event_type: String,
    pub height: u64,
    pub caller: Option<AccountId>,
    pub payload: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LogRecord {
    pub fn new(event_type: impl Into<String>, height: u64, caller: Option<AccountId>, payload: Value) -> Self {
        LogRecord {
            event_type: event_type.into(),
            height,
            caller,
            payload,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records always serialize")
    }

    pub fn parse_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    /// Adds `key` to an object payload. Non-object payloads are wrapped.
    pub fn with_payload_field(mut self, key: &str, value: Value) -> Self {
        if !self.payload.is_object() {
            let inner = std::mem::take(&mut self.payload);
            self.payload = serde_json::json!({ "value": inner });
        }
        if let Value::Object(map) = &mut self.payload {
            map.insert(key.to_string(), value);
        }
        self
    }

    pub fn payload_str(&self, key: &str) -> Option<&str> {
        self.payload.get(key).and_then(Value::as_str)
    }
}

/// Renders records as a JSON-lines document with a trailing newline.
pub fn to_jsonl<'a>(records: impl IntoIterator<Item = &'a LogRecord>) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&record.to_line());
        out.push('\n');
    }
    out
}

pub fn write_jsonl<'a, W: Write>(
    mut writer: W,
    records: impl IntoIterator<Item = &'a LogRecord>,
) -> std::io::Result<()> {
    for record in records {
        writer.write_all(record.to_line().as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Reads a JSON-lines log, skipping blank lines.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<LogRecord>, LogError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = LogRecord::parse_line(&line).map_err(|source| LogError::Parse {
            line: idx + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}
