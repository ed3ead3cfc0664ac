use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde_json::Value;

/// Append-only JSONL log, one line per intercepted call.
pub struct CallLog {
    file: Mutex<File>,
}

impl CallLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file: Mutex::new(file) })
    }

    pub fn write(&self, line: &Value) {
        let mut text = line.to_string();
        text.push('\n');
        if let Err(e) = self.file.lock().unwrap().write_all(text.as_bytes()) {
            tracing::warn!(error = %e, "call log write failed");
        }
    }
}
