use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of the event log. Bookkeeping entries (`Enqueued`, `Dequeued`,
/// `Routed`) carry the sequence number of the event that caused them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub time: f64,
    pub seq: u64,
    pub kind: String,
    pub query_id: Option<u64>,
    pub detail: String,
}

pub fn write_trace_ndjson(log: &[LogRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for rec in log {
        serde_json::to_writer(&mut w, rec).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
