//! CSV export and import of query streams.
//!
//! Header: `id,submit_time_s,db_id,scan_bytes,service_level,complexity`.
//! Plans are not stored; they are re-synthesized on import from the scan
//! size and complexity.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{derive_seed, synthesize_plan, Complexity, Lifecycle, PlanConfig, Query, QueryStream, ServiceLevel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: u64,
    pub submit_time_s: f64,
    pub db_id: String,
    pub scan_bytes: u64,
    pub service_level: ServiceLevel,
    pub complexity: Complexity,
}

impl From<&Query> for TraceRecord {
    fn from(q: &Query) -> Self {
        TraceRecord {
            id: q.id,
            submit_time_s: q.submit_time,
            db_id: q.db_id.clone(),
            scan_bytes: q.scan_bytes,
            service_level: q.service_level,
            complexity: q.complexity,
        }
    }
}

pub fn write_trace(stream: &QueryStream, path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for q in &stream.queries {
        w.serialize(TraceRecord::from(q)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path, plan: &PlanConfig, seed: u64) -> Result<QueryStream> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let expected = [
        "id",
        "submit_time_s",
        "db_id",
        "scan_bytes",
        "service_level",
        "complexity",
    ];
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(expected) {
        return Err(Error::Format(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let records = r
        .deserialize::<TraceRecord>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err)?;
    stream_from_records(records, plan, seed)
}

/// Rebuilds a stream from trace records. Records must be ordered by
/// `(submit_time_s, id)` with unique ids and positive scans.
pub fn stream_from_records(records: Vec<TraceRecord>, plan: &PlanConfig, seed: u64) -> Result<QueryStream> {
    let mut seen = BTreeSet::new();
    let mut queries = Vec::with_capacity(records.len());
    for rec in records {
        if !seen.insert(rec.id) {
            return Err(Error::Format(format!("duplicate query id {}", rec.id)));
        }
        if rec.scan_bytes == 0 {
            return Err(Error::Format(format!("query {} has zero scan_bytes", rec.id)));
        }
        if !(rec.submit_time_s.is_finite() && rec.submit_time_s >= 0.0) {
            return Err(Error::Format(format!("query {} has invalid submit time", rec.id)));
        }
        queries.push(Query {
            id: rec.id,
            submit_time: rec.submit_time_s,
            plan: synthesize_plan(rec.scan_bytes, rec.complexity, plan, derive_seed(seed, rec.id)),
            db_id: rec.db_id,
            scan_bytes: rec.scan_bytes,
            service_level: rec.service_level,
            complexity: rec.complexity,
            lifecycle: Lifecycle::default(),
        });
    }
    let stream = QueryStream { queries };
    if !stream.is_sorted() {
        return Err(Error::Format("trace is not sorted by (submit_time_s, id)".into()));
    }
    Ok(stream)
}
