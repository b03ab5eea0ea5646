//! Cost and latency accounting per service-level category.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::SimResult;
use crate::error::{Error, Result};
use crate::units::Money;
use crate::workload::ServiceLevel;

pub const CSV_HEADER: &str = "category,count,cum_exec_s,cum_cost_usd,max_pending_s,mean_pending_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub vm_cost: Money,
    pub cf_cost: Money,
}

/// Per-query costs plus VM time that no query used.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: BTreeMap<u64, LedgerEntry>,
    pub idle_vm_cost: Money,
}

impl CostLedger {
    pub fn record(&mut self, query_id: u64, vm_cost: Money, cf_cost: Money) -> Result<()> {
        if self.entries.contains_key(&query_id) {
            return Err(Error::Contract(format!("ledger already has query {query_id}")));
        }
        self.entries.insert(query_id, LedgerEntry { vm_cost, cf_cost });
        Ok(())
    }

    /// Sum of per-query costs.
    pub fn attributed(&self) -> Money {
        self.entries.values().map(|e| e.vm_cost + e.cf_cost).sum()
    }

    pub fn total(&self) -> Money {
        self.attributed() + self.idle_vm_cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Immediate,
    Relaxed,
    Boe,
    Total,
}

impl Category {
    pub const LEVELS: [Category; 3] = [Category::Immediate, Category::Relaxed, Category::Boe];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Immediate => "immediate",
            Category::Relaxed => "relaxed",
            Category::Boe => "boe",
            Category::Total => "total",
        }
    }
}

impl From<ServiceLevel> for Category {
    fn from(level: ServiceLevel) -> Self {
        match level {
            ServiceLevel::Immediate => Category::Immediate,
            ServiceLevel::Relaxed => Category::Relaxed,
            ServiceLevel::BestOfEffort => Category::Boe,
        }
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "immediate" => Ok(Category::Immediate),
            "relaxed" => Ok(Category::Relaxed),
            "boe" => Ok(Category::Boe),
            "total" => Ok(Category::Total),
            other => Err(Error::Format(format!("unknown category {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: Category,
    pub count: u64,
    pub cum_exec_s: f64,
    pub cum_cost_usd: Money,
    pub max_pending_s: f64,
    pub mean_pending_s: f64,
}

impl CategoryRow {
    fn empty(category: Category) -> Self {
        Self {
            category,
            count: 0,
            cum_exec_s: 0.0,
            cum_cost_usd: Money::ZERO,
            max_pending_s: 0.0,
            mean_pending_s: 0.0,
        }
    }
}

/// Rows for immediate, relaxed and best-of-effort queries (keyed by the
/// service level the query was submitted with) followed by a total row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub seed: Option<u64>,
    pub workload_hash: String,
    pub idle_vm_cost_usd: Money,
    pub rows: Vec<CategoryRow>,
}

impl CategoryMetrics {
    pub fn row(&self, category: Category) -> &CategoryRow {
        self.rows
            .iter()
            .find(|r| r.category == category)
            .expect("metrics carry every category")
    }

    pub fn total(&self) -> &CategoryRow {
        self.row(Category::Total)
    }
}

pub fn summarize(result: &SimResult) -> Result<CategoryMetrics> {
    let mut rows: Vec<CategoryRow> = Category::LEVELS.iter().map(|&c| CategoryRow::empty(c)).collect();
    let mut pending_sums = [0.0f64; 3];
    for rec in &result.records {
        let (Some(exec), Some(pending)) = (rec.exec_time(), rec.pending_time()) else {
            return Err(Error::Contract(format!("query {} has an incomplete lifecycle", rec.id)));
        };
        let k = match Category::from(rec.submitted_level) {
            Category::Immediate => 0,
            Category::Relaxed => 1,
            _ => 2,
        };
        let row = &mut rows[k];
        row.count += 1;
        row.cum_exec_s += exec;
        row.cum_cost_usd += rec.cost();
        row.max_pending_s = row.max_pending_s.max(pending);
        pending_sums[k] += pending;
    }
    for (row, sum) in rows.iter_mut().zip(pending_sums) {
        if row.count > 0 {
            row.mean_pending_s = sum / row.count as f64;
        }
    }
    let mut total = CategoryRow::empty(Category::Total);
    for row in &rows {
        total.count += row.count;
        total.cum_exec_s += row.cum_exec_s;
        total.cum_cost_usd += row.cum_cost_usd;
        total.max_pending_s = total.max_pending_s.max(row.max_pending_s);
    }
    if total.count > 0 {
        total.mean_pending_s = pending_sums.iter().sum::<f64>() / total.count as f64;
    }
    rows.push(total);
    Ok(CategoryMetrics {
        seed: None,
        workload_hash: result.workload_hash.clone(),
        idle_vm_cost_usd: result.ledger.idle_vm_cost,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    /// `None` when the baseline value is zero.
    pub cost_delta_pct: Option<f64>,
    pub exec_delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub immediate: Delta,
    pub relaxed: Delta,
    pub boe: Delta,
    pub total: Delta,
}

impl Comparison {
    pub fn get(&self, category: Category) -> &Delta {
        match category {
            Category::Immediate => &self.immediate,
            Category::Relaxed => &self.relaxed,
            Category::Boe => &self.boe,
            Category::Total => &self.total,
        }
    }
}

pub fn percent_change(baseline: f64, variant: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (variant - baseline) / baseline * 100.0)
}

/// Percent change of `variant` relative to `baseline`, per category.
/// Refuses to compare runs over different workloads.
pub fn compare(baseline: &CategoryMetrics, variant: &CategoryMetrics) -> Result<Comparison> {
    if baseline.workload_hash != variant.workload_hash {
        return Err(Error::WorkloadMismatch {
            baseline: baseline.workload_hash.clone(),
            variant: variant.workload_hash.clone(),
        });
    }
    let delta = |c: Category| {
        let (b, v) = (baseline.row(c), variant.row(c));
        Delta {
            cost_delta_pct: percent_change(b.cum_cost_usd.micros() as f64, v.cum_cost_usd.micros() as f64),
            exec_delta_pct: percent_change(b.cum_exec_s, v.cum_exec_s),
        }
    };
    Ok(Comparison {
        immediate: delta(Category::Immediate),
        relaxed: delta(Category::Relaxed),
        boe: delta(Category::Boe),
        total: delta(Category::Total),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn to_csv(metrics: &CategoryMetrics) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &metrics.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.category.as_str(),
            r.count,
            r.cum_exec_s,
            r.cum_cost_usd,
            r.max_pending_s,
            r.mean_pending_s
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CategoryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Format(format!("expected header {CSV_HEADER:?}")));
    }
    let bad = |line: &str| Error::Format(format!("malformed metrics row {line:?}"));
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(line));
            }
            Ok(CategoryRow {
                category: f[0].parse()?,
                count: f[1].parse().map_err(|_| bad(line))?,
                cum_exec_s: f[2].parse().map_err(|_| bad(line))?,
                cum_cost_usd: f[3].parse().map_err(|_| bad(line))?,
                max_pending_s: f[4].parse().map_err(|_| bad(line))?,
                mean_pending_s: f[5].parse().map_err(|_| bad(line))?,
            })
        })
        .collect()
}

pub fn to_json(metrics: &CategoryMetrics) -> String {
    let mut s = serde_json::to_string_pretty(metrics).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn emit(metrics: &CategoryMetrics, path: &Path, format: Format) -> Result<()> {
    let body = match format {
        Format::Csv => to_csv(metrics),
        Format::Json => to_json(metrics),
    };
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<CategoryMetrics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}
