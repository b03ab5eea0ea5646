//! The four-scenario experiment: auto without SLA (baseline), auto with
//! SLA, force with SLA, and pure CF, all over one generated stream.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Scenario, ScenarioConfig};
use crate::engine::{run_scenario, write_trace_ndjson, SimConfig, SimResult};
use crate::error::{Error, Result};
use crate::metrics::{compare, emit, summarize, CategoryMetrics, Comparison, Format};
use crate::resources::check_unit_price_ratio;
use crate::workload::QueryStream;

pub const BASELINE: Scenario = Scenario::AutoNosla;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputOptions {
    pub format: Format,
    pub trace: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            format: Format::Json,
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub name: String,
    pub metrics: CategoryMetrics,
    pub result: SimResult,
}

impl ScenarioOutcome {
    pub fn violations(&self) -> &[String] {
        &self.result.violations
    }
}

/// Contents of `comparison.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub workload_hash: String,
    pub baseline: String,
    pub variants: BTreeMap<String, Comparison>,
}

#[derive(Debug, Clone)]
pub struct MatrixReport {
    pub seed: u64,
    pub workload_hash: String,
    pub outcomes: Vec<ScenarioOutcome>,
    pub comparison: ComparisonReport,
    /// Failed invariant checks across all scenarios, prefixed by scenario.
    pub failures: Vec<String>,
}

impl MatrixReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn outcome(&self, scenario: Scenario) -> &ScenarioOutcome {
        self.outcomes
            .iter()
            .find(|o| o.name == scenario.name())
            .expect("matrix runs every scenario")
    }

    pub fn metrics(&self, scenario: Scenario) -> &CategoryMetrics {
        &self.outcome(scenario).metrics
    }
}

/// Runs one engine configuration and summarizes it.
pub fn run_named(name: &str, sim: &SimConfig, stream: &QueryStream, seed: u64) -> Result<ScenarioOutcome> {
    let result = run_scenario(sim, stream)?;
    let mut metrics = summarize(&result)?;
    metrics.seed = Some(seed);
    Ok(ScenarioOutcome {
        name: name.to_string(),
        metrics,
        result,
    })
}

/// Writes `<name>.metrics.<ext>` and, when tracing, `<name>.trace.ndjson`.
pub fn write_outcome(outcome: &ScenarioOutcome, out_dir: &Path, opts: OutputOptions) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(format!("{}.metrics.{}", outcome.name, opts.format.extension()));
    emit(&outcome.metrics, &path, opts.format)?;
    if opts.trace {
        write_trace_ndjson(
            &outcome.result.log,
            &out_dir.join(format!("{}.trace.ndjson", outcome.name)),
        )?;
    }
    Ok(())
}

/// Runs the matrix over an explicit stream (generated or imported).
pub fn run_matrix_on(cfg: &ScenarioConfig, stream: &QueryStream) -> Result<MatrixReport> {
    let runs: Vec<Result<ScenarioOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = Scenario::MATRIX
            .iter()
            .map(|&sc| {
                let sim = cfg.sim_config(sc);
                s.spawn(move || run_named(sc.name(), &sim, stream, cfg.seed))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    let outcomes = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let workload_hash = stream.content_hash();
    let mut failures = Vec::new();
    if let Err(e) = check_unit_price_ratio(&cfg.vm, &cfg.cf) {
        failures.push(format!("config: {e}"));
    }
    for o in &outcomes {
        failures.extend(o.violations().iter().map(|v| format!("{}: {v}", o.name)));
        if o.metrics.workload_hash != workload_hash {
            failures.push(format!("{}: ran on a different workload", o.name));
        }
    }

    let baseline = &outcomes[0].metrics;
    let mut variants = BTreeMap::new();
    for o in &outcomes[1..] {
        variants.insert(o.name.clone(), compare(baseline, &o.metrics)?);
    }
    Ok(MatrixReport {
        seed: cfg.seed,
        comparison: ComparisonReport {
            seed: cfg.seed,
            workload_hash: workload_hash.clone(),
            baseline: BASELINE.name().to_string(),
            variants,
        },
        workload_hash,
        outcomes,
        failures,
    })
}

pub fn write_matrix(report: &MatrixReport, out_dir: &Path, opts: OutputOptions) -> Result<()> {
    for o in &report.outcomes {
        write_outcome(o, out_dir, opts)?;
    }
    let path = out_dir.join("comparison.json");
    let mut body = serde_json::to_string_pretty(&report.comparison).map_err(|e| Error::Format(e.to_string()))?;
    body.push('\n');
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

/// Generates the configured stream, runs all four scenarios and writes
/// per-scenario metrics plus `comparison.json` into `out_dir`.
pub fn run_matrix(cfg: &ScenarioConfig, out_dir: &Path, opts: OutputOptions) -> Result<MatrixReport> {
    cfg.validate()?;
    let stream = cfg.generate_stream()?;
    let report = run_matrix_on(cfg, &stream)?;
    write_matrix(&report, out_dir, opts)?;
    Ok(report)
}
