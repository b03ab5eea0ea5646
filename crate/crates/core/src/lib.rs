//! Discrete-event simulator for flexible-SLA serverless query processing.
//!
//! Queries arrive with one of three service levels (immediate, relaxed,
//! best-of-effort). Relaxed and best-of-effort queries wait in pending
//! queues until the cost-efficient VM cluster has room; a coordinator then
//! routes each query either to the shared VM cluster (processor sharing over
//! a fixed capacity) or to a pool of per-task cloud-function workers that
//! execute the query plan stage by stage.
//!
//! The crate is organised bottom-up:
//!
//! - [`workload`]: the five arrival patterns, stage plans, merged streams, CSV traces.
//! - [`resources`]: VM cluster and cloud-function pool models, prices.
//! - [`scheduler`]: service-level routing, pending queues, Force/Auto coordination.
//! - [`engine`]: the event loop that ties everything together.
//! - [`metrics`]: cost ledger, per-category summaries, comparisons, emission.
//! - [`config`] and [`matrix`]: scenario configuration and the four-scenario experiment.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engine;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod resources;
pub mod scheduler;
pub mod units;
pub mod workload;

pub use crate::config::{load_config, Scenario, ScenarioChoice, ScenarioConfig};
pub use crate::engine::{run_scenario, SimConfig, SimResult};
pub use crate::error::{Error, Result};
pub use crate::matrix::{run_matrix, MatrixReport};
pub use crate::metrics::{compare, summarize, CategoryMetrics, Comparison};
pub use crate::units::{Money, GB, MB};
pub use crate::workload::{Query, QueryStream, ServiceLevel};
