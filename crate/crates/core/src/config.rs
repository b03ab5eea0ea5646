//! Scenario configuration.
//!
//! The file format is JSON. Every key is optional and falls back to the
//! built-in defaults; unknown keys are rejected. Semantic checks report
//! every violation at once.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{RoutingMode, SimConfig};
use crate::error::{Error, Result};
use crate::resources::{CfPoolConfig, VmClusterConfig};
use crate::scheduler::{Policy, SchedulerConfig, SlaMode};
use crate::workload::{ArrivalParams, Generator, PlanConfig, QueryStream, WorkloadSpec};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    AutoNosla,
    AutoSla,
    ForceSla,
    PureCf,
}

impl Scenario {
    /// Baseline first.
    pub const MATRIX: [Scenario; 4] = [
        Scenario::AutoNosla,
        Scenario::AutoSla,
        Scenario::ForceSla,
        Scenario::PureCf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::AutoNosla => "auto_nosla",
            Scenario::AutoSla => "auto_sla",
            Scenario::ForceSla => "force_sla",
            Scenario::PureCf => "pure_cf",
        }
    }

    fn settings(self) -> (Policy, SlaMode, RoutingMode) {
        match self {
            Scenario::AutoNosla => (Policy::Auto, SlaMode::Disabled, RoutingMode::Coordinated),
            Scenario::AutoSla => (Policy::Auto, SlaMode::Enabled, RoutingMode::Coordinated),
            Scenario::ForceSla => (Policy::Force, SlaMode::Enabled, RoutingMode::Coordinated),
            Scenario::PureCf => (Policy::Auto, SlaMode::Disabled, RoutingMode::CfOnly),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::MATRIX
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioChoice {
    Matrix,
    #[serde(untagged)]
    Single(Scenario),
}

impl FromStr for ScenarioChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "matrix" {
            Ok(ScenarioChoice::Matrix)
        } else {
            s.parse().map(ScenarioChoice::Single)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub specs: Vec<WorkloadSpec>,
    pub arrivals: ArrivalParams,
    pub plan: PlanConfig,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            specs: WorkloadSpec::table_defaults(),
            arrivals: ArrivalParams::default(),
            plan: PlanConfig::default(),
        }
    }
}

impl WorkloadConfig {
    pub fn generator(&self) -> Generator {
        Generator::new(self.arrivals.clone(), self.plan.clone())
    }

    pub fn horizon_s(&self) -> f64 {
        self.specs
            .iter()
            .map(|s| s.horizon_s)
            .fold(None, |m: Option<f64>, h| Some(m.map_or(h, |m| m.max(h))))
            .unwrap_or(crate::workload::DAY_S)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub quiescence_factor: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            quiescence_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub scenario: ScenarioChoice,
    pub workload: WorkloadConfig,
    pub vm: VmClusterConfig,
    pub cf: CfPoolConfig,
    pub scheduler: SchedulerConfig,
    pub engine: EngineConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            scenario: ScenarioChoice::Matrix,
            workload: WorkloadConfig::default(),
            vm: VmClusterConfig::default(),
            cf: CfPoolConfig::default(),
            scheduler: SchedulerConfig::default(),
            engine: EngineConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Every semantic problem with the configuration.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.workload.specs.is_empty() {
            v.push("workload.specs must not be empty".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        for spec in &self.workload.specs {
            spec.violations(&mut v);
            if !ids.insert(spec.db_id.as_str()) {
                v.push(format!("workload: duplicate db_id {:?}", spec.db_id));
            }
        }
        self.workload.arrivals.violations(&mut v);
        self.workload.plan.violations(&mut v);
        self.vm.violations(&mut v);
        self.cf.violations(&mut v);
        self.scheduler.violations(&mut v);
        if !(self.engine.quiescence_factor >= 1.0) {
            v.push("engine.quiescence_factor must be at least 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn generate_stream(&self) -> Result<QueryStream> {
        self.workload.generator().generate_all(&self.workload.specs, self.seed)
    }

    /// Engine settings for a named scenario.
    pub fn sim_config(&self, scenario: Scenario) -> SimConfig {
        let (policy, sla, routing) = scenario.settings();
        self.sim_config_with(policy, sla, routing)
    }

    pub fn sim_config_with(&self, policy: Policy, sla: SlaMode, routing: RoutingMode) -> SimConfig {
        SimConfig {
            vm: self.vm.clone(),
            cf: self.cf.clone(),
            scheduler: SchedulerConfig {
                policy,
                sla,
                ..self.scheduler.clone()
            },
            routing,
            horizon_s: self.workload.horizon_s(),
            quiescence_factor: self.engine.quiescence_factor,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}
