//! Synthetic stage plans.
//!
//! A plan is a linear chain of stages. The first stage scans the query's
//! input; each later stage consumes a fraction (the selectivity) of its
//! predecessor's input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Complexity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub stages_small: usize,
    pub stages_medium: usize,
    pub stages_large: usize,
    pub selectivity: f64,
    /// Relative jitter applied to each stage's selectivity, drawn from the
    /// plan seed. Zero gives fully regular plans.
    pub selectivity_jitter: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            stages_small: 2,
            stages_medium: 3,
            stages_large: 4,
            selectivity: 0.1,
            selectivity_jitter: 0.0,
        }
    }
}

impl PlanConfig {
    pub fn stage_count(&self, complexity: Complexity) -> usize {
        match complexity {
            Complexity::Small => self.stages_small,
            Complexity::Medium => self.stages_medium,
            Complexity::Large => self.stages_large,
        }
    }

    pub(crate) fn violations(&self, out: &mut Vec<String>) {
        for (name, k) in [
            ("stages_small", self.stages_small),
            ("stages_medium", self.stages_medium),
            ("stages_large", self.stages_large),
        ] {
            if k == 0 {
                out.push(format!("plan.{name} must be at least 1"));
            }
        }
        if !(self.selectivity > 0.0 && self.selectivity <= 1.0) {
            out.push(format!("plan.selectivity must lie in (0, 1], got {}", self.selectivity));
        }
        if !(0.0..1.0).contains(&self.selectivity_jitter) {
            out.push(format!(
                "plan.selectivity_jitter must lie in [0, 1), got {}",
                self.selectivity_jitter
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub index: usize,
    pub input_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
}

impl StagePlan {
    /// Builds a chain from explicit stage inputs.
    pub fn from_inputs(inputs: impl IntoIterator<Item = u64>) -> Self {
        let stages = inputs
            .into_iter()
            .enumerate()
            .map(|(index, input_bytes)| Stage {
                index,
                input_bytes: input_bytes.max(1),
            })
            .collect();
        StagePlan { stages }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Sum of all stage inputs: the work a VM has to do for this query.
    pub fn total_work(&self) -> u64 {
        self.stages.iter().map(|s| s.input_bytes).sum()
    }
}

pub fn synthesize_plan(scan_bytes: u64, complexity: Complexity, cfg: &PlanConfig, seed: u64) -> StagePlan {
    let k = cfg.stage_count(complexity).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(k);
    let mut current = scan_bytes.max(1) as f64;
    inputs.push(current.round() as u64);
    for _ in 1..k {
        let mut sel = cfg.selectivity;
        if cfg.selectivity_jitter > 0.0 {
            let j = cfg.selectivity_jitter;
            sel *= rng.random_range(1.0 - j..1.0 + j);
        }
        current *= sel.min(1.0);
        inputs.push(current.round() as u64);
    }
    StagePlan::from_inputs(inputs)
}
