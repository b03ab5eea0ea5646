//! Execution substrates: the shared VM cluster and the cloud-function pool.
//!
//! The VM cluster is a single pool of capacity shared equally by every
//! running query (processor sharing). The cloud-function (CF) pool runs each
//! plan stage on its own set of isolated workers, one data split per worker,
//! and bills per GB-second of worker memory.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{GB, MB};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VmClusterConfig {
    pub node_count: u32,
    pub vcpus_per_node: u32,
    pub mem_per_node_gb: f64,
    pub mem_overhead_per_node_gb: f64,
    /// Effective query-processing throughput of one vCPU, in MB/s.
    pub per_vcpu_throughput_mb_s: f64,
    /// Retained for scale-out scenarios; a run keeps a fixed cluster.
    pub scaleout_latency_s: f64,
    /// Running-queue length at which the cluster counts as overloaded.
    pub overload_threshold: usize,
    /// Running-queue length below which the cluster counts as idle.
    pub idle_watermark: usize,
    pub price_per_node_s: f64,
}

/// Defaults are calibrated so that a one-day default workload keeps the
/// cluster near its overload threshold during the daily bursts and the
/// off-peak batch.
impl Default for VmClusterConfig {
    fn default() -> Self {
        Self {
            node_count: 1,
            vcpus_per_node: 32,
            mem_per_node_gb: 128.0,
            mem_overhead_per_node_gb: 6.0,
            per_vcpu_throughput_mb_s: 5.0,
            scaleout_latency_s: 120.0,
            overload_threshold: 3,
            idle_watermark: 3,
            price_per_node_s: 0.000427,
        }
    }
}

impl VmClusterConfig {
    /// Uncalibrated hardware figures: 100 MB/s per vCPU (3.2 GB/s for the
    /// cluster), overloaded at 8 running queries, idle only when empty.
    pub fn nominal() -> Self {
        Self {
            per_vcpu_throughput_mb_s: 100.0,
            overload_threshold: 8,
            idle_watermark: 1,
            ..Self::default()
        }
    }

    /// Aggregate cluster capacity in bytes per second.
    pub fn capacity(&self) -> f64 {
        self.node_count as f64 * self.vcpus_per_node as f64 * self.per_vcpu_throughput_mb_s * MB as f64
    }

    /// Price of the whole cluster per second.
    pub fn cluster_price_per_s(&self) -> f64 {
        self.price_per_node_s * self.node_count as f64
    }

    /// Dollars per byte of work at full cluster utilization.
    pub fn price_per_byte(&self) -> f64 {
        self.cluster_price_per_s() / self.capacity()
    }

    pub(crate) fn violations(&self, out: &mut Vec<String>) {
        if self.node_count == 0 || self.vcpus_per_node == 0 || !(self.per_vcpu_throughput_mb_s > 0.0) {
            out.push("vm: node_count, vcpus_per_node and per_vcpu_throughput_mb_s must be positive".into());
        }
        if !(self.mem_overhead_per_node_gb < self.mem_per_node_gb) {
            out.push(format!(
                "vm: mem_overhead_per_node_gb ({}) must be below mem_per_node_gb ({})",
                self.mem_overhead_per_node_gb, self.mem_per_node_gb
            ));
        }
        if self.idle_watermark < 1 {
            out.push("vm: idle_watermark must be at least 1".into());
        }
        if self.overload_threshold < self.idle_watermark {
            out.push(format!(
                "vm: overload_threshold ({}) must be >= idle_watermark ({})",
                self.overload_threshold, self.idle_watermark
            ));
        }
        if !(self.price_per_node_s >= 0.0) {
            out.push("vm: price_per_node_s must be non-negative".into());
        }
        if !(self.scaleout_latency_s >= 0.0) {
            out.push("vm: scaleout_latency_s must be non-negative".into());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfPoolConfig {
    pub vcpus_per_worker: u32,
    pub mem_per_worker_gb: f64,
    pub worker_throughput_mb_s: f64,
    pub launch_latency_s: f64,
    pub per_task_overhead_s: f64,
    pub split_size_mb: u64,
    pub max_parallelism: u64,
    pub price_per_gb_s: f64,
}

impl Default for CfPoolConfig {
    fn default() -> Self {
        Self {
            vcpus_per_worker: 6,
            mem_per_worker_gb: 10.0,
            // six vCPUs at the VM per-vCPU rate
            worker_throughput_mb_s: 30.0,
            launch_latency_s: 1.5,
            per_task_overhead_s: 0.5,
            split_size_mb: 256,
            max_parallelism: 256,
            price_per_gb_s: 0.000_184,
        }
    }
}

impl CfPoolConfig {
    /// Worker rate matching [`VmClusterConfig::nominal`], priced at 16x the
    /// VM per-byte rate.
    pub fn nominal() -> Self {
        Self {
            worker_throughput_mb_s: 600.0,
            price_per_gb_s: 0.000_128_1,
            ..Self::default()
        }
    }

    pub fn split_bytes(&self) -> u64 {
        self.split_size_mb * MB
    }

    pub fn worker_throughput(&self) -> f64 {
        self.worker_throughput_mb_s * MB as f64
    }

    /// Dollars per byte for a worker that spends all its billed time processing.
    pub fn price_per_byte(&self) -> f64 {
        self.mem_per_worker_gb * self.price_per_gb_s / self.worker_throughput()
    }

    pub(crate) fn violations(&self, out: &mut Vec<String>) {
        if self.split_size_mb == 0 {
            out.push("cf: split_size_mb must be positive".into());
        }
        if self.max_parallelism < 1 {
            out.push("cf: max_parallelism must be at least 1".into());
        }
        if !(self.worker_throughput_mb_s > 0.0) || !(self.mem_per_worker_gb > 0.0) {
            out.push("cf: worker_throughput_mb_s and mem_per_worker_gb must be positive".into());
        }
        if !(self.launch_latency_s >= 0.0 && self.per_task_overhead_s >= 0.0) {
            out.push("cf: launch_latency_s and per_task_overhead_s must be non-negative".into());
        }
        if !(self.price_per_gb_s >= 0.0) {
            out.push("cf: price_per_gb_s must be non-negative".into());
        }
    }
}

/// CF per-byte price over VM per-byte price, both at full utilization.
pub fn unit_price_ratio(vm: &VmClusterConfig, cf: &CfPoolConfig) -> f64 {
    cf.price_per_byte() / vm.price_per_byte()
}

pub const UNIT_PRICE_RATIO_BAND: (f64, f64) = (9.0, 24.0);

pub fn check_unit_price_ratio(vm: &VmClusterConfig, cf: &CfPoolConfig) -> std::result::Result<f64, String> {
    let r = unit_price_ratio(vm, cf);
    let (lo, hi) = UNIT_PRICE_RATIO_BAND;
    if (lo..=hi).contains(&r) {
        Ok(r)
    } else {
        Err(format!("CF/VM unit price ratio {r:.2} outside [{lo}, {hi}]"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningEntry {
    pub query_id: u64,
    pub remaining_work: f64,
    pub admitted_at: f64,
}

/// Processor-sharing state of the VM cluster.
///
/// Remaining work is drained lazily: [`VmState::advance`] brings every entry
/// up to a given time using the equal-share rate in force since the last
/// update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VmState {
    pub running: Vec<RunningEntry>,
    pub last_rate_update: f64,
}

impl VmState {
    pub fn len(&self) -> usize {
        self.running.len()
    }

    pub fn is_empty(&self) -> bool {
        self.running.is_empty()
    }

    pub fn contains(&self, query_id: u64) -> bool {
        self.running.iter().any(|e| e.query_id == query_id)
    }

    /// Drains work up to `now` and returns the bytes served since the last update.
    pub fn advance(&mut self, now: f64, capacity: f64) -> f64 {
        let dt = now - self.last_rate_update;
        self.last_rate_update = now;
        if dt <= 0.0 || self.running.is_empty() {
            return 0.0;
        }
        let share = capacity / self.running.len() as f64;
        let mut served = 0.0;
        for e in &mut self.running {
            let d = (share * dt).min(e.remaining_work);
            e.remaining_work -= d;
            served += d;
        }
        served
    }

    /// Adds a query. The caller must have advanced the state to `now`.
    pub fn admit(&mut self, query_id: u64, work: f64, now: f64) {
        debug_assert!(!self.contains(query_id));
        self.running.push(RunningEntry {
            query_id,
            remaining_work: work.max(0.0),
            admitted_at: now,
        });
    }

    pub fn remove(&mut self, query_id: u64) -> Option<RunningEntry> {
        let pos = self.running.iter().position(|e| e.query_id == query_id)?;
        Some(self.running.remove(pos))
    }

    /// Next query to finish under the current rates, and when. Ties go to the
    /// earliest admitted entry.
    pub fn next_completion(&self, capacity: f64) -> Option<(u64, f64)> {
        let n = self.running.len() as f64;
        self.running
            .iter()
            .fold(None::<&RunningEntry>, |best, e| match best {
                Some(b) if b.remaining_work <= e.remaining_work => Some(b),
                _ => Some(e),
            })
            .map(|e| {
                (
                    e.query_id,
                    self.last_rate_update + e.remaining_work.max(0.0) * n / capacity,
                )
            })
    }
}

pub fn vm_rates(state: &VmState, cfg: &VmClusterConfig) -> BTreeMap<u64, f64> {
    if state.running.is_empty() {
        return BTreeMap::new();
    }
    let share = cfg.capacity() / state.running.len() as f64;
    state.running.iter().map(|e| (e.query_id, share)).collect()
}

pub fn vm_is_overloaded(state: &VmState, cfg: &VmClusterConfig) -> bool {
    state.running.len() >= cfg.overload_threshold
}

pub fn vm_is_idle(state: &VmState, cfg: &VmClusterConfig) -> bool {
    state.running.len() < cfg.idle_watermark
}

/// Cost of `work_bytes` processed on the VM cluster, in dollars.
pub fn vm_cost(work_bytes: f64, cfg: &VmClusterConfig) -> f64 {
    work_bytes.max(0.0) * cfg.price_per_byte()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageExecution {
    pub stage_index: usize,
    pub input_bytes: u64,
    pub worker_count: u64,
    pub per_worker_bytes: u64,
    pub duration_s: f64,
    pub gb_seconds: f64,
}

pub fn cf_schedule_stage(input_bytes: u64, cfg: &CfPoolConfig) -> Result<StageExecution> {
    if input_bytes == 0 {
        return Err(Error::Contract("a CF stage needs at least one input byte".into()));
    }
    let split = cfg.split_bytes();
    let worker_count = input_bytes.div_ceil(split).min(cfg.max_parallelism).max(1);
    let per_worker_bytes = input_bytes.div_ceil(worker_count);
    let busy = cfg.per_task_overhead_s + per_worker_bytes as f64 / cfg.worker_throughput();
    Ok(StageExecution {
        stage_index: 0,
        input_bytes,
        worker_count,
        per_worker_bytes,
        duration_s: cfg.launch_latency_s + busy,
        gb_seconds: worker_count as f64 * cfg.mem_per_worker_gb * busy,
    })
}

pub fn cf_cost(exec: &StageExecution, cfg: &CfPoolConfig) -> f64 {
    exec.gb_seconds * cfg.price_per_gb_s
}

/// Memory left for query processing on one VM node.
pub fn usable_node_memory(cfg: &VmClusterConfig) -> u64 {
    ((cfg.mem_per_node_gb - cfg.mem_overhead_per_node_gb) * GB as f64) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with(n: usize) -> VmState {
        let mut s = VmState::default();
        for i in 0..n {
            s.admit(i as u64, 1e9, 0.0);
        }
        s
    }

    #[test]
    fn nominal_capacity_is_3200_mb_per_s() {
        let cfg = VmClusterConfig::nominal();
        assert_eq!(cfg.capacity(), 3200.0 * MB as f64);
    }

    #[test]
    fn rates_equal_share() {
        let cfg = VmClusterConfig::nominal();
        let cap = cfg.capacity();
        assert!(vm_rates(&state_with(0), &cfg).is_empty());
        let one = vm_rates(&state_with(1), &cfg);
        assert_eq!(one[&0], cap);
        let four = vm_rates(&state_with(4), &cfg);
        assert_eq!(four.len(), 4);
        for r in four.values() {
            assert_eq!(*r, 800.0 * MB as f64);
        }
    }

    #[test]
    fn overload_and_idle_thresholds() {
        let mut cfg = VmClusterConfig::nominal();
        assert!(vm_is_overloaded(&state_with(8), &cfg));
        assert!(!vm_is_overloaded(&state_with(7), &cfg));
        cfg.overload_threshold = 1;
        assert!(!vm_is_overloaded(&state_with(0), &cfg));

        let mut cfg = VmClusterConfig::nominal();
        assert!(vm_is_idle(&state_with(0), &cfg));
        assert!(!vm_is_idle(&state_with(1), &cfg));
        cfg.idle_watermark = 2;
        assert!(vm_is_idle(&state_with(1), &cfg));
    }

    #[test]
    fn cf_stage_for_one_gb() {
        let cfg = CfPoolConfig::nominal();
        let e = cf_schedule_stage(GB, &cfg).unwrap();
        assert_eq!(e.worker_count, 4);
        assert_eq!(e.per_worker_bytes, 256 * MB);
        let expected = 1.5 + 0.5 + 256.0 / 600.0;
        assert!((e.duration_s - expected).abs() < 1e-12);
        assert!((e.duration_s - 2.43).abs() < 0.01);
        let gbs = 4.0 * 10.0 * (0.5 + 256.0 / 600.0);
        assert!((e.gb_seconds - gbs).abs() < 1e-9);
        // ~37 GB-s; 4 x 10 GB x 0.93 s when the busy time is rounded first
        assert!((e.gb_seconds - 4.0 * 10.0 * 0.93).abs() < 0.2);
        assert!((cf_cost(&e, &cfg) - gbs * cfg.price_per_gb_s).abs() < 1e-15);
    }

    #[test]
    fn cf_stage_one_byte_is_overhead_bound() {
        let cfg = CfPoolConfig::nominal();
        let e = cf_schedule_stage(1, &cfg).unwrap();
        assert_eq!(e.worker_count, 1);
        assert!((e.duration_s - 2.0).abs() < 1e-6);
    }

    #[test]
    fn cf_stage_parallelism_cap_binds() {
        let cfg = CfPoolConfig::nominal();
        let e = cf_schedule_stage(200 * GB, &cfg).unwrap();
        assert_eq!(e.worker_count, 256);
        assert_eq!(e.per_worker_bytes, 800 * MB);
    }

    #[test]
    fn cf_zero_input_is_a_contract_violation() {
        assert!(matches!(
            cf_schedule_stage(0, &CfPoolConfig::nominal()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn cf_cost_zero() {
        let cfg = CfPoolConfig::nominal();
        let e = StageExecution {
            stage_index: 0,
            input_bytes: 1,
            worker_count: 1,
            per_worker_bytes: 1,
            duration_s: 0.0,
            gb_seconds: 0.0,
        };
        assert_eq!(cf_cost(&e, &cfg), 0.0);
    }

    #[test]
    fn vm_cost_one_capacity_second() {
        let cfg = VmClusterConfig::nominal();
        assert_eq!(vm_cost(0.0, &cfg), 0.0);
        let c = vm_cost(cfg.capacity(), &cfg);
        assert!((c - 0.000427).abs() < 1e-15);
        assert!((vm_cost(2.0 * cfg.capacity(), &cfg) - 2.0 * c).abs() < 1e-15);
    }

    #[test]
    fn default_price_ratio_is_in_band() {
        let r = check_unit_price_ratio(&VmClusterConfig::default(), &CfPoolConfig::default()).unwrap();
        assert!((9.0..=24.0).contains(&r), "{r}");
        let r = check_unit_price_ratio(&VmClusterConfig::nominal(), &CfPoolConfig::nominal()).unwrap();
        assert!((r - 16.0).abs() < 0.01, "{r}");
    }

    #[test]
    fn ps_two_job_trace() {
        // q1 (3200 MB) alone for 0.5 s, then q2 (1600 MB) joins. Both then
        // hold 1600 MB at half rate and finish together at t = 1.5.
        let cap = VmClusterConfig::nominal().capacity();
        let mut s = VmState::default();
        s.admit(1, 3200.0 * MB as f64, 0.0);
        assert_eq!(s.next_completion(cap), Some((1, 1.0)));
        let served = s.advance(0.5, cap);
        assert!((served - 1600.0 * MB as f64).abs() < 1e-3);
        s.admit(2, 1600.0 * MB as f64, 0.5);
        let (id, t) = s.next_completion(cap).unwrap();
        assert_eq!(id, 1);
        assert!((t - 1.5).abs() < 1e-12);
        s.advance(t, cap);
        s.remove(1);
        let (id, t) = s.next_completion(cap).unwrap();
        assert_eq!(id, 2);
        assert!((t - 1.5).abs() < 1e-12);
    }

    #[test]
    fn usable_memory_excludes_overhead() {
        let cfg = VmClusterConfig::nominal();
        assert_eq!(usable_node_memory(&cfg), 122 * GB);
    }
}
