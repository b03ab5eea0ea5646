//! Service-level routing, pending-queue schedulers and the query coordinator.
//!
//! Immediate queries go straight to the coordinator. Relaxed queries wait in
//! a FIFO until the VM cluster is not overloaded or their pending deadline
//! approaches. Best-of-effort queries wait until the VM cluster is idle and
//! leave one at a time. The coordinator then picks the VM cluster or the CF
//! pool according to the Force or Auto policy.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resources::{vm_is_idle, vm_is_overloaded, VmClusterConfig, VmState};
use crate::workload::ServiceLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Force,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlaMode {
    #[serde(rename = "on")]
    Enabled,
    #[serde(rename = "off")]
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub pending_limit_s: f64,
    pub deadline_slack_s: f64,
    pub policy: Policy,
    pub sla: SlaMode,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            pending_limit_s: 300.0,
            deadline_slack_s: 10.0,
            policy: Policy::Auto,
            sla: SlaMode::Enabled,
        }
    }
}

impl SchedulerConfig {
    /// Time at which a relaxed query enqueued at `enqueue_time` must leave the queue.
    pub fn relaxed_deadline(&self, enqueue_time: f64) -> f64 {
        enqueue_time + (self.pending_limit_s - self.deadline_slack_s)
    }

    pub(crate) fn violations(&self, out: &mut Vec<String>) {
        if !(0.0 < self.deadline_slack_s && self.deadline_slack_s < self.pending_limit_s) {
            out.push(format!(
                "scheduler: need 0 < deadline_slack_s ({}) < pending_limit_s ({})",
                self.deadline_slack_s, self.pending_limit_s
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueKind {
    Relaxed,
    #[serde(rename = "boe")]
    BestOfEffort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingEntry {
    pub query_id: u64,
    pub enqueue_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingQueue {
    pub kind: QueueKind,
    pub entries: VecDeque<PendingEntry>,
}

impl PendingQueue {
    pub fn new(kind: QueueKind) -> Self {
        Self {
            kind,
            entries: VecDeque::new(),
        }
    }

    pub fn push(&mut self, query_id: u64, enqueue_time: f64) {
        debug_assert!(self.entries.back().is_none_or(|e| e.enqueue_time <= enqueue_time));
        self.entries.push_back(PendingEntry { query_id, enqueue_time });
    }

    pub fn pop(&mut self) -> Option<PendingEntry> {
        self.entries.pop_front()
    }

    pub fn head(&self) -> Option<&PendingEntry> {
        self.entries.front()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitAction {
    CoordinateNow,
    Enqueue(QueueKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    VmCluster,
    CfPool,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::VmCluster => "vm",
            Target::CfPool => "cf",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteReason {
    ImmediateVmFree,
    VmOverloadedSpill,
    ForcedToVm,
    DequeuedRelaxed,
    DequeuedBoE,
    /// Pure-CF baseline: every query goes to the pool.
    CfOnly,
}

impl fmt::Display for RouteReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteReason::ImmediateVmFree => "immediate_vm_free",
            RouteReason::VmOverloadedSpill => "vm_overloaded_spill",
            RouteReason::ForcedToVm => "forced_to_vm",
            RouteReason::DequeuedRelaxed => "dequeued_relaxed",
            RouteReason::DequeuedBoE => "dequeued_boe",
            RouteReason::CfOnly => "cf_only",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub target: Target,
    pub reason: RouteReason,
}

/// Service level the query actually runs with: everything becomes immediate
/// when flexible SLAs are switched off.
pub fn effective_level(level: ServiceLevel, sla: SlaMode) -> ServiceLevel {
    match sla {
        SlaMode::Enabled => level,
        SlaMode::Disabled => ServiceLevel::Immediate,
    }
}

/// Relaxed queries to dequeue given a snapshot of the VM state: the whole
/// queue while the cluster is not overloaded, otherwise only the entries
/// whose pending deadline has arrived.
pub fn poll_relaxed(
    queue: &PendingQueue,
    vm: &VmState,
    vm_cfg: &VmClusterConfig,
    cfg: &SchedulerConfig,
    now: f64,
) -> Vec<u64> {
    let overloaded = vm_is_overloaded(vm, vm_cfg);
    queue
        .entries
        .iter()
        .filter(|e| !overloaded || now >= cfg.relaxed_deadline(e.enqueue_time))
        .map(|e| e.query_id)
        .collect()
}

/// At most one best-of-effort query, and only while the VM cluster is idle.
pub fn poll_boe(queue: &PendingQueue, vm: &VmState, vm_cfg: &VmClusterConfig) -> Vec<u64> {
    match queue.head() {
        Some(head) if vm_is_idle(vm, vm_cfg) => vec![head.query_id],
        _ => Vec::new(),
    }
}

pub fn coordinate(level: ServiceLevel, vm: &VmState, vm_cfg: &VmClusterConfig, policy: Policy) -> RoutingDecision {
    let overloaded = vm_is_overloaded(vm, vm_cfg);
    let (target, reason) = match (policy, level, overloaded) {
        (Policy::Force, ServiceLevel::Relaxed | ServiceLevel::BestOfEffort, _) => {
            (Target::VmCluster, RouteReason::ForcedToVm)
        }
        (_, _, true) => (Target::CfPool, RouteReason::VmOverloadedSpill),
        (_, _, false) => (Target::VmCluster, RouteReason::ImmediateVmFree),
    };
    RoutingDecision { target, reason }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DequeueCause {
    /// Relaxed query leaving because the VM cluster has room.
    VmAvailable,
    /// Relaxed query leaving because its pending deadline arrived.
    Deadline,
    /// Best-of-effort query leaving on an idle VM cluster.
    VmIdle,
}

/// Owns both pending queues and the set of submitted queries.
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub cfg: SchedulerConfig,
    pub relaxed: PendingQueue,
    pub boe: PendingQueue,
    submitted: BTreeSet<u64>,
}

impl Scheduler {
    pub fn new(cfg: SchedulerConfig) -> Self {
        Self {
            cfg,
            relaxed: PendingQueue::new(QueueKind::Relaxed),
            boe: PendingQueue::new(QueueKind::BestOfEffort),
            submitted: BTreeSet::new(),
        }
    }

    pub fn submit(&mut self, query_id: u64, level: ServiceLevel, now: f64) -> Result<SubmitAction> {
        if !self.submitted.insert(query_id) {
            return Err(Error::Contract(format!("query {query_id} submitted twice")));
        }
        Ok(match effective_level(level, self.cfg.sla) {
            ServiceLevel::Immediate => SubmitAction::CoordinateNow,
            ServiceLevel::Relaxed => {
                self.relaxed.push(query_id, now);
                SubmitAction::Enqueue(QueueKind::Relaxed)
            }
            ServiceLevel::BestOfEffort => {
                self.boe.push(query_id, now);
                SubmitAction::Enqueue(QueueKind::BestOfEffort)
            }
        })
    }

    /// Dequeues the next query that may leave a pending queue right now.
    ///
    /// Best-of-effort is consulted first, then relaxed. The caller must
    /// dispatch the returned query (changing the VM state) before calling
    /// again, so every admission sees the load left by the previous one.
    pub fn next_ready(
        &mut self,
        vm: &VmState,
        vm_cfg: &VmClusterConfig,
        now: f64,
    ) -> Option<(PendingEntry, DequeueCause)> {
        if !poll_boe(&self.boe, vm, vm_cfg).is_empty() {
            return self.boe.pop().map(|e| (e, DequeueCause::VmIdle));
        }
        let head = *self.relaxed.head()?;
        if now >= self.cfg.relaxed_deadline(head.enqueue_time) {
            self.relaxed.pop();
            return Some((head, DequeueCause::Deadline));
        }
        if !vm_is_overloaded(vm, vm_cfg) {
            self.relaxed.pop();
            return Some((head, DequeueCause::VmAvailable));
        }
        None
    }

    pub fn pending(&self) -> usize {
        self.relaxed.len() + self.boe.len()
    }
}
