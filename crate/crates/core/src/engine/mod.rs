//! The discrete-event simulation loop.
//!
//! One [`Simulation`] owns the clock, the event queue, the VM
//! processor-sharing state, in-flight CF stage chains, both pending queues
//! and the cost ledger. Events are handled strictly one at a time in
//! `(time, seq)` order; after each event the pending queues are re-polled at
//! the same instant.

mod event;
mod trace;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CostLedger;
use crate::resources::{
    cf_cost, cf_schedule_stage, vm_cost, vm_rates, CfPoolConfig, StageExecution, VmClusterConfig, VmState,
};
use crate::scheduler::{
    coordinate, effective_level, DequeueCause, Policy, QueueKind, RouteReason, RoutingDecision, Scheduler,
    SchedulerConfig, SlaMode, SubmitAction, Target,
};
use crate::units::Money;
use crate::workload::{Query, QueryStream, ServiceLevel};

pub use self::event::{Event, EventKey, EventKind, EventQueue};
pub use self::trace::{write_trace_ndjson, LogRecord};

/// Whether the coordinator picks a substrate or everything goes to the CF pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingMode {
    Coordinated,
    CfOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub vm: VmClusterConfig,
    pub cf: CfPoolConfig,
    pub scheduler: SchedulerConfig,
    pub routing: RoutingMode,
    pub horizon_s: f64,
    /// The run fails if any event lands beyond `quiescence_factor * horizon_s`.
    pub quiescence_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            vm: VmClusterConfig::default(),
            cf: CfPoolConfig::default(),
            scheduler: SchedulerConfig::default(),
            routing: RoutingMode::Coordinated,
            horizon_s: crate::workload::DAY_S,
            quiescence_factor: 10.0,
        }
    }
}

impl SimConfig {
    /// Coordinated routing on the nominal (uncalibrated) substrates.
    pub fn nominal() -> Self {
        Self {
            vm: VmClusterConfig::nominal(),
            cf: CfPoolConfig::nominal(),
            ..Self::default()
        }
    }
}

/// Lifecycle and cost of one query after a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: u64,
    pub db_id: String,
    pub submitted_level: ServiceLevel,
    pub effective_level: ServiceLevel,
    pub work_bytes: u64,
    pub target: Option<Target>,
    pub submit_time: f64,
    pub enqueue_time: Option<f64>,
    pub start_time: Option<f64>,
    pub finish_time: Option<f64>,
    pub vm_cost: Money,
    pub cf_cost: Money,
}

impl QueryRecord {
    pub fn pending_time(&self) -> Option<f64> {
        self.start_time
            .map(|s| s - self.enqueue_time.unwrap_or(self.submit_time))
    }

    pub fn exec_time(&self) -> Option<f64> {
        Some(self.finish_time? - self.start_time?)
    }

    pub fn cost(&self) -> Money {
        self.vm_cost + self.cf_cost
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub workload_hash: String,
    pub records: Vec<QueryRecord>,
    pub ledger: CostLedger,
    pub log: Vec<LogRecord>,
    /// Invariant violations observed during or after the run. Empty on a clean run.
    pub violations: Vec<String>,
    pub horizon_s: f64,
    pub end_time: f64,
    pub idle_vm_time: f64,
    /// Integral of assigned VM rates over time.
    pub vm_served_bytes: f64,
    /// Work of all queries that completed on the VM cluster.
    pub vm_completed_work: f64,
    pub arrivals: usize,
    pub completions: usize,
    pub events_processed: u64,
    pub rate_checks: u64,
    pub max_vm_running: usize,
}

struct CfProgress {
    stage: usize,
    current: StageExecution,
    cost_usd: f64,
}

pub struct Simulation {
    cfg: SimConfig,
    workload_hash: String,
    capacity: f64,
    clock: f64,
    events: EventQueue,
    vm: VmState,
    vm_completion: Option<EventKey>,
    cf_inflight: BTreeMap<u64, CfProgress>,
    deadlines: BTreeMap<u64, EventKey>,
    scheduler: Scheduler,
    ledger: CostLedger,
    queries: Vec<Query>,
    index: BTreeMap<u64, usize>,
    records: Vec<QueryRecord>,
    log: Vec<LogRecord>,
    violations: Vec<String>,
    idle_vm_time: f64,
    vm_served_bytes: f64,
    vm_completed_work: f64,
    arrivals: usize,
    completions: usize,
    events_processed: u64,
    rate_checks: u64,
    max_vm_running: usize,
}

impl Simulation {
    pub fn new(cfg: SimConfig, stream: &QueryStream) -> Result<Self> {
        let mut events = EventQueue::new();
        let mut index = BTreeMap::new();
        let mut records = Vec::with_capacity(stream.len());
        for (i, q) in stream.queries.iter().enumerate() {
            if index.insert(q.id, i).is_some() {
                return Err(Error::Contract(format!("duplicate query id {}", q.id)));
            }
            if q.plan.is_empty() {
                return Err(Error::Contract(format!("query {} has an empty plan", q.id)));
            }
            if !(q.submit_time.is_finite() && q.submit_time >= 0.0) {
                return Err(Error::Contract(format!("query {} has an invalid submit time", q.id)));
            }
            events.push(q.submit_time, EventKind::QueryArrival, q.id, None);
            records.push(QueryRecord {
                id: q.id,
                db_id: q.db_id.clone(),
                submitted_level: q.service_level,
                effective_level: effective_level(q.service_level, cfg.scheduler.sla),
                work_bytes: q.plan.total_work(),
                target: None,
                submit_time: q.submit_time,
                enqueue_time: None,
                start_time: None,
                finish_time: None,
                vm_cost: Money::ZERO,
                cf_cost: Money::ZERO,
            });
        }
        Ok(Self {
            workload_hash: stream.content_hash(),
            capacity: cfg.vm.capacity(),
            scheduler: Scheduler::new(cfg.scheduler.clone()),
            cfg,
            clock: 0.0,
            events,
            vm: VmState::default(),
            vm_completion: None,
            cf_inflight: BTreeMap::new(),
            deadlines: BTreeMap::new(),
            ledger: CostLedger::default(),
            queries: stream.queries.clone(),
            index,
            records,
            log: Vec::new(),
            violations: Vec::new(),
            idle_vm_time: 0.0,
            vm_served_bytes: 0.0,
            vm_completed_work: 0.0,
            arrivals: 0,
            completions: 0,
            events_processed: 0,
            rate_checks: 0,
            max_vm_running: 0,
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn vm_state(&self) -> &VmState {
        &self.vm
    }

    pub fn is_quiescent(&self) -> bool {
        self.events.is_empty()
    }

    /// Processes the earliest pending event.
    pub fn step(&mut self) -> Result<Event> {
        let ev = self
            .events
            .pop()
            .ok_or_else(|| Error::Contract("step called on an empty event queue".into()))?;
        let limit = self.cfg.quiescence_factor * self.cfg.horizon_s;
        if ev.time > limit {
            return Err(Error::NonQuiescent(format!(
                "{} for query {} at t={} exceeds the event horizon {limit}",
                ev.kind, ev.query_id, ev.time
            )));
        }
        if ev.time < self.clock {
            self.violations.push(format!(
                "event seq {} at t={} precedes clock {}",
                ev.seq, ev.time, self.clock
            ));
        }
        self.advance_to(ev.time);
        self.events_processed += 1;

        match ev.kind {
            EventKind::QueryArrival => self.on_arrival(&ev)?,
            EventKind::RelaxedDeadline => {
                self.deadlines.remove(&ev.query_id);
                self.record(&ev, String::new());
            }
            EventKind::VmCompletion => self.on_vm_completion(&ev),
            EventKind::CfStageDone => self.on_cf_stage_done(&ev)?,
            EventKind::QueryDone => self.on_query_done(&ev)?,
        }

        self.drain_pending(ev.seq)?;
        self.check_rates();
        Ok(ev)
    }

    /// Runs to quiescence and finalizes accounting.
    pub fn run(mut self) -> Result<SimResult> {
        while !self.events.is_empty() {
            self.step()?;
        }
        Ok(self.finish())
    }

    fn advance_to(&mut self, t: f64) {
        if t <= self.clock {
            return;
        }
        if self.vm.is_empty() {
            self.idle_vm_time += t - self.clock;
        }
        self.vm_served_bytes += self.vm.advance(t, self.capacity);
        self.clock = t;
    }

    fn record(&mut self, ev: &Event, detail: String) {
        self.log.push(LogRecord {
            time: ev.time,
            seq: ev.seq,
            kind: ev.kind.to_string(),
            query_id: Some(ev.query_id),
            detail,
        });
    }

    fn note(&mut self, seq: u64, kind: &str, query_id: u64, detail: String) {
        self.log.push(LogRecord {
            time: self.clock,
            seq,
            kind: kind.to_string(),
            query_id: Some(query_id),
            detail,
        });
    }

    fn slot(&self, query_id: u64) -> Result<usize> {
        self.index
            .get(&query_id)
            .copied()
            .ok_or_else(|| Error::Contract(format!("unknown query {query_id}")))
    }

    fn on_arrival(&mut self, ev: &Event) -> Result<()> {
        let i = self.slot(ev.query_id)?;
        self.arrivals += 1;
        let level = self.queries[i].service_level;
        self.record(ev, format!("level={level}"));
        match self.scheduler.submit(ev.query_id, level, self.clock)? {
            SubmitAction::CoordinateNow => self.dispatch(ev.seq, i),
            SubmitAction::Enqueue(kind) => {
                self.records[i].enqueue_time = Some(self.clock);
                let queue = match kind {
                    QueueKind::Relaxed => {
                        let due = self.scheduler.cfg.relaxed_deadline(self.clock);
                        let key = self.events.push(due, EventKind::RelaxedDeadline, ev.query_id, None);
                        self.deadlines.insert(ev.query_id, key);
                        "relaxed"
                    }
                    QueueKind::BestOfEffort => "boe",
                };
                self.note(ev.seq, "Enqueued", ev.query_id, format!("queue={queue}"));
                Ok(())
            }
        }
    }

    fn drain_pending(&mut self, seq: u64) -> Result<()> {
        while let Some((entry, cause)) = self.scheduler.next_ready(&self.vm, &self.cfg.vm, self.clock) {
            if let Some(key) = self.deadlines.remove(&entry.query_id) {
                self.events.cancel(key);
            }
            let (reason, why) = match cause {
                DequeueCause::VmAvailable => (RouteReason::DequeuedRelaxed, "vm_available"),
                DequeueCause::Deadline => (RouteReason::DequeuedRelaxed, "deadline"),
                DequeueCause::VmIdle => (RouteReason::DequeuedBoE, "vm_idle"),
            };
            self.note(
                seq,
                "Dequeued",
                entry.query_id,
                format!("reason={reason} cause={why} waited={}", self.clock - entry.enqueue_time),
            );
            let i = self.slot(entry.query_id)?;
            self.dispatch(seq, i)?;
        }
        Ok(())
    }

    fn dispatch(&mut self, seq: u64, i: usize) -> Result<()> {
        let id = self.queries[i].id;
        let decision = match self.cfg.routing {
            RoutingMode::CfOnly => RoutingDecision {
                target: Target::CfPool,
                reason: RouteReason::CfOnly,
            },
            RoutingMode::Coordinated => coordinate(
                self.records[i].effective_level,
                &self.vm,
                &self.cfg.vm,
                self.cfg.scheduler.policy,
            ),
        };
        self.note(
            seq,
            "Routed",
            id,
            format!(
                "target={} reason={} vm_running={}",
                decision.target,
                decision.reason,
                self.vm.len()
            ),
        );
        self.records[i].target = Some(decision.target);
        self.records[i].start_time = Some(self.clock);
        match decision.target {
            Target::VmCluster => {
                let work = self.records[i].work_bytes as f64;
                self.vm.admit(id, work, self.clock);
                self.max_vm_running = self.max_vm_running.max(self.vm.len());
                self.reschedule_vm();
            }
            Target::CfPool => self.start_cf_stage(i, 0, 0.0)?,
        }
        Ok(())
    }

    fn reschedule_vm(&mut self) {
        if let Some(key) = self.vm_completion.take() {
            self.events.cancel(key);
        }
        if let Some((id, t)) = self.vm.next_completion(self.capacity) {
            let key = self.events.push(t.max(self.clock), EventKind::VmCompletion, id, None);
            self.vm_completion = Some(key);
        }
    }

    fn start_cf_stage(&mut self, i: usize, stage: usize, cost_usd: f64) -> Result<()> {
        let id = self.queries[i].id;
        let input = self.queries[i].plan.stages[stage].input_bytes;
        let mut exec = cf_schedule_stage(input, &self.cfg.cf)?;
        exec.stage_index = stage;
        self.events
            .push(self.clock + exec.duration_s, EventKind::CfStageDone, id, Some(stage));
        self.cf_inflight.insert(
            id,
            CfProgress {
                stage,
                current: exec,
                cost_usd,
            },
        );
        Ok(())
    }

    fn on_vm_completion(&mut self, ev: &Event) {
        self.vm_completion = None;
        match self.vm.remove(ev.query_id) {
            Some(entry) => {
                if entry.remaining_work > 1.0 {
                    self.violations.push(format!(
                        "query {} left the VM with {} bytes outstanding",
                        ev.query_id, entry.remaining_work
                    ));
                }
                if let Ok(i) = self.slot(ev.query_id) {
                    self.vm_completed_work += self.records[i].work_bytes as f64;
                }
                self.events.push(self.clock, EventKind::QueryDone, ev.query_id, None);
            }
            None => self
                .violations
                .push(format!("VM completion for query {} which is not running", ev.query_id)),
        }
        let running = self.vm.len();
        self.record(ev, format!("vm_running={running}"));
        self.reschedule_vm();
    }

    fn on_cf_stage_done(&mut self, ev: &Event) -> Result<()> {
        let i = self.slot(ev.query_id)?;
        let progress = self
            .cf_inflight
            .remove(&ev.query_id)
            .ok_or_else(|| Error::Contract(format!("no CF stage in flight for query {}", ev.query_id)))?;
        let c = &progress.current;
        let cost = progress.cost_usd + cf_cost(c, &self.cfg.cf);
        self.record(
            ev,
            format!(
                "stage={} workers={} duration={} gb_s={}",
                progress.stage, c.worker_count, c.duration_s, c.gb_seconds
            ),
        );
        let next = progress.stage + 1;
        if next < self.queries[i].plan.len() {
            self.start_cf_stage(i, next, cost)?;
        } else {
            self.records[i].cf_cost = Money::from_usd(cost);
            self.events.push(self.clock, EventKind::QueryDone, ev.query_id, None);
        }
        Ok(())
    }

    fn on_query_done(&mut self, ev: &Event) -> Result<()> {
        let i = self.slot(ev.query_id)?;
        let rec = &mut self.records[i];
        rec.finish_time = Some(self.clock);
        if rec.target == Some(Target::VmCluster) {
            rec.vm_cost = Money::from_usd(vm_cost(rec.work_bytes as f64, &self.cfg.vm));
        }
        let (vm, cf, target) = (rec.vm_cost, rec.cf_cost, rec.target);
        self.ledger.record(ev.query_id, vm, cf)?;
        self.completions += 1;
        let target = target.map_or_else(|| "none".to_string(), |t| t.to_string());
        self.record(ev, format!("target={target} vm_cost={vm} cf_cost={cf}"));
        Ok(())
    }

    fn check_rates(&mut self) {
        if self.vm.is_empty() {
            return;
        }
        self.rate_checks += 1;
        let total: f64 = vm_rates(&self.vm, &self.cfg.vm).values().sum();
        if (total - self.capacity).abs() > 1e-12 * self.capacity {
            self.violations.push(format!(
                "t={}: VM rates sum to {total}, capacity is {}",
                self.clock, self.capacity
            ));
        }
    }

    /// Closes idle accounting at the horizon and runs the end-of-run checks.
    /// Call once the event queue is empty; see [`Simulation::run`].
    pub fn finish(mut self) -> SimResult {
        let horizon = self.cfg.horizon_s;
        if self.clock < horizon {
            if self.vm.is_empty() {
                self.idle_vm_time += horizon - self.clock;
            }
            self.clock = horizon;
        }
        self.ledger.idle_vm_cost = Money::from_usd(self.idle_vm_time * self.cfg.vm.cluster_price_per_s());
        self.check_final();
        SimResult {
            workload_hash: self.workload_hash,
            records: self.records,
            ledger: self.ledger,
            log: self.log,
            violations: self.violations,
            horizon_s: horizon,
            end_time: self.clock,
            idle_vm_time: self.idle_vm_time,
            vm_served_bytes: self.vm_served_bytes,
            vm_completed_work: self.vm_completed_work,
            arrivals: self.arrivals,
            completions: self.completions,
            events_processed: self.events_processed,
            rate_checks: self.rate_checks,
            max_vm_running: self.max_vm_running,
        }
    }

    fn check_final(&mut self) {
        let v = &mut self.violations;
        if self.arrivals != self.completions || self.completions != self.records.len() {
            v.push(format!(
                "{} queries, {} arrivals, {} completions",
                self.records.len(),
                self.arrivals,
                self.completions
            ));
        }
        if self.scheduler.pending() != 0 || !self.vm.is_empty() || !self.cf_inflight.is_empty() {
            v.push("queries left pending or running at quiescence".into());
        }
        let work = self.vm_completed_work;
        if (self.vm_served_bytes - work).abs() > 1e-6 * work.max(1.0) {
            v.push(format!(
                "VM served {} bytes but completed work totals {work}",
                self.vm_served_bytes
            ));
        }
        let limit = self.cfg.scheduler.pending_limit_s;
        let sla_on = self.cfg.scheduler.sla == SlaMode::Enabled;
        let force = self.cfg.scheduler.policy == Policy::Force && self.cfg.routing == RoutingMode::Coordinated;
        for r in &self.records {
            let (Some(start), Some(finish)) = (r.start_time, r.finish_time) else {
                v.push(format!("query {} never finished", r.id));
                continue;
            };
            if !(r.submit_time <= start && start <= finish) {
                v.push(format!(
                    "query {}: submit {} start {start} finish {finish} out of order",
                    r.id, r.submit_time
                ));
            }
            let pending = r.pending_time().unwrap_or(0.0);
            match r.effective_level {
                ServiceLevel::Immediate if pending != 0.0 => {
                    v.push(format!("immediate query {} pended {pending} s", r.id));
                }
                ServiceLevel::Relaxed if sla_on && pending > limit => {
                    v.push(format!("relaxed query {} pended {pending} s > {limit} s", r.id));
                }
                _ => {}
            }
            if force && sla_on && r.effective_level != ServiceLevel::Immediate && r.target == Some(Target::CfPool) {
                v.push(format!("query {} ({}) ran on CF under Force", r.id, r.effective_level));
            }
        }
        let sum: Money = self.ledger.entries.values().map(|e| e.vm_cost + e.cf_cost).sum();
        if sum + self.ledger.idle_vm_cost != self.ledger.total() {
            v.push("ledger total differs from entries plus idle cost".into());
        }
    }
}

/// Simulates `stream` to quiescence under `cfg`.
pub fn run_scenario(cfg: &SimConfig, stream: &QueryStream) -> Result<SimResult> {
    Simulation::new(cfg.clone(), stream)?.run()
}
