use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    QueryArrival,
    RelaxedDeadline,
    VmCompletion,
    CfStageDone,
    QueryDone,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
    pub query_id: u64,
    pub stage: Option<usize>,
}

impl Event {
    pub fn key(&self) -> EventKey {
        EventKey {
            time: self.time,
            seq: self.seq,
        }
    }
}

/// Total order on events: time first, creation sequence second.
#[derive(Debug, Clone, Copy)]
pub struct EventKey {
    pub time: f64,
    pub seq: u64,
}

impl PartialEq for EventKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for EventKey {}

impl PartialOrd for EventKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EventKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

/// Ordered event set with cancellation. Sequence numbers are handed out at
/// insertion and never reused.
#[derive(Debug, Default)]
pub struct EventQueue {
    events: BTreeMap<EventKey, Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, kind: EventKind, query_id: u64, stage: Option<usize>) -> EventKey {
        let ev = Event {
            time,
            seq: self.next_seq,
            kind,
            query_id,
            stage,
        };
        self.next_seq += 1;
        let key = ev.key();
        self.events.insert(key, ev);
        key
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.events.pop_first().map(|(_, ev)| ev)
    }

    pub fn peek(&self) -> Option<&Event> {
        self.events.first_key_value().map(|(_, ev)| ev)
    }

    pub fn cancel(&mut self, key: EventKey) -> Option<Event> {
        self.events.remove(&key)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
