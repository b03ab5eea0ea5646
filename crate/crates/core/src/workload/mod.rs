//! Workload patterns and the merged query stream.
//!
//! Five patterns are modelled after the cloud analytics benchmark shapes:
//! periodic dashboards, ad-hoc analysis during business hours, bursts of
//! manual daily queries, off-peak batch jobs, and regular reports. Each
//! pattern targets its own database and carries its own service-level mix.

mod plan;
mod trace;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::units::GB;

pub use self::plan::{synthesize_plan, PlanConfig, Stage, StagePlan};
pub use self::trace::{read_trace, stream_from_records, write_trace, TraceRecord};

/// Length of the reference day that arrival windows are expressed in.
pub const DAY_S: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Dashboard,
    ManualAdHoc,
    ManualDaily,
    OffPeak,
    RegularReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ServiceLevel {
    #[serde(rename = "immediate")]
    Immediate,
    #[serde(rename = "relaxed")]
    Relaxed,
    #[serde(rename = "boe")]
    BestOfEffort,
}

impl ServiceLevel {
    pub const ALL: [ServiceLevel; 3] = [
        ServiceLevel::Immediate,
        ServiceLevel::Relaxed,
        ServiceLevel::BestOfEffort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ServiceLevel::Immediate => "immediate",
            ServiceLevel::Relaxed => "relaxed",
            ServiceLevel::BestOfEffort => "boe",
        }
    }
}

impl fmt::Display for ServiceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ServiceLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "immediate" => Ok(ServiceLevel::Immediate),
            "relaxed" => Ok(ServiceLevel::Relaxed),
            "boe" => Ok(ServiceLevel::BestOfEffort),
            other => Err(Error::Format(format!("unknown service level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complexity {
    Small,
    Medium,
    Large,
}

impl Complexity {
    pub fn as_str(self) -> &'static str {
        match self {
            Complexity::Small => "small",
            Complexity::Medium => "medium",
            Complexity::Large => "large",
        }
    }
}

impl FromStr for Complexity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Complexity::Small),
            "medium" => Ok(Complexity::Medium),
            "large" => Ok(Complexity::Large),
            other => Err(Error::Format(format!("unknown complexity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaWeight {
    pub level: ServiceLevel,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub pattern: Pattern,
    pub db_id: String,
    pub db_size: u64,
    pub query_count: usize,
    pub sla_mix: Vec<SlaWeight>,
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
    pub complexity: Complexity,
}

fn default_horizon() -> f64 {
    DAY_S
}

impl WorkloadSpec {
    pub fn new(
        pattern: Pattern,
        db_id: &str,
        db_size_gb: u64,
        query_count: usize,
        sla_mix: &[(ServiceLevel, f64)],
        complexity: Complexity,
    ) -> Self {
        Self {
            pattern,
            db_id: db_id.to_string(),
            db_size: db_size_gb * GB,
            query_count,
            sla_mix: sla_mix
                .iter()
                .map(|&(level, weight)| SlaWeight { level, weight })
                .collect(),
            horizon_s: DAY_S,
            complexity,
        }
    }

    /// The five workloads of the reference experiment.
    pub fn table_defaults() -> Vec<WorkloadSpec> {
        use Complexity::*;
        use ServiceLevel::*;
        vec![
            WorkloadSpec::new(
                Pattern::Dashboard,
                "db1",
                10,
                720,
                &[(Relaxed, 3.0), (Immediate, 1.0)],
                Small,
            ),
            WorkloadSpec::new(Pattern::ManualAdHoc, "db2", 30, 34, &[(Immediate, 1.0)], Medium),
            WorkloadSpec::new(
                Pattern::ManualDaily,
                "db3",
                30,
                87,
                &[(Immediate, 2.0), (Relaxed, 1.0)],
                Medium,
            ),
            WorkloadSpec::new(Pattern::OffPeak, "db4", 100, 22, &[(BestOfEffort, 1.0)], Large),
            WorkloadSpec::new(Pattern::RegularReport, "db5", 100, 48, &[(Relaxed, 1.0)], Large),
        ]
    }

    pub(crate) fn violations(&self, out: &mut Vec<String>) {
        let id = &self.db_id;
        if self.db_size == 0 {
            out.push(format!("workload {id}: db_size must be positive"));
        }
        if self.sla_mix.is_empty() {
            out.push(format!("workload {id}: sla_mix must have at least one entry"));
        }
        for w in &self.sla_mix {
            if !(w.weight > 0.0 && w.weight.is_finite()) {
                out.push(format!(
                    "workload {id}: sla weight for {} must be positive, got {}",
                    w.level, w.weight
                ));
            }
        }
        if !(self.horizon_s > 0.0 && self.horizon_s.is_finite()) {
            out.push(format!("workload {id}: horizon_s must be positive"));
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        self.violations(&mut v);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }
}

/// Shape parameters for arrival times and scan sizes. Windows are given in
/// seconds of a reference day and stretched to each workload's horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrivalParams {
    pub dashboard_jitter_s: f64,
    pub business_hours_s: (f64, f64),
    pub daily_burst_times_s: Vec<f64>,
    pub daily_burst_spread_s: f64,
    pub off_peak_window_s: (f64, f64),
    pub dashboard_scan_fraction: (f64, f64),
    pub default_scan_fraction: (f64, f64),
}

impl Default for ArrivalParams {
    fn default() -> Self {
        Self {
            dashboard_jitter_s: 5.0,
            business_hours_s: (9.0 * 3600.0, 18.0 * 3600.0),
            // two-minute bursts around the 07:00, 11:00 and 14:00 reports
            daily_burst_times_s: vec![7.0 * 3600.0 - 60.0, 11.0 * 3600.0 - 60.0, 14.0 * 3600.0 - 60.0],
            daily_burst_spread_s: 120.0,
            off_peak_window_s: (0.0, 900.0),
            dashboard_scan_fraction: (0.05, 0.5),
            default_scan_fraction: (0.4, 1.0),
        }
    }
}

impl ArrivalParams {
    pub(crate) fn violations(&self, out: &mut Vec<String>) {
        let window = |name: &str, (lo, hi): (f64, f64), out: &mut Vec<String>| {
            if !(0.0 <= lo && lo < hi && hi <= DAY_S) {
                out.push(format!(
                    "arrivals.{name} must satisfy 0 <= start < end <= {DAY_S}, got ({lo}, {hi})"
                ));
            }
        };
        window("business_hours_s", self.business_hours_s, out);
        window("off_peak_window_s", self.off_peak_window_s, out);
        if self.dashboard_jitter_s < 0.0 {
            out.push("arrivals.dashboard_jitter_s must be non-negative".into());
        }
        if self.daily_burst_times_s.is_empty() {
            out.push("arrivals.daily_burst_times_s must not be empty".into());
        }
        for &t in &self.daily_burst_times_s {
            if !(0.0..DAY_S).contains(&t) {
                out.push(format!("arrivals.daily_burst_times_s entry {t} outside the day"));
            }
        }
        if !(self.daily_burst_spread_s >= 0.0) {
            out.push("arrivals.daily_burst_spread_s must be non-negative".into());
        }
        for (name, (lo, hi)) in [
            ("dashboard_scan_fraction", self.dashboard_scan_fraction),
            ("default_scan_fraction", self.default_scan_fraction),
        ] {
            if !(0.0 < lo && lo <= hi && hi <= 1.0) {
                out.push(format!(
                    "arrivals.{name} must satisfy 0 < lo <= hi <= 1, got ({lo}, {hi})"
                ));
            }
        }
    }

    fn scan_fraction(&self, pattern: Pattern) -> (f64, f64) {
        match pattern {
            Pattern::Dashboard => self.dashboard_scan_fraction,
            _ => self.default_scan_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Lifecycle {
    pub enqueue_time: Option<f64>,
    pub start_time: Option<f64>,
    pub finish_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: u64,
    pub submit_time: f64,
    pub db_id: String,
    pub scan_bytes: u64,
    pub service_level: ServiceLevel,
    pub complexity: Complexity,
    pub plan: StagePlan,
    #[serde(default)]
    pub lifecycle: Lifecycle,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryStream {
    pub queries: Vec<Query>,
}

impl QueryStream {
    pub fn new(queries: Vec<Query>) -> Self {
        Self { queries }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.queries.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.submit_time < b.submit_time || (a.submit_time == b.submit_time && a.id < b.id)
        })
    }

    /// SHA-256 over every field that influences a simulation. Two streams
    /// with equal hashes drive identical runs.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for q in &self.queries {
            hasher.update(q.id.to_le_bytes());
            hasher.update(q.submit_time.to_bits().to_le_bytes());
            hasher.update(q.db_id.as_bytes());
            hasher.update([0u8]);
            hasher.update(q.scan_bytes.to_le_bytes());
            hasher.update(q.service_level.as_str().as_bytes());
            hasher.update(q.complexity.as_str().as_bytes());
            for s in &q.plan.stages {
                hasher.update(s.input_bytes.to_le_bytes());
            }
            hasher.update([0xffu8]);
        }
        hex::encode(hasher.finalize())
    }

    pub fn count_by_level(&self, level: ServiceLevel) -> usize {
        self.queries.iter().filter(|q| q.service_level == level).count()
    }
}

/// SplitMix64 finaliser, used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub arrivals: ArrivalParams,
    pub plan: PlanConfig,
}

impl Generator {
    pub fn new(arrivals: ArrivalParams, plan: PlanConfig) -> Self {
        Self { arrivals, plan }
    }

    pub fn generate_pattern(&self, spec: &WorkloadSpec, seed: u64) -> Result<QueryStream> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut times = self.arrival_times(spec, &mut rng);
        times.sort_by(f64::total_cmp);

        let (lo, hi) = self.arrivals.scan_fraction(spec.pattern);
        let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
        let total_weight: f64 = spec.sla_mix.iter().map(|w| w.weight).sum();

        let queries = times
            .into_iter()
            .enumerate()
            .map(|(i, submit_time)| {
                let frac = if ln_hi > ln_lo {
                    rng.random_range(ln_lo..ln_hi).exp()
                } else {
                    lo
                };
                let scan_bytes = ((frac * spec.db_size as f64).round() as u64).clamp(1, spec.db_size);
                let service_level = draw_level(&spec.sla_mix, total_weight, &mut rng);
                let plan_seed: u64 = rng.random();
                Query {
                    id: i as u64,
                    submit_time,
                    db_id: spec.db_id.clone(),
                    scan_bytes,
                    service_level,
                    complexity: spec.complexity,
                    plan: synthesize_plan(scan_bytes, spec.complexity, &self.plan, plan_seed),
                    lifecycle: Lifecycle::default(),
                }
            })
            .collect();
        Ok(QueryStream { queries })
    }

    /// Generates every spec with a derived seed and merges the results.
    pub fn generate_all(&self, specs: &[WorkloadSpec], seed: u64) -> Result<QueryStream> {
        let streams = specs
            .iter()
            .enumerate()
            .map(|(i, spec)| self.generate_pattern(spec, derive_seed(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(merge_streams(streams))
    }

    fn arrival_times(&self, spec: &WorkloadSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = spec.query_count;
        let horizon = spec.horizon_s;
        let scale = horizon / DAY_S;
        let last = horizon * (1.0 - f64::EPSILON);
        let a = &self.arrivals;
        let within = |(lo, hi): (f64, f64), rng: &mut ChaCha8Rng| rng.random_range(lo * scale..hi * scale);

        let times: Vec<f64> = match spec.pattern {
            Pattern::Dashboard => {
                let period = horizon / n.max(1) as f64;
                let jitter = a.dashboard_jitter_s;
                (0..n)
                    .map(|i| {
                        let j = if jitter > 0.0 {
                            rng.random_range(-jitter..=jitter)
                        } else {
                            0.0
                        };
                        i as f64 * period + j
                    })
                    .collect()
            }
            Pattern::ManualAdHoc => (0..n).map(|_| within(a.business_hours_s, rng)).collect(),
            Pattern::ManualDaily => {
                let bursts = &a.daily_burst_times_s;
                (0..n)
                    .map(|_| {
                        let b = bursts[rng.random_range(0..bursts.len())] * scale;
                        let offset = if a.daily_burst_spread_s > 0.0 {
                            rng.random_range(0.0..a.daily_burst_spread_s)
                        } else {
                            0.0
                        };
                        b + offset
                    })
                    .collect()
            }
            Pattern::OffPeak => (0..n).map(|_| within(a.off_peak_window_s, rng)).collect(),
            Pattern::RegularReport => {
                let period = horizon / n.max(1) as f64;
                (0..n).map(|i| i as f64 * period).collect()
            }
        };
        times.into_iter().map(|t| t.clamp(0.0, last)).collect()
    }
}

fn draw_level(mix: &[SlaWeight], total: f64, rng: &mut ChaCha8Rng) -> ServiceLevel {
    let mut x = rng.random_range(0.0..total);
    for w in mix {
        if x < w.weight {
            return w.level;
        }
        x -= w.weight;
    }
    mix[mix.len() - 1].level
}

/// Generates one pattern with default arrival and plan parameters.
pub fn generate_pattern(spec: &WorkloadSpec, seed: u64) -> Result<QueryStream> {
    Generator::default().generate_pattern(spec, seed)
}

/// Merges sorted streams into one, ordered by submit time, then input stream
/// index, then position inside the input stream. Ids are reassigned as a
/// global sequence.
pub fn merge_streams(streams: Vec<QueryStream>) -> QueryStream {
    let mut tagged: Vec<(usize, usize, Query)> = streams
        .into_iter()
        .enumerate()
        .flat_map(|(s, stream)| stream.queries.into_iter().enumerate().map(move |(i, q)| (s, i, q)))
        .collect();
    tagged.sort_by(|a, b| {
        a.2.submit_time
            .total_cmp(&b.2.submit_time)
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let queries = tagged
        .into_iter()
        .enumerate()
        .map(|(id, (_, _, mut q))| {
            q.id = id as u64;
            q
        })
        .collect();
    QueryStream { queries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dashboard() -> WorkloadSpec {
        WorkloadSpec::table_defaults().remove(0)
    }

    #[test]
    fn dashboard_counts_and_levels() {
        let s = generate_pattern(&dashboard(), 42).unwrap();
        assert_eq!(s.len(), 720);
        let rel = s.count_by_level(ServiceLevel::Relaxed);
        let imm = s.count_by_level(ServiceLevel::Immediate);
        assert_eq!(rel + imm, 720);
        // 3:1 mix; a binomial(720, 0.75) draw is within 60 of 540 with overwhelming odds
        assert!((480..=600).contains(&rel), "relaxed = {rel}");
        assert!(s.queries.iter().all(|q| q.submit_time >= 0.0 && q.submit_time < DAY_S));
        assert!(s.is_sorted());
    }

    #[test]
    fn dashboard_is_periodic_with_jitter() {
        let s = generate_pattern(&dashboard(), 3).unwrap();
        for (i, q) in s.queries.iter().enumerate().skip(1).take(700) {
            let nominal = i as f64 * 120.0;
            assert!(
                (q.submit_time - nominal).abs() <= 5.0 + 1e-9,
                "query {i} at {}",
                q.submit_time
            );
        }
    }

    #[test]
    fn off_peak_is_all_boe_inside_window() {
        let spec = WorkloadSpec::table_defaults().remove(3);
        let s = generate_pattern(&spec, 9).unwrap();
        assert_eq!(s.len(), 22);
        for q in &s.queries {
            assert_eq!(q.service_level, ServiceLevel::BestOfEffort);
            assert!(q.submit_time >= 0.0 && q.submit_time < 6.0 * 3600.0);
            assert!(q.scan_bytes <= 100 * GB);
        }
    }

    #[test]
    fn zero_count_gives_empty_stream() {
        let mut spec = dashboard();
        spec.query_count = 0;
        assert!(generate_pattern(&spec, 1).unwrap().is_empty());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = dashboard();
        spec.sla_mix.clear();
        assert!(matches!(generate_pattern(&spec, 1), Err(Error::Invalid(_))));
        let mut spec = dashboard();
        spec.db_size = 0;
        spec.sla_mix[0].weight = -1.0;
        match generate_pattern(&spec, 1) {
            Err(Error::Invalid(v)) => assert_eq!(v.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn regular_reports_are_evenly_spaced() {
        let spec = WorkloadSpec::table_defaults().remove(4);
        let s = generate_pattern(&spec, 5).unwrap();
        for (i, q) in s.queries.iter().enumerate() {
            assert_eq!(q.submit_time, i as f64 * 1800.0);
        }
    }

    #[test]
    fn manual_daily_clusters_in_bursts() {
        let spec = WorkloadSpec::table_defaults().remove(2);
        let a = ArrivalParams::default();
        let s = generate_pattern(&spec, 5).unwrap();
        for q in &s.queries {
            assert!(a
                .daily_burst_times_s
                .iter()
                .any(|&b| q.submit_time >= b && q.submit_time < b + a.daily_burst_spread_s));
        }
    }

    #[test]
    fn table_stream_has_911_queries() {
        let s = Generator::default()
            .generate_all(&WorkloadSpec::table_defaults(), 42)
            .unwrap();
        assert_eq!(s.len(), 720 + 34 + 87 + 22 + 48);
        assert_eq!(s.len(), 911);
        assert!(s.is_sorted());
        for (i, q) in s.queries.iter().enumerate() {
            assert_eq!(q.id, i as u64);
        }
    }

    #[test]
    fn merge_empty() {
        assert!(merge_streams(vec![]).is_empty());
    }

    #[test]
    fn merge_ties_follow_stream_index() {
        let mk = |db: &str| Query {
            id: 0,
            submit_time: 10.0,
            db_id: db.into(),
            scan_bytes: 1,
            service_level: ServiceLevel::Immediate,
            complexity: Complexity::Small,
            plan: StagePlan::from_inputs([1]),
            lifecycle: Lifecycle::default(),
        };
        let run = || merge_streams(vec![QueryStream::new(vec![mk("a")]), QueryStream::new(vec![mk("b")])]);
        let m = run();
        assert_eq!(m.queries[0].db_id, "a");
        assert_eq!(m.queries[1].db_id, "b");
        assert_eq!((m.queries[0].id, m.queries[1].id), (0, 1));
        assert_eq!(m, run());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
    }
}
