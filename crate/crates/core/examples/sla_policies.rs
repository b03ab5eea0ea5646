//! How Force and Auto route the same small burst, with and without flexible
//! SLAs. The cluster counts as overloaded at two running queries.

use flexsla::engine::{run_scenario, SimConfig};
use flexsla::scheduler::{Policy, SlaMode};
use flexsla::workload::{synthesize_plan, Complexity, Lifecycle, PlanConfig};
use flexsla::{Query, QueryStream, ServiceLevel, GB};

fn main() -> flexsla::Result<()> {
    use ServiceLevel::*;
    let burst = [
        (0.0, Immediate, 4),
        (1.0, Relaxed, 8),
        (2.0, Immediate, 2),
        (3.0, BestOfEffort, 6),
        (4.0, Relaxed, 1),
        (5.0, Immediate, 3),
    ];
    let stream = QueryStream::new(
        burst
            .iter()
            .enumerate()
            .map(|(i, &(t, level, gb))| Query {
                id: i as u64,
                submit_time: t,
                db_id: "demo".into(),
                scan_bytes: gb * GB,
                service_level: level,
                complexity: Complexity::Medium,
                plan: synthesize_plan(gb * GB, Complexity::Medium, &PlanConfig::default(), i as u64),
                lifecycle: Lifecycle::default(),
            })
            .collect(),
    );

    for (policy, sla) in [
        (Policy::Auto, SlaMode::Disabled),
        (Policy::Auto, SlaMode::Enabled),
        (Policy::Force, SlaMode::Enabled),
    ] {
        let mut cfg = SimConfig::nominal();
        cfg.vm.overload_threshold = 2;
        cfg.vm.per_vcpu_throughput_mb_s = 10.0;
        cfg.scheduler.policy = policy;
        cfg.scheduler.sla = sla;
        let r = run_scenario(&cfg, &stream)?;
        println!("\n{policy:?} with sla {sla:?}");
        for q in &r.records {
            println!(
                "  q{} {:<9} -> {:<3} pending {:>6.1} s  exec {:>7.1} s  ${}",
                q.id,
                q.submitted_level.as_str(),
                q.target.map_or("-".into(), |t| t.to_string()),
                q.pending_time().unwrap_or(0.0),
                q.exec_time().unwrap_or(0.0),
                q.cost()
            );
        }
    }
    Ok(())
}
