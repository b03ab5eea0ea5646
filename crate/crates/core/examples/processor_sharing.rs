//! The VM cluster as a processor-sharing queue: two jobs on the nominal
//! 3.2 GB/s cluster, traced by hand and then through the engine.

use flexsla::engine::{run_scenario, SimConfig};
use flexsla::resources::{vm_rates, VmClusterConfig, VmState};
use flexsla::workload::{Complexity, Lifecycle, StagePlan};
use flexsla::{Query, QueryStream, ServiceLevel, MB};

fn query(id: u64, t: f64, mb: u64) -> Query {
    Query {
        id,
        submit_time: t,
        db_id: "demo".into(),
        scan_bytes: mb * MB,
        service_level: ServiceLevel::Immediate,
        complexity: Complexity::Small,
        plan: StagePlan::from_inputs([mb * MB]),
        lifecycle: Lifecycle::default(),
    }
}

fn main() -> flexsla::Result<()> {
    let cfg = VmClusterConfig::nominal();
    let cap = cfg.capacity();
    let mut vm = VmState::default();

    vm.admit(1, (3200 * MB) as f64, 0.0);
    println!(
        "t=0.0  q1 alone, rate {:.0} MB/s, would finish at {:?}",
        cap / MB as f64,
        vm.next_completion(cap)
    );
    vm.advance(0.5, cap);
    vm.admit(2, (1600 * MB) as f64, 0.5);
    for (id, r) in vm_rates(&vm, &cfg) {
        println!("t=0.5  q{id} rate {:.0} MB/s", r / MB as f64);
    }
    println!("next completion {:?}", vm.next_completion(cap));

    let stream = QueryStream::new(vec![query(0, 0.0, 3200), query(1, 0.5, 1600)]);
    let r = run_scenario(&SimConfig::nominal(), &stream)?;
    for rec in &r.log {
        println!(
            "{:>8.3} {:<12} q{:<2} {}",
            rec.time,
            rec.kind,
            rec.query_id.map_or(-1, |q| q as i64),
            rec.detail
        );
    }
    Ok(())
}
