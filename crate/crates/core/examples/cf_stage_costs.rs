//! Stage waves on the cloud-function pool and what they cost next to the
//! same work on the VM cluster.
//!
//!     cargo run --example cf_stage_costs -- [scan_gb]

use flexsla::resources::{cf_cost, cf_schedule_stage, unit_price_ratio, vm_cost, CfPoolConfig, VmClusterConfig};
use flexsla::workload::{synthesize_plan, Complexity, PlanConfig};
use flexsla::GB;

fn main() -> flexsla::Result<()> {
    let scan_gb: f64 = std::env::args()
        .nth(1)
        .map_or(40.0, |s| s.parse().expect("scan_gb must be a number"));
    let (vm, cf) = (VmClusterConfig::default(), CfPoolConfig::default());
    println!("CF/VM per-byte price ratio {:.1}", unit_price_ratio(&vm, &cf));

    for complexity in [Complexity::Small, Complexity::Medium, Complexity::Large] {
        let plan = synthesize_plan((scan_gb * GB as f64) as u64, complexity, &PlanConfig::default(), 1);
        println!("\n{complexity:?} plan, {} stages", plan.len());
        let (mut secs, mut usd) = (0.0, 0.0);
        for stage in &plan.stages {
            let e = cf_schedule_stage(stage.input_bytes, &cf)?;
            let c = cf_cost(&e, &cf);
            println!(
                "  stage {}: {:>10.3} GB -> {:>3} workers x {:>8.1} MB, {:>7.2} s, {:>8.1} GB-s, ${c:.4}",
                stage.index,
                stage.input_bytes as f64 / GB as f64,
                e.worker_count,
                e.per_worker_bytes as f64 / flexsla::MB as f64,
                e.duration_s,
                e.gb_seconds
            );
            secs += e.duration_s;
            usd += c;
        }
        let alone = plan.total_work() as f64 / vm.capacity();
        println!(
            "  CF: {secs:.1} s, ${usd:.4}   VM alone: {alone:.1} s, ${:.4}",
            vm_cost(plan.total_work() as f64, &vm)
        );
    }
    Ok(())
}
