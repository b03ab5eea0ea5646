//! One scenario on the default workload, summarized per service level.
//!
//!     cargo run --example single_scenario -- [auto_nosla|auto_sla|force_sla|pure_cf] [seed]

use flexsla::config::{Scenario, ScenarioConfig};
use flexsla::metrics::Category;
use flexsla::{run_scenario, summarize};

fn main() -> flexsla::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("auto_sla").parse()?;
    let cfg = ScenarioConfig {
        seed: args.next().map_or(42, |s| s.parse().expect("seed must be an integer")),
        ..ScenarioConfig::default()
    };
    let stream = cfg.generate_stream()?;
    let result = run_scenario(&cfg.sim_config(scenario), &stream)?;
    let m = summarize(&result)?;

    println!(
        "{} seed {} ({} events, peak {} queries on the VM)",
        scenario.name(),
        cfg.seed,
        result.events_processed,
        result.max_vm_running
    );
    for c in [Category::Immediate, Category::Relaxed, Category::Boe, Category::Total] {
        let r = m.row(c);
        println!(
            "  {:<9} {:>4} queries  exec {:>9.0} s  cost ${:<11}  pending max {:>5.1} s mean {:>5.1} s",
            c.as_str(),
            r.count,
            r.cum_exec_s,
            r.cum_cost_usd.to_string(),
            r.max_pending_s,
            r.mean_pending_s
        );
    }
    println!(
        "  idle VM ${}, ledger total ${}",
        m.idle_vm_cost_usd,
        result.ledger.total()
    );
    if !result.violations.is_empty() {
        eprintln!("violations: {:#?}", result.violations);
    }
    Ok(())
}
