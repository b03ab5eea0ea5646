//! The four-scenario comparison written to a directory.
//!
//!     cargo run --example scenario_matrix -- [out_dir] [seed]

use flexsla::config::ScenarioConfig;
use flexsla::matrix::OutputOptions;
use flexsla::run_matrix;

fn main() -> flexsla::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "matrix-out".into()));
    let cfg = ScenarioConfig {
        seed: args.next().map_or(42, |s| s.parse().expect("seed must be an integer")),
        ..ScenarioConfig::default()
    };
    let report = run_matrix(
        &cfg,
        &out,
        OutputOptions {
            trace: true,
            ..OutputOptions::default()
        },
    )?;

    println!("workload {} (seed {})", report.workload_hash, report.seed);
    for o in &report.outcomes {
        let t = o.metrics.total();
        println!(
            "  {:<10} cost ${:<11} exec {:>9.0} s",
            o.name,
            t.cum_cost_usd.to_string(),
            t.cum_exec_s
        );
    }
    for (name, c) in &report.comparison.variants {
        println!(
            "  {name:<10} vs {}: cost {:+.1}%, immediate cost {:+.1}%",
            report.comparison.baseline,
            c.total.cost_delta_pct.unwrap_or(f64::NAN),
            c.immediate.cost_delta_pct.unwrap_or(f64::NAN)
        );
    }
    println!("files in {}", out.display());
    for f in &report.failures {
        eprintln!("failed check: {f}");
    }
    Ok(())
}
