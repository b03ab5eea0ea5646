//! Generates the default one-day stream and shows its shape.
//!
//!     cargo run --example workload_stream -- [seed] [export.csv]

use std::collections::BTreeMap;

use flexsla::config::ScenarioConfig;
use flexsla::workload::{read_trace, write_trace};
use flexsla::ServiceLevel;

fn main() -> flexsla::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = ScenarioConfig {
        seed: args.next().map_or(42, |s| s.parse().expect("seed must be an integer")),
        ..ScenarioConfig::default()
    };
    let stream = cfg.generate_stream()?;
    println!(
        "seed {} -> {} queries, hash {}",
        cfg.seed,
        stream.len(),
        stream.content_hash()
    );
    for level in ServiceLevel::ALL {
        println!("  {:<9} {}", level.as_str(), stream.count_by_level(level));
    }

    let mut per_db: BTreeMap<&str, (usize, u64)> = BTreeMap::new();
    let mut per_hour = [0usize; 24];
    for q in &stream.queries {
        let e = per_db.entry(&q.db_id).or_default();
        e.0 += 1;
        e.1 += q.plan.total_work();
        per_hour[(q.submit_time / 3600.0) as usize % 24] += 1;
    }
    for (db, (n, work)) in &per_db {
        println!(
            "  {db}: {n:>4} queries, {:>8.1} GB of plan work",
            *work as f64 / flexsla::GB as f64
        );
    }
    println!("arrivals per hour:");
    for (h, n) in per_hour.iter().enumerate() {
        println!("  {h:02}:00 {n:>4} {}", "#".repeat(n / 4));
    }

    if let Some(path) = args.next() {
        let path = std::path::PathBuf::from(path);
        write_trace(&stream, &path)?;
        let back = read_trace(&path, &cfg.workload.plan, cfg.seed)?;
        println!(
            "exported to {} and re-imported, hash {}",
            path.display(),
            back.content_hash()
        );
    }
    Ok(())
}
