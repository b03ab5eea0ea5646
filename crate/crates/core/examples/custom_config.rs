//! Overriding defaults through a JSON config: a bigger cluster and a
//! shorter pending limit. Omitted keys keep their defaults.

use std::path::Path;

use flexsla::config::{parse_config, Scenario};
use flexsla::matrix::run_matrix_on;
use flexsla::metrics::Category;

const CONFIG: &str = r#"{
  "seed": 9,
  "vm": { "node_count": 2 },
  "scheduler": { "pending_limit_s": 120, "deadline_slack_s": 5 }
}"#;

fn main() -> flexsla::Result<()> {
    let cfg = parse_config(CONFIG, Path::new("inline.json"))?;
    println!(
        "seed {}, {} VM nodes ({:.0} MB/s), pending limit {} s",
        cfg.seed,
        cfg.vm.node_count,
        cfg.vm.capacity() / flexsla::MB as f64,
        cfg.scheduler.pending_limit_s
    );

    let report = run_matrix_on(&cfg, &cfg.generate_stream()?)?;
    for s in Scenario::MATRIX {
        let m = report.metrics(s);
        println!(
            "{:<10} total ${:<11} relaxed max pending {:.1} s",
            s.name(),
            m.total().cum_cost_usd.to_string(),
            m.row(Category::Relaxed).max_pending_s
        );
    }

    match parse_config(r#"{"scheduler": {"deadline_slack_s": 400}}"#, Path::new("bad.json")) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("slack above the pending limit is invalid"),
    }
    Ok(())
}
