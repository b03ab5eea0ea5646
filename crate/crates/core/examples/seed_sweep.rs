//! Cost reductions against the auto_nosla baseline across many seeds.
//!
//!     cargo run --release --example seed_sweep -- [first_seed] [count]

use flexsla::config::ScenarioConfig;
use flexsla::matrix::run_matrix_on;

fn main() -> flexsla::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("arguments must be integers"));
    let first = args.next().unwrap_or(42);
    let count = args.next().unwrap_or(20);
    let mut cfg = ScenarioConfig::default();
    let (mut in_band, mut sum_force, mut sum_auto) = (0, 0.0, 0.0);
    for seed in first..first + count {
        cfg.seed = seed;
        let report = run_matrix_on(&cfg, &cfg.generate_stream()?)?;
        let v = &report.comparison.variants;
        let force = -v["force_sla"].total.cost_delta_pct.unwrap_or(0.0);
        let auto = -v["auto_sla"].total.cost_delta_pct.unwrap_or(0.0);
        let ok = (50.0..=80.0).contains(&force) && (10.0..=35.0).contains(&auto);
        in_band += ok as u32;
        sum_force += force;
        sum_auto += auto;
        println!(
            "seed {seed:>4}: force_sla -{force:.1}%  auto_sla -{auto:.1}%{}",
            if ok { "" } else { "  (outside band)" }
        );
    }
    let n = count as f64;
    println!(
        "mean reduction force_sla {:.1}%, auto_sla {:.1}%; {in_band}/{count} seeds in band",
        sum_force / n,
        sum_auto / n
    );
    Ok(())
}
