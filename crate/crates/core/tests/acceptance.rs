//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use flexsla::config::{Scenario, ScenarioConfig};
use flexsla::engine::{run_scenario, RoutingMode, SimConfig, Simulation};
use flexsla::matrix::{run_matrix, run_matrix_on, OutputOptions};
use flexsla::metrics::{Category, Format};
use flexsla::resources::vm_rates;
use flexsla::scheduler::{Policy, SlaMode};
use flexsla::workload::{Complexity, Lifecycle, StagePlan};
use flexsla::{Money, Query, QueryStream, ServiceLevel, MB};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: std::ops::Range<u64> = 42..142;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    }
}

fn cost(m: &flexsla::CategoryMetrics, c: Category) -> f64 {
    m.row(c).cum_cost_usd.as_usd()
}

fn pending_guarantee() -> Outcome {
    let start = Instant::now();
    let mut worst_relaxed: f64 = 0.0;
    let mut worst_immediate: f64 = 0.0;
    let mut relaxed = 0usize;
    let mut bad = Vec::new();
    for seed in SEEDS {
        let cfg = config(seed);
        let stream = cfg.generate_stream().unwrap();
        if stream.len() != 911 {
            bad.push(format!("seed {seed}: {} queries", stream.len()));
        }
        for s in [Scenario::AutoSla, Scenario::ForceSla] {
            let r = run_scenario(&cfg.sim_config(s), &stream).unwrap();
            for q in &r.records {
                let p = q.pending_time().unwrap();
                match q.submitted_level {
                    ServiceLevel::Relaxed => {
                        relaxed += 1;
                        worst_relaxed = worst_relaxed.max(p);
                    }
                    ServiceLevel::Immediate => worst_immediate = worst_immediate.max(p),
                    ServiceLevel::BestOfEffort => {}
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = bad.is_empty() && worst_relaxed <= 300.0 && worst_immediate == 0.0 && secs < 60.0;
    outcome(
        pass,
        format!(
            "{relaxed} relaxed queries, max relaxed pending {worst_relaxed:.3} s, max immediate pending {worst_immediate} s, {secs:.1} s wall{}",
            if bad.is_empty() { String::new() } else { format!(", {bad:?}") }
        ),
    )
}

fn cost_ordering() -> Outcome {
    let cfg = config(42);
    let rep = run_matrix_on(&cfg, &cfg.generate_stream().unwrap()).unwrap();
    let t = |s| cost(rep.metrics(s), Category::Total);
    let i = |s| cost(rep.metrics(s), Category::Immediate);
    let (tf, ta, tn) = (t(Scenario::ForceSla), t(Scenario::AutoSla), t(Scenario::AutoNosla));
    let (in_, ia, if_) = (i(Scenario::AutoNosla), i(Scenario::AutoSla), i(Scenario::ForceSla));
    outcome(
        tf < ta && ta < tn && in_ < ia && ia < if_,
        format!(
            "total force {tf:.2} < auto {ta:.2} < nosla {tn:.2}; immediate nosla {in_:.2} < auto {ia:.2} < force {if_:.2}"
        ),
    )
}

fn magnitude_bands() -> Outcome {
    let mut hits = 0;
    let (mut sum_f, mut sum_a) = (0.0, 0.0);
    let mut misses = Vec::new();
    for seed in SEEDS {
        let cfg = config(seed);
        let rep = run_matrix_on(&cfg, &cfg.generate_stream().unwrap()).unwrap();
        let v = &rep.comparison.variants;
        let rf = -v["force_sla"].total.cost_delta_pct.unwrap();
        let ra = -v["auto_sla"].total.cost_delta_pct.unwrap();
        sum_f += rf;
        sum_a += ra;
        if (50.0..=80.0).contains(&rf) && (10.0..=35.0).contains(&ra) {
            hits += 1;
        } else if misses.len() < 5 {
            misses.push(format!("{seed}: force {rf:.1}% auto {ra:.1}%"));
        }
    }
    let n = SEEDS.count() as f64;
    outcome(
        hits >= 90,
        format!(
            "{hits}/100 seeds in band; mean reduction force {:.1}%, auto {:.1}%; first misses {misses:?}",
            sum_f / n,
            sum_a / n
        ),
    )
}

fn pure_cf_comparison() -> Outcome {
    let cfg = config(42);
    let rep = run_matrix_on(&cfg, &cfg.generate_stream().unwrap()).unwrap();
    let pc = cost(rep.metrics(Scenario::PureCf), Category::Immediate);
    let fs = cost(rep.metrics(Scenario::ForceSla), Category::Immediate);
    let ratio = pc / fs;
    outcome(
        (1.5..=4.0).contains(&ratio),
        format!("immediate cost pure_cf {pc:.2} / force_sla {fs:.2} = {ratio:.2}x"),
    )
}

fn exec_comparability() -> Outcome {
    let cfg = config(42);
    let rep = run_matrix_on(&cfg, &cfg.generate_stream().unwrap()).unwrap();
    let e = |s, c| rep.metrics(s).row(c).cum_exec_s;
    let d = |c| (e(Scenario::AutoSla, c) / e(Scenario::AutoNosla, c) - 1.0) * 100.0;
    let (di, dr) = (d(Category::Immediate), d(Category::Relaxed));
    let (ba, bn) = (
        e(Scenario::AutoSla, Category::Boe),
        e(Scenario::AutoNosla, Category::Boe),
    );
    outcome(
        di.abs() <= 15.0 && dr.abs() <= 15.0 && ba >= bn,
        format!("immediate {di:+.1}%, relaxed {dr:+.1}%, boe auto_sla {ba:.0} s vs auto_nosla {bn:.0} s"),
    )
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let cfg = config(42);
    let opts = OutputOptions {
        format: Format::Json,
        trace: true,
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_matrix(&cfg, a.path(), opts).unwrap();
    run_matrix(&cfg, b.path(), opts).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<_> = fa
        .iter()
        .filter(|(k, v)| fb.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    let bytes: usize = fa.values().map(Vec::len).sum();
    outcome(
        fa.len() == 9 && fa.keys().eq(fb.keys()) && differing.is_empty(),
        format!("{} files, {bytes} bytes compared, differing {differing:?}", fa.len()),
    )
}

fn immediate(id: u64, t: f64, stages: &[u64]) -> Query {
    Query {
        id,
        submit_time: t,
        db_id: "db".into(),
        scan_bytes: stages[0],
        service_level: ServiceLevel::Immediate,
        complexity: Complexity::Small,
        plan: StagePlan::from_inputs(stages.iter().copied()),
        lifecycle: Lifecycle::default(),
    }
}

fn done_times(log: &[flexsla::engine::LogRecord]) -> BTreeMap<u64, f64> {
    log.iter()
        .filter(|r| r.kind == "QueryDone")
        .map(|r| (r.query_id.unwrap(), r.time))
        .collect()
}

/// Independent fluid model: time advances in fixed 1 ms steps; inside a step
/// capacity is split equally and re-split whenever a job drains.
fn fluid_oracle(jobs: &[(f64, f64)], cap: f64) -> Vec<f64> {
    const DT: f64 = 1e-3;
    let mut rem: Vec<f64> = jobs.iter().map(|j| j.1).collect();
    let mut done = vec![f64::NAN; jobs.len()];
    let mut step = 0u64;
    while done.iter().any(|d| d.is_nan()) {
        let t0 = step as f64 * DT;
        let mut t = t0;
        let t1 = t0 + DT;
        loop {
            let active: Vec<usize> = (0..jobs.len())
                .filter(|&i| done[i].is_nan() && jobs[i].0 <= t0 + 1e-12)
                .collect();
            if active.is_empty() {
                break;
            }
            let rate = cap / active.len() as f64;
            let first = active.iter().map(|&i| rem[i] / rate).fold(f64::INFINITY, f64::min);
            let dt = first.min(t1 - t);
            for &i in &active {
                rem[i] -= rate * dt;
            }
            t += dt;
            for &i in &active {
                if rem[i] <= cap * 1e-12 {
                    done[i] = t;
                }
            }
            if t >= t1 - 1e-15 {
                break;
            }
        }
        step += 1;
    }
    done
}

fn oracle_equivalence() -> Outcome {
    // q0 and q1 share the VM; q2 arrives with two running and spills to CF.
    let mut cfg = SimConfig::nominal();
    cfg.vm.overload_threshold = 2;
    let stream = QueryStream::new(vec![
        immediate(0, 0.0, &[3200 * MB]),
        immediate(1, 0.5, &[1600 * MB]),
        immediate(2, 0.75, &[1024 * MB, 256 * MB]),
    ]);
    let r = run_scenario(&cfg, &stream).unwrap();
    let got = done_times(&r.log);
    let stage = 1.5 + 0.5 + 256.0 / 600.0;
    let want = [(0, 1.5), (1, 1.5), (2, 0.75 + 2.0 * stage)];
    let micro_ok =
        r.violations.is_empty() && got.len() == 3 && want.iter().all(|&(id, t)| (got[&id] - t).abs() <= 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut vm_cfg = SimConfig::nominal();
    vm_cfg.vm.overload_threshold = 64;
    let cap = vm_cfg.vm.capacity();
    for _ in 0..50 {
        let n = rng.random_range(1..=5);
        let mut jobs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let ms: u32 = rng.random_range(0..3000);
                let mb: u64 = rng.random_range(16..8192);
                (ms as f64 * 1e-3, (mb * MB) as f64)
            })
            .collect();
        jobs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let qs = jobs
            .iter()
            .enumerate()
            .map(|(i, &(t, w))| immediate(i as u64, t, &[w as u64]))
            .collect();
        let r = run_scenario(&vm_cfg, &QueryStream::new(qs)).unwrap();
        let got = done_times(&r.log);
        for (i, t) in fluid_oracle(&jobs, cap).into_iter().enumerate() {
            worst = worst.max((got[&(i as u64)] - t).abs());
        }
    }
    outcome(
        micro_ok && worst <= 2e-3,
        format!(
            "micro-scenario done times {got:?} (want {want:?}); fluid oracle max error {:.3e} s over 50 instances",
            worst
        ),
    )
}

fn conservation() -> Outcome {
    let cfg = config(42);
    let stream = cfg.generate_stream().unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for s in Scenario::MATRIX {
        let sim_cfg = cfg.sim_config(s);
        let cap = sim_cfg.vm.capacity();
        let mut sim = Simulation::new(sim_cfg.clone(), &stream).unwrap();
        let mut checks = 0u64;
        let mut worst: f64 = 0.0;
        while !sim.is_quiescent() {
            sim.step().unwrap();
            let rates = vm_rates(sim.vm_state(), &sim_cfg.vm);
            if !rates.is_empty() {
                checks += 1;
                worst = worst.max((rates.values().sum::<f64>() - cap).abs() / cap);
            }
        }
        let r = sim.finish();
        let per_query: Money = r.records.iter().map(|q| q.cost()).sum();
        let ledger_ok = r.ledger.total() == per_query + r.ledger.idle_vm_cost;
        let counts_ok = r.arrivals == stream.len() && r.completions == r.arrivals;
        let ok = ledger_ok && counts_ok && worst <= 1e-12 && r.violations.is_empty();
        pass &= ok;
        notes.push(format!(
            "{}: ledger {} = {} + idle {}, {} arrivals/{} completions, {checks} rate checks (max rel err {worst:.1e})",
            s.name(),
            r.ledger.total(),
            per_query,
            r.ledger.idle_vm_cost,
            r.arrivals,
            r.completions
        ));
    }
    outcome(pass, notes.join("; "))
}

fn scheduler_equivalence() -> Outcome {
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for seed in 42..52 {
        let cfg = config(seed);
        let stream = cfg.generate_stream().unwrap();
        let run = |p| {
            run_scenario(
                &cfg.sim_config_with(p, SlaMode::Disabled, RoutingMode::Coordinated),
                &stream,
            )
            .unwrap()
        };
        let (f, a) = (run(Policy::Force), run(Policy::Auto));
        compared += f.log.len();
        if f.log != a.log {
            mismatched.push(seed);
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("10 seeds, {compared} log records compared, mismatched seeds {mismatched:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("pending-time guarantee", pending_guarantee),
        ("cost ordering", cost_ordering),
        ("magnitude bands", magnitude_bands),
        ("pure-CF comparison", pure_cf_comparison),
        ("execution-time comparability", exec_comparability),
        ("determinism", determinism),
        ("oracle equivalence", oracle_equivalence),
        ("conservation", conservation),
        ("scheduler equivalence", scheduler_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failed += !o.pass as usize;
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
