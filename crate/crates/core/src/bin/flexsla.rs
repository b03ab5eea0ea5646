use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use flexsla::config::{load_config, ScenarioChoice, ScenarioConfig};
use flexsla::engine::RoutingMode;
use flexsla::matrix::{run_matrix_on, run_named, write_matrix, write_outcome, OutputOptions};
use flexsla::metrics::{Category, CategoryMetrics, Format};
use flexsla::scheduler::{Policy, SlaMode};
use flexsla::workload::{read_trace, write_trace};

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Force,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

/// Simulate flexible-SLA query scheduling over a VM cluster and a CF pool.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Scenario configuration (JSON); omitted keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run a single custom scenario with this coordinator policy.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Run a single custom scenario with flexible SLAs on or off.
    #[arg(long, value_enum)]
    sla: Option<Toggle>,
    /// auto_nosla, auto_sla, force_sla, pure_cf or matrix.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write the event log of every scenario as NDJSON.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    print_effective_config: bool,
    #[arg(long)]
    export_workload: Option<PathBuf>,
    #[arg(long)]
    import_workload: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(args: Args) -> flexsla::Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(name) = &args.scenario {
        cfg.scenario = name.parse()?;
    }
    if let Some(p) = args.policy {
        cfg.scheduler.policy = match p {
            PolicyArg::Force => Policy::Force,
            PolicyArg::Auto => Policy::Auto,
        };
    }
    if let Some(s) = args.sla {
        cfg.scheduler.sla = match s {
            Toggle::On => SlaMode::Enabled,
            Toggle::Off => SlaMode::Disabled,
        };
    }
    cfg.validate()?;

    if args.print_effective_config {
        println!("{}", cfg.to_json());
        return Ok(true);
    }

    let stream = match &args.import_workload {
        Some(path) => read_trace(path, &cfg.workload.plan, cfg.seed)?,
        None => cfg.generate_stream()?,
    };
    if let Some(path) = &args.export_workload {
        write_trace(&stream, path)?;
        eprintln!("wrote {} queries to {}", stream.len(), path.display());
    }

    let opts = OutputOptions {
        format: match args.format {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        },
        trace: args.trace,
    };
    println!(
        "seed {}  workload {}  queries {}",
        cfg.seed,
        stream.content_hash(),
        stream.len()
    );

    // --policy/--sla without --scenario selects a custom single run
    let custom = args.scenario.is_none() && (args.policy.is_some() || args.sla.is_some());
    let single = match cfg.scenario {
        _ if custom => None,
        ScenarioChoice::Single(sc) => Some(sc),
        ScenarioChoice::Matrix => {
            let report = run_matrix_on(&cfg, &stream)?;
            write_matrix(&report, &args.out, opts)?;
            for o in &report.outcomes {
                print_metrics(&o.name, &o.metrics);
            }
            for (name, cmp) in &report.comparison.variants {
                let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:+.1}%"));
                println!(
                    "{name:>10} vs {}: total cost {}  immediate cost {}  total exec {}",
                    report.comparison.baseline,
                    pct(cmp.total.cost_delta_pct),
                    pct(cmp.immediate.cost_delta_pct),
                    pct(cmp.total.exec_delta_pct),
                );
            }
            report_failures(&report.failures);
            return Ok(report.passed());
        }
    };

    let (name, sim) = match single {
        Some(sc) => (sc.name().to_string(), cfg.sim_config(sc)),
        None => {
            let policy = cfg.scheduler.policy;
            let sla = cfg.scheduler.sla;
            let name = format!(
                "{}_{}",
                if policy == Policy::Force { "force" } else { "auto" },
                if sla == SlaMode::Enabled { "sla" } else { "nosla" }
            );
            (name, cfg.sim_config_with(policy, sla, RoutingMode::Coordinated))
        }
    };
    let outcome = run_named(&name, &sim, &stream, cfg.seed)?;
    write_outcome(&outcome, &args.out, opts)?;
    print_metrics(&outcome.name, &outcome.metrics);
    let failures: Vec<String> = outcome.violations().iter().map(|v| format!("{name}: {v}")).collect();
    report_failures(&failures);
    Ok(failures.is_empty())
}

fn print_metrics(name: &str, m: &CategoryMetrics) {
    println!("{name}");
    for c in [Category::Immediate, Category::Relaxed, Category::Boe, Category::Total] {
        let r = m.row(c);
        println!(
            "  {:<9} n={:<4} exec={:>10.1}s cost=${:<12} max_pending={:.1}s",
            c.as_str(),
            r.count,
            r.cum_exec_s,
            r.cum_cost_usd.to_string(),
            r.max_pending_s
        );
    }
}

fn report_failures(failures: &[String]) {
    for f in failures {
        eprintln!("invariant violated: {f}");
    }
}
