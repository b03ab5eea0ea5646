use std::path::Path;
use std::process::{Command, Output};

use flexsla::metrics::{parse_csv, read_json, Category};

fn flexsla(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexsla"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn print_effective_config_applies_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexsla(
        &["--seed", "7", "--scenario", "force_sla", "--print-effective-config"],
        dir.path(),
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["scenario"], "force_sla");
    assert_eq!(v["scheduler"]["pending_limit_s"], 300.0);
}

#[test]
fn invalid_config_exits_with_code_2_and_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"seed\": 1,\n  \"bogus\": true\n}\n").unwrap();
    let o = flexsla(&["--config", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&path, r#"{"scheduler": {"deadline_slack_s": 400}}"#).unwrap();
    let o = flexsla(&["--config", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_scenario_writes_csv_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexsla(&["--scenario", "auto_sla", "--format", "csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("auto_sla.metrics.csv")).unwrap();
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 4);
    let relaxed = rows.iter().find(|r| r.category == Category::Relaxed).unwrap();
    assert!(relaxed.max_pending_s <= 300.0);
    let total = rows.iter().find(|r| r.category == Category::Total).unwrap();
    assert_eq!(total.count, 911);
}

#[test]
fn policy_and_sla_flags_select_a_custom_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexsla(&["--policy", "force", "--sla", "off", "--seed", "3"], dir.path());
    assert!(o.status.success());
    let m = read_json(&dir.path().join("force_nosla.metrics.json")).unwrap();
    assert_eq!(m.seed, Some(3));
    assert_eq!(m.row(Category::Relaxed).max_pending_s, 0.0);
}

#[test]
fn exported_workload_reimports_with_the_same_hash() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("stream.csv");
    let csv = csv.to_str().unwrap();
    let a = flexsla(&["--scenario", "auto_nosla", "--export-workload", csv], dir.path());
    let b = flexsla(&["--scenario", "auto_nosla", "--import-workload", csv], dir.path());
    assert!(a.status.success() && b.status.success());
    let first = |o: &Output| stdout(o).lines().next().unwrap().to_string();
    assert_eq!(first(&a), first(&b));
    assert!(first(&a).contains("queries 911"));
}

#[test]
fn matrix_writes_metrics_traces_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexsla(&["--scenario", "matrix", "--trace"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["auto_nosla", "auto_sla", "force_sla", "pure_cf"] {
        assert!(dir.path().join(format!("{name}.metrics.json")).is_file());
        assert!(dir.path().join(format!("{name}.trace.ndjson")).is_file());
    }
    let cmp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["baseline"], "auto_nosla");
    assert!(
        cmp["variants"]["force_sla"]["total"]["cost_delta_pct"]
            .as_f64()
            .unwrap()
            < 0.0
    );
    assert!(stdout(&o).contains("force_sla vs auto_nosla"));
}
