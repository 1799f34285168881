//! End-to-end tests of the `veriq` binary via its public interface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_veriq");

fn veriq(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_game_config(path: &Path) {
    fs::write(
        path,
        r#"{
            "price": 10.0, "cost_honest": 8.0, "cost_cheat": 2.0, "fine": 100.0,
            "info_value_honest": 60.0, "info_value_cheat": -10.0,
            "audit_cost": 50.0, "verify_cost": 0.5,
            "error_rates": { "p_tp": 0.95, "p_tn": 0.8, "p_fp": 0.2, "p_fn": 0.05 },
            "alpha": 0.1
        }"#,
    )
    .unwrap();
}

#[test]
fn alpha_single_prints_the_worked_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.json");
    write_game_config(&cfg);
    let out = veriq(&["alpha", "single", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next().unwrap(), "0.046875");
}

#[test]
fn gen_data_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let r = veriq(&["gen-data", "--rows", "500", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(r.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn sign_then_query_returns_the_exact_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("d.csv");
    let signed = dir.path().join("s.csv");
    let query = dir.path().join("q.json");
    assert!(veriq(&["gen-data", "--rows", "300", "--seed", "9", "--out", raw.to_str().unwrap()])
        .status
        .success());
    assert!(veriq(&[
        "sign", "--data", raw.to_str().unwrap(), "--key", "secret", "--out",
        signed.to_str().unwrap()
    ])
    .status
    .success());
    fs::write(&query, r#"{ "kind": "count", "predicate": { "op": "true" } }"#).unwrap();
    let out = veriq(&[
        "query", "--data", signed.to_str().unwrap(), "--key", "secret", "--query",
        query.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "300");

    // wrong key is a runtime failure (exit 1), not a usage error
    let bad = veriq(&[
        "query", "--data", signed.to_str().unwrap(), "--key", "wrong", "--query",
        query.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

fn write_experiment_config(path: &Path, summary: &Path) {
    fs::write(
        path,
        format!(
            r#"{{
            "synthetic_rows": 500,
            "game": {{
                "price": 10.0, "cost_honest": 8.0, "cost_cheat": 2.0, "fine": 100.0,
                "info_value_honest": 60.0, "info_value_cheat": -10.0,
                "audit_cost": 50.0, "verify_cost": 0.5,
                "error_rates": {{ "p_tp": 0.95, "p_tn": 0.8, "p_fp": 0.2, "p_fn": 0.05 }},
                "alpha": 0.1
            }},
            "strategies": [ {{ "kind": "laplace", "divisor": 10.0 }} ],
            "k_grid": [50, 100],
            "trials": 10,
            "rounds": 500,
            "seed": 21,
            "contract": "single_cloud",
            "mode": "real",
            "summary": {:?}
        }}"#,
            summary.to_str().unwrap()
        ),
    )
    .unwrap();
}

#[test]
fn roc_csv_has_the_contract_header_and_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let summary = dir.path().join("summary.json");
    write_experiment_config(&cfg, &summary);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let r = veriq(&[
            "roc", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--workers", workers,
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let csv_a = fs::read_to_string(&a).unwrap();
    assert_eq!(
        csv_a.lines().next().unwrap(),
        "query_id,k,cheat_kind,cheat_param,epsilon,p_fn,p_tn,trials,seed"
    );
    assert_eq!(csv_a, fs::read_to_string(&b).unwrap());
    let cells: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(cells.as_array().unwrap().len(), 8 * 2); // 8 queries x 2 sketch sizes
}

#[test]
fn simulate_writes_a_summary_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let summary = dir.path().join("unused.json");
    write_experiment_config(&cfg, &summary);
    let a = dir.path().join("sim_a.json");
    let b = dir.path().join("sim_b.json");
    for out in [&a, &b] {
        let r = veriq(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(v["rounds"], 500);
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    assert_eq!(veriq(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        veriq(&["alpha", "single", "--config", "/nonexistent/g.json"]).status.code(),
        Some(2)
    );
}
