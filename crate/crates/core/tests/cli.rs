use std::path::Path;
use std::process::{Command, Output};

use vwls_mdvi::harness::{read_records, summarize, write_summary, SolveResult};
use vwls_mdvi::linear_mdp::LinearMdp;

fn mdvi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdvi"))
        .args(args)
        .current_dir(dir)
        .env("MDVI_WORKERS", "2")
        .output()
        .expect("run mdvi")
}

const CONFIG: &str = r#"{
    "num_mdps": 3,
    "mdp": {"num_actions": 8, "dim": 4, "gamma": 0.9},
    "algorithms": [
        {"label": "f1", "kind": "wls_f1", "K": 12, "M": 20},
        {"label": "tab", "kind": "tabular", "K": 12, "M": 5},
        {"label": "v", "kind": "vwls", "K": 6, "M": 20, "K_tilde": 6, "M_sigma": 50}
    ],
    "master_seed": 11,
    "eval_every": 3,
    "output_path": "records.csv"
}"#;

#[test]
fn experiment_run_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), CONFIG).unwrap();

    let out = mdvi(
        &[
            "experiment",
            "run",
            "--config",
            "config.json",
            "--summary",
            "direct.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records_text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(records_text.starts_with("mdp_seed,algorithm,iteration,samples_used,normalized_gap\n"));

    let out = mdvi(
        &[
            "experiment",
            "run",
            "--config",
            "config.json",
            "--out",
            "again.csv",
            "--workers",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("again.csv")).unwrap(),
        records_text.as_bytes()
    );

    let out = mdvi(
        &[
            "experiment",
            "summarize",
            "--in",
            "records.csv",
            "--out",
            "summary.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let summary = std::fs::read(dir.path().join("summary.csv")).unwrap();
    assert_eq!(
        summary,
        std::fs::read(dir.path().join("direct.csv")).unwrap()
    );

    let records = read_records(records_text.as_bytes()).unwrap();
    let mut expected = Vec::new();
    write_summary(&summarize(&records), &mut expected).unwrap();
    assert_eq!(summary, expected);
}

#[test]
fn invalid_config_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = CONFIG.replace("\"eval_every\": 3", "\"eval_every\": 0");
    std::fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = mdvi(&["experiment", "run", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let unknown = CONFIG.replace("\"tabular\"", "\"dqn\"");
    std::fs::write(dir.path().join("unknown.json"), unknown).unwrap();
    let out = mdvi(
        &["experiment", "run", "--config", "unknown.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = mdvi(
        &["experiment", "run", "--config", "missing.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_runs_exit_code_and_nan_rows() {
    let dir = tempfile::tempdir().unwrap();
    // No valid instance exists for 99 actions in 100 dimensions.
    let config = CONFIG.replace(
        r#""mdp": {"num_actions": 8, "dim": 4, "gamma": 0.9}"#,
        r#""mdp": {"num_actions": 99, "dim": 100, "gamma": 0.9}"#,
    );
    std::fs::write(dir.path().join("config.json"), config).unwrap();
    let out = mdvi(
        &["experiment", "run", "--config", "config.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let records =
        read_records(std::fs::File::open(dir.path().join("records.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 9);
    assert!(records.iter().all(|r| r.is_failure()));
    assert!(summarize(&records).is_empty());
}

#[test]
fn solve_design_and_mdp_commands() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("solve.json"),
        r#"{"algorithm": "vwls", "K": 8, "M": 10, "K_tilde": 4, "M_sigma": 30,
            "seed": 3, "eval_every": 2, "trace_path": "trace.csv"}"#,
    )
    .unwrap();
    let out = mdvi(&["solve", "--config", "solve.json"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let result: SolveResult = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result.iterations, 12);
    assert_eq!(result.phase_boundary, Some(9));
    let trace = read_records(std::fs::File::open(dir.path().join("trace.csv")).unwrap()).unwrap();
    assert_eq!(trace.last().unwrap().normalized_gap, result.final_gap);
    assert_eq!(trace.last().unwrap().samples_used, result.samples_used);
    assert!(trace.iter().any(|r| r.iteration == 9));

    let out = mdvi(
        &["mdp", "generate", "--seed", "4", "--out", "mdp.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let mdp = LinearMdp::from_json(&std::fs::read_to_string(dir.path().join("mdp.json")).unwrap())
        .unwrap();
    assert_eq!((mdp.num_states(), mdp.num_actions(), mdp.dim()), (2, 30, 4));

    let out = mdvi(
        &["design", "compute", "--mdp", "mdp.json", "--f", "oracle"],
        dir.path(),
    );
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["g_value"].as_f64().unwrap() <= 4.0 * 1.01 + 1e-9);
    let mass: f64 = doc["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["mass"].as_f64().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-12);

    let out = mdvi(
        &["heuristic", "--dim", "4", "--horizon", "10", "--eps", "0.1"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("heuristic"));
}
