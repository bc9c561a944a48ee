//! Integration tests for the CLI against the bundled configs: exit codes,
//! emitted artifacts, and trace CSV shape.

use std::path::PathBuf;

use consensus::cli::{run_cli, EXIT_CONFIG_ERROR, EXIT_NO_CONSENSUS, EXIT_OK};
use consensus::config::{parse_config, ScenarioConfig};

fn config_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn simulate_identical_anchors_converges_at_step_one() {
    let out = tempfile::tempdir().unwrap();
    let out_arg = out.path().display().to_string();
    let code = run_cli([
        "consensus",
        "simulate",
        "--config",
        &config_path("identical_anchors.json"),
        "--out",
        &out_arg,
    ]);
    assert_eq!(code, EXIT_OK);

    let csv = std::fs::read_to_string(out.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,agent_id,dist_to_proposal,q_accept,P,accepted"
    );
    // one step: 5 agent rows plus one group row
    assert_eq!(lines.count(), 6);

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.path().join("trace_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["consensus_step"], 1);
}

#[test]
fn simulate_without_time_for_consensus_exits_one() {
    // Far-apart groups with a single allowed step cannot reach the stop rule.
    let mut config = parse_config(&PathBuf::from(config_path("two_groups.json"))).unwrap();
    config.engine.max_steps = 1;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("capped.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let out_arg = dir.path().display().to_string();
    let config_arg = path.display().to_string();
    let code = run_cli([
        "consensus",
        "simulate",
        "--config",
        &config_arg,
        "--out",
        &out_arg,
    ]);
    assert_eq!(code, EXIT_NO_CONSENSUS);
}

#[test]
fn simulate_two_stage_emits_local_and_global_traces() {
    let out = tempfile::tempdir().unwrap();
    let out_arg = out.path().display().to_string();
    let code = run_cli([
        "consensus",
        "simulate",
        "--config",
        &config_path("ordered_preferences.json"),
        "--scheme",
        "two",
        "--out",
        &out_arg,
    ]);
    assert_eq!(code, EXIT_OK);
    for stem in ["local_0", "local_1", "local_2", "local_3", "global"] {
        assert!(
            out.path().join(format!("{stem}.csv")).exists(),
            "missing {stem}.csv"
        );
    }
}

#[test]
fn validate_accepts_bundled_configs_and_rejects_broken_ones() {
    for name in [
        "identical_anchors.json",
        "two_groups.json",
        "ordered_preferences.json",
    ] {
        assert_eq!(
            run_cli(["consensus", "validate", "--config", &config_path(name)]),
            EXIT_OK,
            "{name} should validate"
        );
    }

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(
        &broken,
        r#"{"space": {"kind": "euclidean", "dim": 0}, "groups": [], "seed": 1}"#,
    )
    .unwrap();
    let broken_arg = broken.display().to_string();
    assert_eq!(
        run_cli(["consensus", "validate", "--config", &broken_arg]),
        EXIT_CONFIG_ERROR
    );
}

#[test]
fn seed_flag_overrides_config_seed() {
    let run = |seed: &str, dir: &std::path::Path| {
        let out_arg = dir.display().to_string();
        let code = run_cli([
            "consensus",
            "simulate",
            "--config",
            &config_path("ordered_preferences.json"),
            "--seed",
            seed,
            "--out",
            &out_arg,
        ]);
        assert_eq!(code, EXIT_OK);
        std::fs::read_to_string(dir.join("trace.csv")).unwrap()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = run("11", a.path());
    let second = run("11", b.path());
    let other = run("12", c.path());
    assert_eq!(
        first, second,
        "same seed must reproduce byte-identical traces"
    );
    assert_ne!(first, other, "different seeds should differ");
}

#[test]
fn cluster_reports_planted_groups() {
    let out = tempfile::tempdir().unwrap();
    let out_arg = out.path().display().to_string();
    let code = run_cli([
        "consensus",
        "cluster",
        "--config",
        &config_path("two_groups.json"),
        "--k",
        "2",
        "--out",
        &out_arg,
    ]);
    assert_eq!(code, EXIT_OK);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("clusters.json")).unwrap())
            .unwrap();
    let labels: Vec<u64> = report["labels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(labels.len(), 16);
    // two planted groups of eight: the first eight share a label, as do the rest
    assert!(labels[..8].iter().all(|&l| l == labels[0]));
    assert!(labels[8..].iter().all(|&l| l == labels[8]));
    assert_ne!(labels[0], labels[8]);
}

#[test]
fn config_json_round_trip_is_stable() {
    let path = PathBuf::from(config_path("ordered_preferences.json"));
    let config = parse_config(&path).unwrap();
    let text = serde_json::to_string_pretty(&config).unwrap();
    let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, config);
}
