//! Behavior tests for the `falconc` binary: exit codes, stdout reporting,
//! config-file resolution, run manifests, and artifact round-trips.

mod common;

use std::path::Path;

use common::*;
use falconc_cli::runmeta::RunManifest;
use falconc_core::seed::derive_seed;
use falconc_core::{
    aggregate_packets, load_flow_table, load_labels, load_packet_table, load_profile, load_sweep,
    write_flow_table, AuditReport, ChargingState, DecisionBoundary, LabeledFlow, ModelFile,
    ScenarioLabel,
};

/// A labeled benign flow table plus the trained model most tests reuse.
fn trained_model(dir: &Path) -> (String, String) {
    let flows = write_file(
        dir,
        "flows.csv",
        &flow_csv(40, Some(("benign", "none", "charging")), 0.0),
    );
    let model = dir.join("model.json").display().to_string();
    run_ok(falconc(dir).args([
        "train",
        "--flows",
        &flows,
        "--benign-only",
        "--hidden",
        "8",
        "--latent",
        "4",
        "--epochs",
        "5",
        "--seed",
        "7",
        "--out",
        &model,
    ]));
    (flows, model)
}

#[test]
fn missing_input_file_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().expect("temp dir");
    let stderr = run_err(
        falconc(dir.path()).args(["ingest", "--manifest", "absent-manifest.json", "--out", "x.csv"]),
        2,
    );
    assert!(
        stderr.contains("absent-manifest.json"),
        "stderr must name the missing file: {stderr}"
    );
}

#[test]
fn unknown_flags_and_missing_required_options_exit_1() {
    let dir = tempfile::tempdir().expect("temp dir");
    run_err(falconc(dir.path()).args(["train", "--no-such-flag"]), 1);
    run_err(falconc(dir.path()).args(["calibrate", "--mode", "naive", "--out", "b.json"]), 1);
    run_err(
        falconc(dir.path()).args(["calibrate", "--mode", "sideways", "--tau", "1", "--out", "b.json"]),
        1,
    );
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().expect("temp dir");
    run_ok(falconc(dir.path()).arg("--help"));
    run_ok(falconc(dir.path()).arg("--version"));
    run_ok(falconc(dir.path()).args(["train", "--help"]));
}

#[test]
fn ingest_reports_per_file_counts_and_merges_all_rows() {
    let dir = tempfile::tempdir().expect("temp dir");
    write_file(dir.path(), "a.csv", &flow_csv(25, None, 0.0));
    write_file(dir.path(), "b.csv", &flow_csv(15, None, 0.5));
    let manifest = write_file(
        dir.path(),
        "manifest.json",
        r#"[{"path": "a.csv", "class": "benign", "attack": "none", "state": "charging"},
            {"path": "b.csv", "class": "dos", "attack": "syn-flood", "state": "idle"}]"#,
    );
    let output = run_ok(falconc(dir.path()).args([
        "ingest",
        "--manifest",
        &manifest,
        "--out",
        "merged.csv",
    ]));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("a.csv: 25 flows loaded") && stdout.contains("b.csv: 15 flows loaded"),
        "per-file counts missing from stdout: {stdout}"
    );

    let report = load_flow_table(&dir.path().join("merged.csv")).expect("reload merged table");
    assert_eq!(report.flows.len(), 40);
    // The manifest's labels are stamped onto every row of each file.
    let dos_rows = report
        .flows
        .iter()
        .filter(|f| f.label.as_ref().is_some_and(|l| l.attack == "syn-flood"))
        .count();
    assert_eq!(dos_rows, 15);
}

#[test]
fn cli_aggregation_matches_the_library() {
    let dir = tempfile::tempdir().expect("temp dir");
    let packets_path = write_file(dir.path(), "packets.csv", &packet_csv());
    let manifest = write_file(dir.path(), "manifest.json", &benign_manifest("packets.csv"));
    run_ok(falconc(dir.path()).args([
        "ingest",
        "--manifest",
        &manifest,
        "--aggregate",
        "--idle-timeout",
        "120",
        "--out",
        "cli.csv",
    ]));

    let (packets, rejected) = load_packet_table(Path::new(&packets_path)).expect("load packets");
    assert_eq!(rejected, 0);
    let outcome = aggregate_packets(&packets, 120.0).expect("aggregate");
    // The 500 s silence inside one 5-tuple splits it at this timeout.
    assert_eq!(outcome.flows.len(), 3);
    let label = ScenarioLabel::benign(ChargingState::Charging);
    let flows: Vec<LabeledFlow> = outcome
        .flows
        .into_iter()
        .map(|flow| LabeledFlow {
            flow,
            label: Some(label.clone()),
        })
        .collect();
    write_flow_table(&dir.path().join("lib.csv"), &flows).expect("write library flows");

    let cli = std::fs::read(dir.path().join("cli.csv")).expect("read cli output");
    let lib = std::fs::read(dir.path().join("lib.csv")).expect("read library output");
    assert_eq!(cli, lib, "CLI aggregation must byte-match the library");
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = write_file(
        dir.path(),
        "config.json",
        r#"{"mode": "naive", "tau": 0.5, "out": "from-config.json"}"#,
    );

    // Everything comes from the config file.
    run_ok(falconc(dir.path()).args(["calibrate", "--config", &config]));
    let from_config =
        DecisionBoundary::load(&dir.path().join("from-config.json")).expect("config boundary");
    assert_eq!(from_config.params.tau, 0.5);

    // Flags override config values.
    run_ok(falconc(dir.path()).args([
        "calibrate",
        "--config",
        &config,
        "--tau",
        "0.7",
        "--out",
        "from-flags.json",
    ]));
    let from_flags =
        DecisionBoundary::load(&dir.path().join("from-flags.json")).expect("flag boundary");
    assert_eq!(from_flags.params.tau, 0.7);

    // FALCONC_CONFIG names the default config file.
    let mut cmd = falconc(dir.path());
    cmd.env("FALCONC_CONFIG", &config);
    run_ok(cmd.args(["calibrate", "--tau", "0.25", "--out", "from-env.json"]));
    let from_env =
        DecisionBoundary::load(&dir.path().join("from-env.json")).expect("env boundary");
    assert_eq!(from_env.params.tau, 0.25);

    // A named config that does not exist is a usage error.
    run_err(
        falconc(dir.path()).args(["calibrate", "--config", "nope.json", "--tau", "1", "--out", "x"]),
        1,
    );
}

#[test]
fn run_manifest_records_resolved_options_and_seeds() {
    let dir = tempfile::tempdir().expect("temp dir");
    let (_, model) = trained_model(dir.path());
    let manifest = RunManifest::load(&dir.path().join("model.run.json")).expect("run manifest");

    assert_eq!(manifest.subcommand, "train");
    assert_eq!(manifest.run_id.len(), 16);
    assert!(manifest.run_id.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(manifest.options["hidden"], 8);
    assert_eq!(manifest.options["latent"], 4);
    assert_eq!(manifest.options["seed"], 7);
    assert_eq!(manifest.options["benign-only"], true);
    // Defaulted options are recorded too, fully resolved.
    assert_eq!(manifest.options["batch-size"], 32);
    assert_eq!(manifest.seeds["split"], derive_seed(7, "split"));
    assert_eq!(manifest.seeds["init"], derive_seed(7, "init"));
    assert_eq!(manifest.seeds["shuffle"], derive_seed(7, "shuffle"));
    assert!(manifest.outputs.contains(&model));
    assert!(manifest.outputs.iter().any(|o| o.ends_with("model.curve.csv")));

    // The model artifact records the same seed it was trained with.
    let model = ModelFile::load(Path::new(&model)).expect("model");
    assert_eq!(model.metadata.seed, 7);
}

#[test]
fn train_split_outputs_partition_the_input() {
    let dir = tempfile::tempdir().expect("temp dir");
    let flows = write_file(
        dir.path(),
        "flows.csv",
        &flow_csv(40, Some(("benign", "none", "idle")), 0.0),
    );
    run_ok(falconc(dir.path()).args([
        "train",
        "--flows",
        &flows,
        "--hidden",
        "6",
        "--latent",
        "3",
        "--epochs",
        "3",
        "--seed",
        "11",
        "--test-fraction",
        "0.25",
        "--out",
        "model.json",
        "--train-out",
        "train.csv",
        "--test-out",
        "test.csv",
    ]));
    let train_rows = load_flow_table(&dir.path().join("train.csv")).expect("train split");
    let test_rows = load_flow_table(&dir.path().join("test.csv")).expect("test split");
    assert_eq!(train_rows.flows.len() + test_rows.flows.len(), 40);
    assert_eq!(test_rows.flows.len(), 10);

    // Source ports are unique per fixture row, so they witness disjointness.
    let train_ports: std::collections::BTreeSet<u16> =
        train_rows.flows.iter().map(|f| f.flow.src_port()).collect();
    for flow in &test_rows.flows {
        assert!(
            !train_ports.contains(&flow.flow.src_port()),
            "row leaked into both splits"
        );
    }
}

#[test]
fn unlabeled_refined_calibration_is_a_data_error() {
    let dir = tempfile::tempdir().expect("temp dir");
    let (_, model) = trained_model(dir.path());
    let unlabeled = write_file(dir.path(), "unlabeled.csv", &flow_csv(10, None, 0.0));
    let stderr = run_err(
        falconc(dir.path()).args([
            "calibrate",
            "--mode",
            "refined",
            "--tau",
            "0.6",
            "--model",
            &model,
            "--train",
            &unlabeled,
            "--out",
            "refined.json",
        ]),
        2,
    );
    assert!(stderr.contains("unlabeled"), "stderr: {stderr}");
}

#[test]
fn diverging_training_exits_3() {
    let dir = tempfile::tempdir().expect("temp dir");
    let flows = write_file(
        dir.path(),
        "flows.csv",
        &flow_csv(40, Some(("benign", "none", "charging")), 0.0),
    );
    // An absurd learning rate overflows the activations within an epoch.
    let stderr = run_err(
        falconc(dir.path()).args([
            "train",
            "--flows",
            &flows,
            "--hidden",
            "8",
            "--latent",
            "4",
            "--epochs",
            "3",
            "--seed",
            "7",
            "--learning-rate",
            "1e200",
            "--linear-output",
            "--out",
            "model.json",
        ]),
        3,
    );
    assert!(stderr.contains("numeric"), "stderr: {stderr}");
}

#[test]
fn every_artifact_reloads_through_its_loader() {
    let dir = tempfile::tempdir().expect("temp dir");

    // ingest
    write_file(dir.path(), "benign.csv", &flow_csv(40, None, 0.0));
    let manifest = write_file(dir.path(), "manifest.json", &benign_manifest("benign.csv"));
    run_ok(falconc(dir.path()).args(["ingest", "--manifest", &manifest, "--out", "flows.csv"]));
    let flows_path = dir.path().join("flows.csv");
    assert_eq!(load_flow_table(&flows_path).expect("flows").flows.len(), 40);

    // train
    run_ok(falconc(dir.path()).args([
        "train", "--flows", "flows.csv", "--benign-only", "--hidden", "8", "--latent", "4",
        "--epochs", "5", "--seed", "7", "--out", "model.json",
    ]));
    ModelFile::load(&dir.path().join("model.json")).expect("model reloads");
    let curve = std::fs::read_to_string(dir.path().join("model.curve.csv")).expect("curve");
    assert!(curve.starts_with("epoch,loss\n"));
    assert_eq!(curve.lines().count(), 1 + 5, "one curve row per epoch");

    // calibrate, both modes
    run_ok(falconc(dir.path()).args([
        "calibrate", "--mode", "naive", "--tau", "0.6", "--out", "naive.json",
    ]));
    DecisionBoundary::load(&dir.path().join("naive.json")).expect("naive boundary reloads");
    run_ok(falconc(dir.path()).args([
        "calibrate", "--mode", "refined", "--tau", "0.6", "--model", "model.json", "--train",
        "flows.csv", "--out", "refined.json",
    ]));
    DecisionBoundary::load(&dir.path().join("refined.json")).expect("refined boundary reloads");

    // label
    run_ok(falconc(dir.path()).args([
        "label", "--model", "model.json", "--boundary", "refined.json", "--flows", "flows.csv",
        "--out", "labels.csv",
    ]));
    let labels = load_labels(&dir.path().join("labels.csv")).expect("labels reload");
    assert_eq!(labels.len(), 40);
    assert_eq!(labels[0].flow_id, "0");

    // profile
    run_ok(falconc(dir.path()).args([
        "profile", "--model", "model.json", "--input", "benign=flows.csv", "--out", "profile.csv",
    ]));
    let profile = load_profile(&dir.path().join("profile.csv")).expect("profile reloads");
    assert_eq!(profile.entries.len(), 40);
    assert_eq!(profile.summaries[0].tag, "benign");

    // sweep
    run_ok(falconc(dir.path()).args([
        "sweep", "--flows", "flows.csv", "--benign-only", "--latent-min", "1", "--latent-max",
        "2", "--trials", "2", "--window", "2", "--hidden", "4", "--epochs", "2", "--seed", "3",
        "--out", "sweep.csv",
    ]));
    let sweep = load_sweep(&dir.path().join("sweep.csv"), 2).expect("sweep reloads");
    assert_eq!(sweep.trials.len(), 4);
    let summary = std::fs::read_to_string(dir.path().join("sweep.summary.csv")).expect("summary");
    assert!(summary.starts_with("latent_dim,mean,min,max,std,rolling_mean\n"));
    assert_eq!(summary.lines().count(), 1 + 2, "one summary row per width");

    // audit
    let mut decisions = String::from("flow_id,verdict,decision_time\n");
    for outcome in &labels {
        decisions.push_str(&format!("{},{},0.25\n", outcome.flow_id, outcome.predicted));
    }
    write_file(dir.path(), "decisions.csv", &decisions);
    run_ok(falconc(dir.path()).args([
        "audit", "--decisions", "decisions.csv", "--labels", "labels.csv", "--out", "audit.json",
    ]));
    let audit_text = std::fs::read_to_string(dir.path().join("audit.json")).expect("audit json");
    let report: AuditReport = serde_json::from_str(&audit_text).expect("audit reloads");
    assert_eq!(report.joined, 40);
    assert_eq!(report.agreement_rate, 1.0);

    // Every primary artifact has a run manifest beside it.
    for stem in ["flows", "model", "naive", "refined", "labels", "profile", "sweep", "audit"] {
        let path = dir.path().join(format!("{stem}.run.json"));
        RunManifest::load(&path).unwrap_or_else(|_| panic!("missing run manifest {stem}"));
    }
}
