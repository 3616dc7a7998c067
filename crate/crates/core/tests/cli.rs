mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

fn gaf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaf"))
}

/// The shipped Iris config shrunk to a quick search, with absolute data paths.
fn small_config(dir: &Path, schema: &Path) -> std::path::PathBuf {
    let text = fs::read_to_string(common::config_dir().join("iris.json")).unwrap();
    let mut config: Value = serde_json::from_str(&text).unwrap();
    config["dataset"] = json!({
        "path": common::data_dir().join("iris.data"),
        "schema": schema,
    });
    config["ga"]["population_size"] = json!(6);
    config["ga"]["generations"] = json!(3);
    config["runs"] = json!(1);
    config["output_dir"] = json!(dir.join("out"));
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn missing_schema_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), &dir.path().join("nope.schema.json"));
    let status = gaf().args(["train", "--config"]).arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_flag_is_rejected() {
    let status = gaf().args(["train", "--frobnicate"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn train_is_reproducible_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), &common::data_dir().join("iris.schema.json"));
    let out = dir.path().join("out");
    let read = |name: &str| fs::read(out.join(name)).unwrap();

    let ok = gaf().args(["train", "--config"]).arg(&config).status().unwrap();
    assert!(ok.success());
    let first = (read("summary.csv"), read("run_00/model.json"), read("run_00/generations.csv"));
    let ok = gaf().args(["train", "--config"]).arg(&config).status().unwrap();
    assert!(ok.success());
    let second = (read("summary.csv"), read("run_00/model.json"), read("run_00/generations.csv"));
    assert_eq!(first, second);

    let summary = String::from_utf8(first.0).unwrap();
    assert!(summary.starts_with(
        "run,seed,test_accuracy,test_precision_macro,test_recall_macro,n_connections,generations_run,wall_seconds\n"
    ));

    let model = out.join("run_00/model.json");
    let dot = dir.path().join("model.dot");
    let ok = gaf()
        .args(["export", "--format", "dot", "--model"])
        .arg(&model)
        .arg("--out")
        .arg(&dot)
        .status()
        .unwrap();
    assert!(ok.success());
    assert!(fs::read_to_string(&dot).unwrap().starts_with("digraph"));

    let instance = vec!["1"; 12].join(",");
    let output = gaf()
        .args(["run-semantics", "--iterations", "3", "--instance", &instance, "--model"])
        .arg(&model)
        .output()
        .unwrap();
    assert!(output.status.success());
    let csv = String::from_utf8(output.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);

    let ok = gaf()
        .args(["baseline", "--kind", "tree", "--max-depth", "3", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert!(ok.success());
}

#[test]
fn wrong_instance_length_fails_at_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), &common::data_dir().join("iris.schema.json"));
    assert!(gaf().args(["train", "--config"]).arg(&config).status().unwrap().success());
    let status = gaf()
        .args(["run-semantics", "--instance", "1,0", "--model"])
        .arg(dir.path().join("out/run_00/model.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
