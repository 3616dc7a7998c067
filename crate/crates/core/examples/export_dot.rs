//! Learns a small Iris classifier, stores it as a JSON model document and
//! renders it as Graphviz DOT.
//!
//! `cargo run --release --example export_dot > iris.dot && dot -Tsvg iris.dot -o iris.svg`

use gaf_learn::experiment::{load_raw, prepare_run, ExperimentConfig};
use gaf_learn::export::{from_json, to_dot, to_json, ModelMetadata};
use gaf_learn::genetic::{evolve, GaConfig};

fn main() -> gaf_learn::Result<()> {
    let config = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/iris.json"))?;
    let run = prepare_run(&config, &load_raw(&config)?, 0)?;
    let ga = GaConfig {
        generations: 8,
        seed: run.seed,
        ..config.ga.clone()
    };
    let result = evolve(&run.data, &run.split, &[config.hidden_neurons], &ga, &config.train)?;
    let gaf = &result.best.classifier.gaf;

    let metadata = ModelMetadata {
        seed: Some(run.seed),
        fitness: Some(result.best.fitness),
        train_accuracy: Some(result.best.train_accuracy),
        generations_run: Some(result.generations_run),
        ..Default::default()
    };
    let json = to_json(gaf, &metadata)?;
    let restored = from_json(&json)?;
    assert_eq!(&restored.gaf, gaf);
    eprintln!("model document: {} bytes, round trip exact", json.len());

    // hide near-zero edges in the picture only
    print!("{}", to_dot(gaf, 0.05));
    Ok(())
}
