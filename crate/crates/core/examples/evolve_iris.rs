//! Genetic structure search on Iris with the shipped hyperparameters, then a
//! readable listing of the winning graph.
//!
//! `cargo run --release --example evolve_iris [seed]`

use gaf_learn::experiment::{prepare_run, load_raw, test_metrics, ExperimentConfig};
use gaf_learn::genetic::{evolve, GaConfig};

fn main() -> gaf_learn::Result<()> {
    let mut config = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/iris.json"))?;
    if let Some(seed) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        config.seed = seed;
    }
    let run = prepare_run(&config, &load_raw(&config)?, 0)?;
    let ga = GaConfig {
        seed: run.seed,
        ..config.ga.clone()
    };
    let result = evolve(&run.data, &run.split, &[config.hidden_neurons], &ga, &config.train)?;

    println!("gen  best_fitness  mean_fitness  train_acc  connections");
    for r in &result.log {
        println!(
            "{:>3}  {:>12.4}  {:>12.4}  {:>9.3}  {:>11}",
            r.generation, r.best_fitness, r.mean_fitness, r.best_accuracy, r.best_connections
        );
    }

    let gaf = &result.best.classifier.gaf;
    let metrics = test_metrics(gaf, &run.data, &run.split.test)?;
    println!("\ntest accuracy {:.3}, {} connections", metrics.accuracy, gaf.connection_count());
    for e in gaf.edges() {
        let verb = if e.weight < 0.0 { "attacks" } else { "supports" };
        println!(
            "  {:<24} {verb:<8} {:<16} ({:+.2})",
            gaf.arguments()[e.source].name,
            gaf.arguments()[e.target].name,
            e.weight
        );
    }
    Ok(())
}
