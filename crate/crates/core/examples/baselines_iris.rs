//! Logistic regression and decision trees on the same Iris split as the
//! argumentation classifiers.
//!
//! `cargo run --release --example baselines_iris`

use gaf_learn::baselines::{evaluate_metrics, train_logistic, train_tree};
use gaf_learn::experiment::{load_raw, prepare_run, ExperimentConfig};
use gaf_learn::training::TrainConfig;

fn main() -> gaf_learn::Result<()> {
    let config = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/iris.json"))?;
    let run = prepare_run(&config, &load_raw(&config)?, 0)?;
    let (data, split) = (&run.data, &run.split);
    let truth: Vec<usize> = split.test.iter().map(|&i| data.labels[i]).collect();

    let logistic = train_logistic(data, split, &TrainConfig { seed: 1, ..config.train.clone() })?;
    let preds = split
        .test
        .iter()
        .map(|&i| logistic.predict(&data.instances[i]))
        .collect::<gaf_learn::Result<Vec<_>>>()?;
    let m = evaluate_metrics(&preds, &truth, data.n_classes())?;
    println!(
        "logistic      acc {:.3}  precision {:.3}  recall {:.3}  ({} weights)",
        m.accuracy,
        m.macro_precision,
        m.macro_recall,
        logistic.gaf.connection_count()
    );

    for depth in [Some(1), Some(2), Some(3), None] {
        let tree = train_tree(data, &split.train, depth, 1)?;
        let preds: Vec<usize> = split.test.iter().map(|&i| tree.predict(&data.instances[i])).collect();
        let m = evaluate_metrics(&preds, &truth, data.n_classes())?;
        let name = depth.map_or("tree (full)".to_string(), |d| format!("tree depth {d}"));
        println!(
            "{name:<13} acc {:.3}  precision {:.3}  recall {:.3}  ({} leaves, depth {})",
            m.accuracy,
            m.macro_precision,
            m.macro_recall,
            tree.leaf_count(),
            tree.depth()
        );
    }
    Ok(())
}
