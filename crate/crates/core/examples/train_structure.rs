//! Trains the weights and base scores of one fixed structure on Iris with Adam
//! and early stopping.
//!
//! `cargo run --release --example train_structure`

use gaf_learn::dataset::{binarize, load_csv, split_stratified, Schema};
use gaf_learn::genetic::{random_chromosome, GraphTemplate};
use gaf_learn::training::{accuracy, train, TrainConfig};
use rand::SeedableRng;

fn main() -> gaf_learn::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let schema = Schema::from_file(format!("{dir}/iris.schema.json"))?;
    let data = binarize(&load_csv(format!("{dir}/iris.data"), &schema)?, 3)?;
    let split = split_stratified(data.n_instances(), &data.labels, 7)?;

    let template = GraphTemplate::for_dataset(&data, &[12]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let chromosome = random_chromosome(&template.layer_sizes(), &[12, 6], &mut rng)?;
    let structure = template.instantiate(&chromosome)?;
    println!("random structure with {} connections", structure.connection_count());

    let trained = train(&structure, &data, &split, &TrainConfig::iris())?;
    for r in trained.history.iter().step_by(10) {
        println!(
            "epoch {:>3}  train {:.4}  validation {:.4}  validation acc {:.3}",
            r.epoch, r.train_loss, r.validation_loss, r.validation_accuracy
        );
    }
    println!(
        "stopped after {} epochs, kept epoch {}; train acc {:.3}, test acc {:.3}",
        trained.epochs_run,
        trained.best_epoch,
        accuracy(&trained.gaf, &data, &split.train)?,
        accuracy(&trained.gaf, &data, &split.test)?
    );
    Ok(())
}
