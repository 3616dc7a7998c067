//! Shows how a CSV file is turned into binary input arguments.
//!
//! `cargo run --example binarize_csv [data.csv schema.json [bins]]`

use gaf_learn::dataset::{load_csv, split_stratified, Binarizer, Schema};

fn main() -> gaf_learn::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (data_path, schema_path) = match args.as_slice() {
        [d, s, ..] => (d.clone(), s.clone()),
        _ => (format!("{dir}/iris.data"), format!("{dir}/iris.schema.json")),
    };
    let bins = args.get(2).and_then(|b| b.parse().ok()).unwrap_or(3);

    let raw = load_csv(&data_path, &Schema::from_file(&schema_path)?)?;
    println!(
        "{} instances, {} features, {} classes, {} rows dropped",
        raw.n_instances(),
        raw.n_features(),
        raw.label_names.len(),
        raw.dropped_rows
    );

    let binarizer = Binarizer::fit(&raw, None, bins)?;
    let data = binarizer.transform(&raw);
    for w in &data.warnings {
        println!("warning: {w}");
    }
    for (j, name) in data.input_names.iter().enumerate() {
        let on = data.instances.iter().filter(|x| x[j] == 1.0).count();
        println!("  {name:<28} true for {on:>5} instances");
    }

    let split = split_stratified(raw.n_instances(), &raw.labels, 0)?;
    println!(
        "split: {} train / {} validation / {} test",
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(())
}
