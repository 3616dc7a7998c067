//! Strength evolution under the MLP-based semantics for a small bipolar graph.
//!
//! `cargo run --example semantics_trajectory`

use gaf_learn::{Argument, LayeredGaf, WeightedEdge};

fn main() -> gaf_learn::Result<()> {
    // two features, two meta-arguments, two classes; unit supports and attacks
    let gaf = LayeredGaf::new(
        vec![
            vec![Argument::new("petal_short", 0.5), Argument::new("petal_wide", 0.5)],
            vec![Argument::new("small_flower", 0.5), Argument::new("large_flower", 0.5)],
            vec![Argument::new("setosa", 0.5), Argument::new("virginica", 0.5)],
        ],
        vec![
            WeightedEdge::new(0, 2, 1.0),
            WeightedEdge::new(0, 3, -1.0),
            WeightedEdge::new(1, 2, -1.0),
            WeightedEdge::new(1, 3, 1.0),
            WeightedEdge::new(2, 4, 1.0),
            WeightedEdge::new(2, 5, -1.0),
            WeightedEdge::new(3, 4, -1.0),
            WeightedEdge::new(3, 5, 1.0),
        ],
        vec!["setosa".into(), "virginica".into()],
    )?;

    let instance = [1.0, 0.0];
    let names: Vec<&str> = gaf.arguments().iter().map(|a| a.name.as_str()).collect();
    println!("iter  {}", names.join("  "));
    for (i, s) in gaf.strength_trajectory(&instance, 4)?.iter().enumerate() {
        let row: Vec<String> = s.iter().map(|v| format!("{v:.4}")).collect();
        println!("{i:>4}  {}", row.join("  "));
    }

    let interp = gaf.evaluate(&instance)?;
    println!("\nstrengths are fixed from iteration {} (the graph depth) on", gaf.depth());
    for (label, p) in gaf.class_labels().iter().zip(&interp.output_distribution) {
        println!("P({label}) = {p:.4}");
    }
    Ok(())
}
