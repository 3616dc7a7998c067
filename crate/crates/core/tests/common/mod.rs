#![allow(dead_code)]

use std::path::PathBuf;

use gaf_learn::dataset::{binarize, load_csv, BinarizedDataset, Schema};
use gaf_learn::gaf::logistic;
use gaf_learn::{Argument, LayeredGaf, WeightedEdge};
use rand::Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub fn iris() -> BinarizedDataset {
    let schema = Schema::from_file(data_dir().join("iris.schema.json")).unwrap();
    let raw = load_csv(data_dir().join("iris.data"), &schema).unwrap();
    binarize(&raw, 3).unwrap()
}

/// One binary feature that decides the class: label = x.
pub fn single_feature_toy(n: usize) -> BinarizedDataset {
    let instances: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 2) as f64]).collect();
    let labels = (0..n).map(|i| i % 2).collect();
    BinarizedDataset {
        input_names: vec!["x".into()],
        instances,
        labels,
        label_names: vec!["neg".into(), "pos".into()],
        warnings: vec![],
    }
}

/// A random layered graph: 2 to 4 layers, each edge between adjacent layers
/// present with probability `density`, weights in [-2, 2], base scores
/// bounded away from 0 and 1.
pub fn random_gaf<R: Rng>(rng: &mut R, density: f64) -> LayeredGaf {
    let n_layers = rng.gen_range(2..=4);
    let mut sizes: Vec<usize> = (0..n_layers).map(|_| rng.gen_range(1..=4)).collect();
    *sizes.last_mut().unwrap() = rng.gen_range(2..=4);
    let layers: Vec<Vec<Argument>> = sizes
        .iter()
        .enumerate()
        .map(|(l, &s)| {
            (0..s)
                .map(|i| {
                    let beta = if l == 0 { 0.5 } else { logistic(rng.gen_range(-2.0..2.0)) };
                    Argument::new(format!("l{l}a{i}"), beta)
                })
                .collect()
        })
        .collect();
    let mut offsets = vec![0];
    for s in &sizes {
        offsets.push(offsets.last().unwrap() + s);
    }
    let mut edges = Vec::new();
    for l in 0..n_layers - 1 {
        for s in offsets[l]..offsets[l + 1] {
            for t in offsets[l + 1]..offsets[l + 2] {
                if rng.gen_bool(density) {
                    edges.push(WeightedEdge::new(s, t, rng.gen_range(-2.0..2.0)));
                }
            }
        }
    }
    let labels = (0..sizes[n_layers - 1]).map(|i| format!("l{}a{i}", n_layers - 1)).collect();
    LayeredGaf::new(layers, edges, labels).unwrap()
}

pub fn random_inputs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Central finite differences of the mean cross-entropy, one parameter at a time.
pub fn numeric_gradient(gaf: &LayeredGaf, rows: &[Vec<f64>], labels: &[usize], h: f64) -> Vec<f64> {
    use gaf_learn::training::{forward_loss, parameters, with_parameters, Batch};
    let loss = |p: &[f64]| {
        let g = with_parameters(gaf, p).unwrap();
        let batch = Batch::new(rows.iter().map(|r| r.as_slice()).collect(), labels.to_vec());
        forward_loss(&g, &batch).unwrap().0
    };
    let base = parameters(gaf);
    (0..base.len())
        .map(|i| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += h;
            minus[i] -= h;
            (loss(&plus) - loss(&minus)) / (2.0 * h)
        })
        .collect()
}

/// |a - n| / max(|a|, |n|, 1e-6)
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error between backpropagation and finite differences
/// over `n_graphs` random graphs with random 6-instance batches.
pub fn max_gradient_error(n_graphs: usize, seed: u64) -> f64 {
    use gaf_learn::training::{gradients, Batch};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_graphs {
        let gaf = random_gaf(&mut rng, 0.7);
        let rows: Vec<Vec<f64>> = (0..6).map(|_| random_inputs(&mut rng, gaf.n_inputs())).collect();
        let n_out = gaf.output_ids().len();
        let labels: Vec<usize> = (0..6).map(|_| rng.gen_range(0..n_out)).collect();
        let batch = Batch::new(rows.iter().map(|r| r.as_slice()).collect(), labels.clone());
        let analytic = gradients(&gaf, &batch).unwrap().flat();
        let numeric = numeric_gradient(&gaf, &rows, &labels, 1e-5);
        assert_eq!(analytic.len(), numeric.len());
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max(relative_error(*a, *n));
        }
    }
    worst
}
