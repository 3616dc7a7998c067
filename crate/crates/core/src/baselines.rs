//! Comparison classifiers and shared metrics.

use serde::{Deserialize, Serialize};

use crate::dataset::{BinarizedDataset, SplitIndices};
use crate::error::{Error, Result};
use crate::gaf::{Argument, LayeredGaf, WeightedEdge};
use crate::training::{self, TrainConfig, TrainedClassifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Confusion matrix with accuracy and macro-averaged precision and recall.
/// A class whose precision (or recall) has a zero denominator contributes 0.
pub fn evaluate_metrics(predictions: &[usize], truth: &[usize], n_classes: usize) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::LengthMismatch("no predictions to evaluate".into()));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p >= n_classes || t >= n_classes {
            return Err(Error::LengthMismatch(format!(
                "class index {} out of range for {} classes",
                p.max(t),
                n_classes
            )));
        }
        confusion[t][p] += 1;
    }
    Ok(metrics_from_confusion(confusion))
}

pub fn metrics_from_confusion(confusion: Vec<Vec<usize>>) -> Metrics {
    let k = confusion.len();
    let total: usize = confusion.iter().flatten().sum();
    let trace: usize = (0..k).map(|i| confusion[i][i]).sum();
    let mut warnings = Vec::new();
    let mut precision = 0.0;
    let mut recall = 0.0;
    for c in 0..k {
        let predicted: usize = (0..k).map(|t| confusion[t][c]).sum();
        let actual: usize = confusion[c].iter().sum();
        if predicted == 0 {
            warnings.push(format!("class {c} never predicted; precision counted as 0"));
        } else {
            precision += confusion[c][c] as f64 / predicted as f64;
        }
        if actual == 0 {
            warnings.push(format!("class {c} absent; recall counted as 0"));
        } else {
            recall += confusion[c][c] as f64 / actual as f64;
        }
    }
    Metrics {
        accuracy: trace as f64 / total as f64,
        macro_precision: precision / k as f64,
        macro_recall: recall / k as f64,
        confusion,
        warnings,
    }
}

/// Fully connected graph without hidden layer: inputs attached directly to outputs.
pub fn logistic_structure(data: &BinarizedDataset) -> Result<LayeredGaf> {
    let n_in = data.n_features();
    let n_out = data.n_classes();
    let layers = vec![
        data.input_names.iter().map(|n| Argument::new(n.clone(), 0.5)).collect(),
        data.label_names.iter().map(|n| Argument::new(n.clone(), 0.5)).collect(),
    ];
    let edges = (0..n_in)
        .flat_map(|a| (0..n_out).map(move |b| WeightedEdge::new(a, n_in + b, 0.0)))
        .collect();
    LayeredGaf::new(layers, edges, data.label_names.clone())
}

/// Logistic regression on the binarized features, trained with the same
/// machinery as the argumentation classifiers.
pub fn train_logistic(data: &BinarizedDataset, split: &SplitIndices, config: &TrainConfig) -> Result<TrainedClassifier> {
    training::train(&logistic_structure(data)?, data, split, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        class: usize,
        samples: usize,
    },
    /// Instances with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub max_depth: Option<usize>,
    pub n_classes: usize,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    /// Lowest weighted child impurity over all features and midpoint
    /// thresholds; ties keep the lowest feature, then the lowest threshold.
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let n_features = self.x.first().map_or(0, Vec::len);
        let n = rows.len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
        for f in 0..n_features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0usize; self.n_classes];
            let mut right = self.counts(rows);
            for i in 0..n - 1 {
                left[sorted[i].1] += 1;
                right[sorted[i].1] -= 1;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let n_left = i + 1;
                let n_right = n - n_left;
                if n_left < self.min_leaf || n_right < self.min_leaf {
                    continue;
                }
                let score = (n_left as f64 * gini(&left, n_left) + n_right as f64 * gini(&right, n_right)) / n as f64;
                let threshold = (sorted[i].0 + sorted[i + 1].0) / 2.0;
                if best.is_none_or(|(s, _, _)| score < s - 1e-12) {
                    best = Some((score, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            class: majority(&counts),
            samples: rows.len(),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || rows.len() < 2 * self.min_leaf {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][feature] < threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Greedy CART with Gini impurity on the rows `indices` of `features`.
pub fn train_tree_on(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    indices: &[usize],
    max_depth: Option<usize>,
    min_leaf: usize,
) -> Result<DecisionTree> {
    if indices.is_empty() {
        return Err(Error::Config("empty training data for decision tree".into()));
    }
    let mut builder = TreeBuilder {
        x: features,
        y: labels,
        n_classes,
        max_depth,
        min_leaf: min_leaf.max(1),
        nodes: Vec::new(),
    };
    builder.build(indices.to_vec(), 0);
    Ok(DecisionTree {
        nodes: builder.nodes,
        max_depth,
        n_classes,
    })
}

/// Decision tree on the training split of the binarized features.
pub fn train_tree(data: &BinarizedDataset, train: &[usize], max_depth: Option<usize>, min_leaf: usize) -> Result<DecisionTree> {
    train_tree_on(&data.instances, &data.labels, data.n_classes(), train, max_depth, min_leaf)
}
