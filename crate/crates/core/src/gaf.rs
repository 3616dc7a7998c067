//! Layered gradual argumentation frameworks under the MLP-based semantics.
//!
//! A [`LayeredGaf`] is a weighted acyclic graph of arguments arranged in layers.
//! Layer 0 holds the input arguments, whose strengths are the binary feature
//! values of an instance. Every other argument `a` takes the strength
//!
//! ```text
//! s_a = logistic(logit(base_score(a)) + sum over edges (b, a) of w(b, a) * s_b)
//! ```
//!
//! which makes a classification GAF the same object as a sparse multilayer
//! perceptron: base scores are biases (through the logit) and edge weights
//! are connection weights. The output layer holds one argument per class; the
//! class distribution is the softmax of the output pre-activations.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Edge polarity read off the sign of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Attack,
    Support,
    Neutral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Argument {
    /// Global index of the argument, assigned by [`LayeredGaf::new`] in layer order.
    pub id: usize,
    pub name: String,
    pub layer: usize,
    pub base_score: f64,
}

impl Argument {
    pub fn new(name: impl Into<String>, base_score: f64) -> Self {
        Argument {
            id: 0,
            name: name.into(),
            layer: 0,
            base_score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

impl WeightedEdge {
    pub fn new(source: usize, target: usize, weight: f64) -> Self {
        WeightedEdge {
            source,
            target,
            weight,
        }
    }

    pub fn polarity(&self) -> Polarity {
        edge_polarity(self)
    }
}

pub fn edge_polarity(edge: &WeightedEdge) -> Polarity {
    if edge.weight < 0.0 {
        Polarity::Attack
    } else if edge.weight > 0.0 {
        Polarity::Support
    } else {
        Polarity::Neutral
    }
}

/// Offsets of each layer into the global argument index, plus a trailing total.
pub fn layer_offsets(layer_sizes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(layer_sizes.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for &size in layer_sizes {
        acc += size;
        offsets.push(acc);
    }
    offsets
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(p / (1 - p))`; infinite at the boundaries.
pub fn logit(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        (p / (1.0 - p)).ln()
    }
}

/// Influence step for a non-input argument with at least one incoming edge.
/// Returns `(pre_activation, strength)`; base scores of exactly 0 or 1 absorb
/// any aggregate.
fn influence(base_score: f64, aggregate: f64) -> (f64, f64) {
    if base_score <= 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else if base_score >= 1.0 {
        (f64::INFINITY, 1.0)
    } else {
        let z = logit(base_score) + aggregate;
        (z, logistic(z))
    }
}

/// Numerically stable softmax that also tolerates infinite entries: all mass
/// goes to the `+inf` entries if there are any, and an all `-inf` vector maps
/// to the uniform distribution.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::INFINITY {
        let n = z.iter().filter(|v| **v == f64::INFINITY).count() as f64;
        return z
            .iter()
            .map(|v| if *v == f64::INFINITY { 1.0 / n } else { 0.0 })
            .collect();
    }
    if max == f64::NEG_INFINITY {
        return vec![1.0 / z.len() as f64; z.len()];
    }
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Strength values of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    /// Strength per argument, indexed by argument id.
    pub strengths: Vec<f64>,
    /// `logit(base_score) + aggregate` of every output argument.
    pub output_preactivations: Vec<f64>,
    /// Softmax over the output pre-activations, aligned with the class labels.
    pub output_distribution: Vec<f64>,
}

impl Interpretation {
    /// Index of the most probable class; ties go to the lowest index.
    pub fn predicted_class(&self) -> usize {
        argmax(&self.output_distribution)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredGaf {
    arguments: Vec<Argument>,
    offsets: Vec<usize>,
    edges: Vec<WeightedEdge>,
    class_labels: Vec<String>,
    // edge indices into `edges`, grouped by target argument
    incoming: Vec<Vec<usize>>,
}

impl LayeredGaf {
    /// Builds a graph from its layers (input layer first, output layer last).
    ///
    /// Argument ids are assigned in layer order; edges refer to those ids and
    /// are stored sorted by `(source, target)`.
    pub fn new(
        layers: Vec<Vec<Argument>>,
        mut edges: Vec<WeightedEdge>,
        class_labels: Vec<String>,
    ) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidGraph(
                "need at least an input and an output layer".into(),
            ));
        }
        let sizes: Vec<usize> = layers.iter().map(Vec::len).collect();
        let offsets = layer_offsets(&sizes);
        let out_size = *sizes.last().unwrap();
        if out_size < 2 || out_size != class_labels.len() {
            return Err(Error::InvalidGraph(format!(
                "{} output arguments for {} class labels (need at least 2, equal counts)",
                out_size,
                class_labels.len()
            )));
        }

        let mut arguments = Vec::with_capacity(offsets[sizes.len()]);
        let mut names = HashSet::new();
        for (layer, args) in layers.into_iter().enumerate() {
            for mut arg in args {
                if arg.name.is_empty() {
                    return Err(Error::InvalidGraph("empty argument name".into()));
                }
                if !names.insert(arg.name.clone()) {
                    return Err(Error::InvalidGraph(format!(
                        "duplicate argument name {:?}",
                        arg.name
                    )));
                }
                if !(0.0..=1.0).contains(&arg.base_score) {
                    return Err(Error::InvalidGraph(format!(
                        "base score {} of {:?} outside [0, 1]",
                        arg.base_score, arg.name
                    )));
                }
                arg.id = arguments.len();
                arg.layer = layer;
                arguments.push(arg);
            }
        }

        let n = arguments.len();
        edges.sort_by_key(|e| (e.source, e.target));
        let mut incoming = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.source >= n || e.target >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {} -> {} refers to an unknown argument",
                    e.source, e.target
                )));
            }
            if arguments[e.source].layer >= arguments[e.target].layer {
                return Err(Error::InvalidGraph(format!(
                    "edge {:?} -> {:?} does not point to a deeper layer",
                    arguments[e.source].name, arguments[e.target].name
                )));
            }
            if e.weight.is_nan() {
                return Err(Error::InvalidGraph("NaN edge weight".into()));
            }
            if i > 0 && edges[i - 1].source == e.source && edges[i - 1].target == e.target {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {:?} -> {:?}",
                    arguments[e.source].name, arguments[e.target].name
                )));
            }
            incoming[e.target].push(i);
        }

        Ok(LayeredGaf {
            arguments,
            offsets,
            edges,
            class_labels,
            incoming,
        })
    }

    pub fn arguments(&self) -> &[Argument] {
        &self.arguments
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn n_layers(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn layer(&self, index: usize) -> &[Argument] {
        &self.arguments[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Global id of the `index`-th argument of `layer`.
    pub fn arg_id(&self, layer: usize, index: usize) -> usize {
        self.offsets[layer] + index
    }

    pub fn n_inputs(&self) -> usize {
        self.offsets[1]
    }

    pub fn output_ids(&self) -> std::ops::Range<usize> {
        self.offsets[self.n_layers() - 1]..self.offsets[self.n_layers()]
    }

    /// Edge indices entering `argument`.
    pub fn incoming(&self, argument: usize) -> &[usize] {
        &self.incoming[argument]
    }

    pub fn connection_count(&self) -> usize {
        self.edges.len()
    }

    /// Length of the longest edge path.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.arguments.len()];
        for a in self.n_inputs()..self.arguments.len() {
            depth[a] = self.incoming[a]
                .iter()
                .map(|&e| depth[self.edges[e].source] + 1)
                .max()
                .unwrap_or(0);
        }
        depth.into_iter().max().unwrap_or(0)
    }

    /// Same structure with new base scores (one per argument) and edge weights
    /// (aligned with [`LayeredGaf::edges`]).
    pub fn with_parameters(&self, base_scores: &[f64], weights: &[f64]) -> Result<Self> {
        if base_scores.len() != self.arguments.len() || weights.len() != self.edges.len() {
            return Err(Error::LengthMismatch(format!(
                "expected {} base scores and {} weights, got {} and {}",
                self.arguments.len(),
                self.edges.len(),
                base_scores.len(),
                weights.len()
            )));
        }
        let mut next = self.clone();
        for (arg, &b) in next.arguments.iter_mut().zip(base_scores) {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidGraph(format!(
                    "base score {} of {:?} outside [0, 1]",
                    b, arg.name
                )));
            }
            arg.base_score = b;
        }
        for (edge, &w) in next.edges.iter_mut().zip(weights) {
            if w.is_nan() {
                return Err(Error::InvalidGraph("NaN edge weight".into()));
            }
            edge.weight = w;
        }
        Ok(next)
    }

    fn check_inputs(&self, inputs: &[f64]) -> Result<()> {
        if inputs.len() != self.n_inputs() {
            return Err(Error::InputShape {
                expected: self.n_inputs(),
                actual: inputs.len(),
            });
        }
        if let Some(v) = inputs.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidGraph(format!(
                "input strength {} outside [0, 1]",
                v
            )));
        }
        Ok(())
    }

    /// Computes the fixed-point interpretation in a single pass over the layers.
    pub fn evaluate(&self, inputs: &[f64]) -> Result<Interpretation> {
        self.check_inputs(inputs)?;
        let n = self.arguments.len();
        let mut strengths = vec![0.0; n];
        let mut pre = vec![0.0; n];
        strengths[..inputs.len()].copy_from_slice(inputs);
        for a in self.n_inputs()..n {
            let beta = self.arguments[a].base_score;
            if self.incoming[a].is_empty() {
                pre[a] = logit(beta);
                strengths[a] = beta;
                continue;
            }
            let aggregate: f64 = self.incoming[a]
                .iter()
                .map(|&e| self.edges[e].weight * strengths[self.edges[e].source])
                .sum();
            let (z, s) = influence(beta, aggregate);
            pre[a] = z;
            strengths[a] = s;
        }
        let output_preactivations = pre[self.output_ids()].to_vec();
        let output_distribution = softmax(&output_preactivations);
        Ok(Interpretation {
            strengths,
            output_preactivations,
            output_distribution,
        })
    }

    pub fn predict(&self, inputs: &[f64]) -> Result<usize> {
        Ok(self.evaluate(inputs)?.predicted_class())
    }

    /// Strength vectors of the synchronous iterative procedure for iterations
    /// `0..=iterations`. Iteration 0 holds the base scores (inputs at their
    /// given values); every later iteration updates all arguments at once from
    /// the previous vector.
    pub fn strength_trajectory(&self, inputs: &[f64], iterations: usize) -> Result<Vec<Vec<f64>>> {
        self.check_inputs(inputs)?;
        let n = self.arguments.len();
        let mut current: Vec<f64> = self.arguments.iter().map(|a| a.base_score).collect();
        current[..inputs.len()].copy_from_slice(inputs);
        let mut trajectory = Vec::with_capacity(iterations + 1);
        trajectory.push(current.clone());
        for _ in 0..iterations {
            let mut next = current.clone();
            for a in self.n_inputs()..n {
                let beta = self.arguments[a].base_score;
                if self.incoming[a].is_empty() {
                    next[a] = beta;
                    continue;
                }
                let aggregate: f64 = self.incoming[a]
                    .iter()
                    .map(|&e| self.edges[e].weight * current[self.edges[e].source])
                    .sum();
                next[a] = influence(beta, aggregate).1;
            }
            trajectory.push(next.clone());
            current = next;
        }
        Ok(trajectory)
    }
}

pub fn connection_count(gaf: &LayeredGaf) -> usize {
    gaf.connection_count()
}
