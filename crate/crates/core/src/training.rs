//! Gradient training of base scores and edge weights for a fixed graph structure.
//!
//! The graph is treated as a sparse MLP. Trainable parameters are one bias per
//! non-input argument, `b_a = logit(base_score(a))`, followed by one weight per
//! existing edge. Edges absent from the structure have no parameter at all.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{BinarizedDataset, SplitIndices};
use crate::error::{Error, Result};
use crate::gaf::{argmax, logistic, logit, softmax, LayeredGaf};

/// Lower clamp for learned base scores; the upper clamp is `1 - MIN_BASE_SCORE`.
pub const MIN_BASE_SCORE: f64 = 1e-6;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;
/// Initial weights are drawn from `U(-INIT_WEIGHT_RANGE, INIT_WEIGHT_RANGE)`.
pub const INIT_WEIGHT_RANGE: f64 = 0.5;

fn bias_limit() -> f64 {
    logit(1.0 - MIN_BASE_SCORE)
}

fn default_max_epochs() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    pub es_patience: usize,
    pub es_tolerance: f64,
    /// Mini-batch size; `None` trains full-batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    /// Iris settings: learning rate 0.03, early-stopping patience 5, tolerance 1e-4, full batch.
    pub fn iris() -> Self {
        TrainConfig {
            learning_rate: 0.03,
            max_epochs: default_max_epochs(),
            es_patience: 5,
            es_tolerance: 1e-4,
            batch_size: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.es_patience < 1 {
            return Err(Error::Config("es_patience must be at least 1".into()));
        }
        if !(self.es_tolerance >= 0.0) {
            return Err(Error::Config(format!(
                "es_tolerance must be non-negative, got {}",
                self.es_tolerance
            )));
        }
        if self.max_epochs < 1 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// A set of labelled binary instances.
#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub rows: Vec<&'a [f64]>,
    pub labels: Vec<usize>,
}

impl<'a> Batch<'a> {
    pub fn new(rows: Vec<&'a [f64]>, labels: Vec<usize>) -> Self {
        Batch { rows, labels }
    }

    pub fn from_indices(data: &'a BinarizedDataset, indices: &[usize]) -> Self {
        Batch {
            rows: indices.iter().map(|&i| data.instances[i].as_slice()).collect(),
            labels: indices.iter().map(|&i| data.labels[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean cross-entropy of the graph's softmax output, plus the per-instance
/// output distributions. Computed through [`LayeredGaf::evaluate`].
pub fn forward_loss(gaf: &LayeredGaf, batch: &Batch) -> Result<(f64, Vec<Vec<f64>>)> {
    if batch.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let mut total = 0.0;
    let mut distributions = Vec::with_capacity(batch.len());
    for (row, &label) in batch.rows.iter().zip(&batch.labels) {
        let interp = gaf.evaluate(row)?;
        let z = &interp.output_preactivations;
        total += log_sum_exp(z) - z[label];
        distributions.push(interp.output_distribution);
    }
    Ok((total / batch.len() as f64, distributions))
}

/// Parameter vector of a graph: biases of non-input arguments in id order,
/// then edge weights in edge order. Base scores are clamped away from 0 and 1.
pub fn parameters(gaf: &LayeredGaf) -> Vec<f64> {
    let limit = bias_limit();
    let mut params: Vec<f64> = gaf.arguments()[gaf.n_inputs()..]
        .iter()
        .map(|a| logit(a.base_score).clamp(-limit, limit))
        .collect();
    params.extend(gaf.edges().iter().map(|e| e.weight));
    params
}

/// Inverse of [`parameters`]: same structure with base scores `logistic(bias)`.
pub fn with_parameters(gaf: &LayeredGaf, params: &[f64]) -> Result<LayeredGaf> {
    let n_bias = gaf.arguments().len() - gaf.n_inputs();
    if params.len() != n_bias + gaf.edges().len() {
        return Err(Error::LengthMismatch(format!(
            "expected {} parameters, got {}",
            n_bias + gaf.edges().len(),
            params.len()
        )));
    }
    let mut base: Vec<f64> = gaf.arguments().iter().map(|a| a.base_score).collect();
    for (slot, &b) in base[gaf.n_inputs()..].iter_mut().zip(&params[..n_bias]) {
        *slot = logistic(b).clamp(MIN_BASE_SCORE, 1.0 - MIN_BASE_SCORE);
    }
    gaf.with_parameters(&base, &params[n_bias..])
}

/// Gradient of the mean cross-entropy with respect to [`parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// One entry per non-input argument, with respect to `logit(base_score)`.
    pub bias: Vec<f64>,
    /// One entry per existing edge.
    pub weights: Vec<f64>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.bias.clone();
        out.extend_from_slice(&self.weights);
        out
    }
}

/// The graph compiled for repeated forward/backward passes over raw parameter vectors.
struct Network {
    n_inputs: usize,
    n_args: usize,
    outputs: std::ops::Range<usize>,
    // (source, edge index) per argument
    incoming: Vec<Vec<(usize, usize)>>,
}

struct Workspace {
    z: Vec<f64>,
    s: Vec<f64>,
    ds: Vec<f64>,
}

impl Network {
    fn compile(gaf: &LayeredGaf) -> Self {
        let n_args = gaf.arguments().len();
        let incoming = (0..n_args)
            .map(|a| {
                gaf.incoming(a)
                    .iter()
                    .map(|&e| (gaf.edges()[e].source, e))
                    .collect()
            })
            .collect();
        Network {
            n_inputs: gaf.n_inputs(),
            n_args,
            outputs: gaf.output_ids(),
            incoming,
        }
    }

    fn n_bias(&self) -> usize {
        self.n_args - self.n_inputs
    }

    fn workspace(&self) -> Workspace {
        Workspace {
            z: vec![0.0; self.n_args],
            s: vec![0.0; self.n_args],
            ds: vec![0.0; self.n_args],
        }
    }

    fn forward(&self, params: &[f64], row: &[f64], ws: &mut Workspace) {
        let (bias, weights) = params.split_at(self.n_bias());
        ws.s[..self.n_inputs].copy_from_slice(row);
        for a in self.n_inputs..self.n_args {
            let mut z = bias[a - self.n_inputs];
            for &(src, e) in &self.incoming[a] {
                z += weights[e] * ws.s[src];
            }
            ws.z[a] = z;
            ws.s[a] = logistic(z);
        }
    }

    /// Cross-entropy of one instance after `forward`.
    fn instance_loss(&self, label: usize, ws: &Workspace) -> f64 {
        let z = &ws.z[self.outputs.clone()];
        log_sum_exp(z) - z[label]
    }

    fn predict(&self, ws: &Workspace) -> usize {
        argmax(&ws.z[self.outputs.clone()])
    }

    /// Adds `scale * d loss / d params` of one instance into `grad`.
    fn backward(&self, params: &[f64], label: usize, scale: f64, ws: &mut Workspace, grad: &mut [f64]) {
        let n_bias = self.n_bias();
        let weights = &params[n_bias..];
        let (gbias, gweights) = grad.split_at_mut(n_bias);
        let p = softmax(&ws.z[self.outputs.clone()]);
        ws.ds.iter_mut().for_each(|v| *v = 0.0);
        for a in (self.n_inputs..self.n_args).rev() {
            let dz = if self.outputs.contains(&a) {
                let k = a - self.outputs.start;
                let target = if k == label { 1.0 } else { 0.0 };
                (p[k] - target) * scale
            } else {
                ws.ds[a] * ws.s[a] * (1.0 - ws.s[a])
            };
            if dz == 0.0 {
                continue;
            }
            gbias[a - self.n_inputs] += dz;
            for &(src, e) in &self.incoming[a] {
                gweights[e] += dz * ws.s[src];
                if src >= self.n_inputs {
                    ws.ds[src] += dz * weights[e];
                }
            }
        }
    }

    fn loss_and_gradient(&self, params: &[f64], rows: &[&[f64]], labels: &[usize], ws: &mut Workspace) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        for (row, &label) in rows.iter().zip(labels) {
            self.forward(params, row, ws);
            loss += self.instance_loss(label, ws);
            self.backward(params, label, scale, ws, &mut grad);
        }
        (loss * scale, grad)
    }

    /// Mean loss and accuracy over `indices` of `data`.
    fn evaluate(&self, params: &[f64], data: &BinarizedDataset, indices: &[usize], ws: &mut Workspace) -> (f64, f64) {
        if indices.is_empty() {
            return (0.0, 0.0);
        }
        let mut loss = 0.0;
        let mut correct = 0usize;
        for &i in indices {
            self.forward(params, &data.instances[i], ws);
            loss += self.instance_loss(data.labels[i], ws);
            if self.predict(ws) == data.labels[i] {
                correct += 1;
            }
        }
        let n = indices.len() as f64;
        (loss / n, correct as f64 / n)
    }
}

/// Exact gradient of [`forward_loss`] by reverse-mode differentiation.
pub fn gradients(gaf: &LayeredGaf, batch: &Batch) -> Result<Gradients> {
    if let Some(row) = batch.rows.iter().find(|r| r.len() != gaf.n_inputs()) {
        return Err(Error::InputShape {
            expected: gaf.n_inputs(),
            actual: row.len(),
        });
    }
    let net = Network::compile(gaf);
    let params = parameters(gaf);
    let n_bias = net.n_bias();
    if batch.is_empty() {
        return Ok(Gradients {
            bias: vec![0.0; n_bias],
            weights: vec![0.0; gaf.edges().len()],
        });
    }
    let mut ws = net.workspace();
    let (_, grad) = net.loss_and_gradient(&params, &batch.rows, &batch.labels, &mut ws);
    Ok(Gradients {
        bias: grad[..n_bias].to_vec(),
        weights: grad[n_bias..].to_vec(),
    })
}

/// First and second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, t: u64, learning_rate: f64) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(state.m.len(), params.len());
    assert!(t >= 1, "adam step counter starts at 1");
    let c1 = 1.0 - ADAM_BETA1.powf(t as f64);
    let c2 = 1.0 - ADAM_BETA2.powf(t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub gaf: LayeredGaf,
    pub history: Vec<EpochRecord>,
    pub epochs_run: usize,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
    pub seed: u64,
}

impl TrainedClassifier {
    pub fn predict(&self, inputs: &[f64]) -> Result<usize> {
        self.gaf.predict(inputs)
    }

    pub fn best_validation_loss(&self) -> f64 {
        self.history[self.best_epoch - 1].validation_loss
    }
}

/// Fraction of `indices` the graph classifies correctly.
pub fn accuracy(gaf: &LayeredGaf, data: &BinarizedDataset, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for &i in indices {
        if gaf.predict(&data.instances[i])? == data.labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

/// Trains a fresh parameterization of `structure` with mini-batch Adam and early stopping.
///
/// Weights start at `U(-0.5, 0.5)` and biases at 0. After every epoch the
/// validation loss is recorded (the training loss stands in when the
/// validation split is empty). Training stops once the monitored loss has not
/// improved by more than `es_tolerance` for `es_patience` epochs in a row, and
/// the parameters of the lowest-loss epoch are returned.
pub fn train(
    structure: &LayeredGaf,
    data: &BinarizedDataset,
    split: &SplitIndices,
    config: &TrainConfig,
) -> Result<TrainedClassifier> {
    config.validate()?;
    if split.train.is_empty() {
        return Err(Error::Config("empty training split".into()));
    }
    if data.n_features() != structure.n_inputs() {
        return Err(Error::InputShape {
            expected: structure.n_inputs(),
            actual: data.n_features(),
        });
    }

    let net = Network::compile(structure);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = vec![0.0; net.n_bias()];
    params.extend(
        (0..structure.edges().len()).map(|_| rng.gen_range(-INIT_WEIGHT_RANGE..INIT_WEIGHT_RANGE)),
    );
    let mut adam = AdamState::new(params.len());
    let mut ws = net.workspace();
    let limit = bias_limit();
    let n_bias = net.n_bias();

    let batch_size = config.batch_size.unwrap_or(split.train.len());
    let mut order = split.train.clone();
    let mut history = Vec::new();
    let mut best_params = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut reference: Option<f64> = None;
    let mut stale = 0;
    let mut step = 0u64;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| data.instances[i].as_slice()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
            let (_, grad) = net.loss_and_gradient(&params, &rows, &labels, &mut ws);
            step += 1;
            adam_step(&mut params, &grad, &mut adam, step, config.learning_rate);
            for b in &mut params[..n_bias] {
                *b = b.clamp(-limit, limit);
            }
        }

        let (train_loss, _) = net.evaluate(&params, data, &split.train, &mut ws);
        let (validation_loss, validation_accuracy) = if split.validation.is_empty() {
            (train_loss, net.evaluate(&params, data, &split.train, &mut ws).1)
        } else {
            net.evaluate(&params, data, &split.validation, &mut ws)
        };
        history.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
            validation_accuracy,
        });

        if validation_loss < best_loss {
            best_loss = validation_loss;
            best_params.clone_from(&params);
            best_epoch = epoch;
        }
        match reference {
            Some(r) if !(validation_loss < r - config.es_tolerance) => {
                stale += 1;
                if stale >= config.es_patience {
                    break;
                }
            }
            _ => {
                reference = Some(validation_loss);
                stale = 0;
            }
        }
    }

    if best_epoch == 0 {
        // every recorded loss was NaN
        return Err(Error::Config("training diverged: non-finite loss".into()));
    }
    let epochs_run = history.len();
    Ok(TrainedClassifier {
        gaf: with_parameters(structure, &best_params)?,
        history,
        epochs_run,
        best_epoch,
        seed: config.seed,
    })
}
