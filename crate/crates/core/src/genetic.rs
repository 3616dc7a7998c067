//! Genetic search over the connection structure of classification GAFs.
//!
//! A chromosome is the concatenation of one bit block per pair of adjacent
//! layers; block `i` is the row-major adjacency matrix between layer `i` and
//! layer `i + 1`. Each individual is decoded, trained by gradient descent and
//! scored by a convex combination of training accuracy and sparsity.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{BinarizedDataset, SplitIndices};
use crate::error::{Error, Result};
use crate::gaf::{layer_offsets, Argument, LayeredGaf, WeightedEdge};
use crate::seeding::derive_seed;
use crate::training::{self, TrainConfig, TrainedClassifier};

/// Number of bits needed for `layer_sizes`: the sum of `s_i * s_{i+1}`.
pub fn possible_connections(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1]).sum()
}

fn block_offsets(layer_sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0];
    for w in layer_sizes.windows(2) {
        out.push(out.last().unwrap() + w[0] * w[1]);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
    layer_sizes: Vec<usize>,
}

impl Chromosome {
    pub fn new(bits: Vec<bool>, layer_sizes: Vec<usize>) -> Result<Self> {
        let expected = possible_connections(&layer_sizes);
        if bits.len() != expected {
            return Err(Error::Codec {
                expected,
                actual: bits.len(),
            });
        }
        Ok(Chromosome { bits, layer_sizes })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_str_bits(bits: &str, layer_sizes: Vec<usize>) -> Result<Self> {
        Self::new(bits.chars().map(|c| c == '1').collect(), layer_sizes)
    }

    pub fn filled(layer_sizes: Vec<usize>, value: bool) -> Self {
        Chromosome {
            bits: vec![value; possible_connections(&layer_sizes)],
            layer_sizes,
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn connection_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Set bits within the block between layer `pair` and `pair + 1`.
    pub fn block_count(&self, pair: usize) -> usize {
        let offsets = block_offsets(&self.layer_sizes);
        self.bits[offsets[pair]..offsets[pair + 1]]
            .iter()
            .filter(|b| **b)
            .count()
    }

    pub fn decode(&self) -> Vec<(usize, usize)> {
        decode(&self.bits, &self.layer_sizes).expect("length checked at construction")
    }

    fn key(&self) -> u64 {
        let words: Vec<u64> = self
            .bits
            .chunks(64)
            .map(|c| c.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
            .collect();
        derive_seed(self.bits.len() as u64, &words)
    }
}

impl std::fmt::Display for Chromosome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Edges `(source id, target id)` encoded by `bits`. Bit `offset(i) + a * s_{i+1} + b`
/// connects argument `a` of layer `i` to argument `b` of layer `i + 1`.
pub fn decode(bits: &[bool], layer_sizes: &[usize]) -> Result<Vec<(usize, usize)>> {
    let expected = possible_connections(layer_sizes);
    if bits.len() != expected {
        return Err(Error::Codec {
            expected,
            actual: bits.len(),
        });
    }
    let ids = layer_offsets(layer_sizes);
    let blocks = block_offsets(layer_sizes);
    let mut edges = Vec::new();
    for i in 0..layer_sizes.len().saturating_sub(1) {
        let next = layer_sizes[i + 1];
        for (k, _) in bits[blocks[i]..blocks[i + 1]].iter().enumerate().filter(|(_, b)| **b) {
            edges.push((ids[i] + k / next, ids[i + 1] + k % next));
        }
    }
    Ok(edges)
}

/// Names of the arguments a chromosome is decoded onto.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTemplate {
    pub layer_names: Vec<Vec<String>>,
    pub class_labels: Vec<String>,
}

impl GraphTemplate {
    /// Inputs named after the binary features, hidden arguments `h1, h2, ...`
    /// (`h<layer>.<i>` with several hidden layers), outputs named after the classes.
    pub fn for_dataset(data: &BinarizedDataset, hidden: &[usize]) -> Self {
        let mut layer_names = vec![data.input_names.clone()];
        for (l, &size) in hidden.iter().enumerate() {
            layer_names.push(
                (1..=size)
                    .map(|i| {
                        if hidden.len() == 1 {
                            format!("h{i}")
                        } else {
                            format!("h{}.{}", l + 1, i)
                        }
                    })
                    .collect(),
            );
        }
        layer_names.push(data.label_names.clone());
        GraphTemplate {
            layer_names,
            class_labels: data.label_names.clone(),
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layer_names.iter().map(Vec::len).collect()
    }

    /// Graph with the chromosome's edges, zero weights and neutral base scores.
    pub fn instantiate(&self, chromosome: &Chromosome) -> Result<LayeredGaf> {
        if chromosome.layer_sizes() != self.layer_sizes().as_slice() {
            return Err(Error::Codec {
                expected: possible_connections(&self.layer_sizes()),
                actual: chromosome.len(),
            });
        }
        let layers = self
            .layer_names
            .iter()
            .map(|names| names.iter().map(|n| Argument::new(n.clone(), 0.5)).collect())
            .collect();
        let edges = chromosome
            .decode()
            .into_iter()
            .map(|(s, t)| WeightedEdge::new(s, t, 0.0))
            .collect();
        LayeredGaf::new(layers, edges, self.class_labels.clone())
    }
}

/// `(1 - lambda) * accuracy + lambda * (possible - connections) / possible`.
pub fn fitness(accuracy: f64, connections: usize, possible: usize, lambda: f64) -> f64 {
    debug_assert!(possible > 0 && connections <= possible);
    let sparsity = (possible - connections) as f64 / possible as f64;
    (1.0 - lambda) * accuracy + lambda * sparsity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    /// Generation cap, counting the initial population as generation 0.
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitist_fraction: f64,
    pub lambda: f64,
    #[serde(default = "default_q")]
    pub tournament_size: usize,
    #[serde(default = "default_k")]
    pub crossover_points: usize,
    /// Initial number of connections per layer-pair block.
    pub n_conn_init: Vec<usize>,
    pub ga_patience: usize,
    pub ga_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_q() -> usize {
    3
}

fn default_k() -> usize {
    2
}

impl GaConfig {
    pub fn iris() -> Self {
        GaConfig {
            population_size: 20,
            generations: 20,
            crossover_rate: 0.9,
            mutation_rate: 1e-3,
            elitist_fraction: 0.1,
            lambda: 0.1,
            tournament_size: 3,
            crossover_points: 2,
            n_conn_init: vec![12, 6],
            ga_patience: 5,
            ga_tolerance: 1e-4,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.population_size < 2 {
            return fail(format!("population_size must be at least 2, got {}", self.population_size));
        }
        if self.tournament_size < 1 || self.tournament_size > self.population_size {
            return fail(format!(
                "tournament_size must be in [1, {}], got {}",
                self.population_size, self.tournament_size
            ));
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("lambda", self.lambda),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.elitist_fraction) {
            return fail(format!("elitist_fraction must be in [0, 1), got {}", self.elitist_fraction));
        }
        if self.crossover_points < 1 {
            return fail("crossover_points must be at least 1".into());
        }
        if self.generations < 1 {
            return fail("generations must be at least 1".into());
        }
        if self.ga_patience < 1 {
            return fail("ga_patience must be at least 1".into());
        }
        if !(self.ga_tolerance >= 0.0) {
            return fail(format!("ga_tolerance must be non-negative, got {}", self.ga_tolerance));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        elite_count(self.elitist_fraction, self.population_size)
    }
}

fn elite_count(fraction: f64, n: usize) -> usize {
    // guard against 0.1 * 30 = 3.0000000000000004
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Something that can be ranked: higher fitness wins, then fewer connections.
pub trait Ranked {
    fn fitness(&self) -> f64;
    fn connections(&self) -> usize;
}

impl Ranked for (f64, usize) {
    fn fitness(&self) -> f64 {
        self.0
    }

    fn connections(&self) -> usize {
        self.1
    }
}

/// True when `a` (at index `ia`) beats `b` (at index `ib`).
fn beats<T: Ranked>(a: &T, ia: usize, b: &T, ib: usize) -> bool {
    if a.fitness() != b.fitness() {
        return a.fitness() > b.fitness();
    }
    if a.connections() != b.connections() {
        return a.connections() < b.connections();
    }
    ia < ib
}

/// Index of the best member of `population`.
pub fn best_index<T: Ranked>(population: &[T]) -> usize {
    let mut best = 0;
    for i in 1..population.len() {
        if beats(&population[i], i, &population[best], best) {
            best = i;
        }
    }
    best
}

/// Draws `q` members without replacement and returns the index of the best.
pub fn tournament_select<T: Ranked, R: Rng + ?Sized>(population: &[T], q: usize, rng: &mut R) -> usize {
    assert!(!population.is_empty() && q >= 1 && q <= population.len());
    let mut best: Option<usize> = None;
    for i in sample(rng, population.len(), q) {
        best = match best {
            Some(b) if !beats(&population[i], i, &population[b], b) => Some(b),
            _ => Some(i),
        };
    }
    best.unwrap()
}

/// Exchanges the segments delimited by the sorted cut `points`. Child 1 starts
/// with parent 1's first segment, child 2 with parent 2's.
pub fn crossover_at(parent1: &Chromosome, parent2: &Chromosome, points: &[usize]) -> (Chromosome, Chromosome) {
    assert_eq!(parent1.len(), parent2.len());
    let mut c1 = parent1.clone();
    let mut c2 = parent2.clone();
    let mut swap = false;
    let mut cuts = points.iter().peekable();
    for l in 0..parent1.len() {
        while cuts.peek().is_some_and(|&&p| p == l) {
            swap = !swap;
            cuts.next();
        }
        if swap {
            c1.bits[l] = parent2.bits[l];
            c2.bits[l] = parent1.bits[l];
        }
    }
    (c1, c2)
}

/// k-point crossover with `k` distinct cut points drawn from `1..len`.
pub fn k_point_crossover<R: Rng + ?Sized>(
    parent1: &Chromosome,
    parent2: &Chromosome,
    k: usize,
    rng: &mut R,
) -> (Chromosome, Chromosome) {
    let len = parent1.len();
    assert!(k >= 1 && k < len, "need 1 <= k < chromosome length");
    let mut points: Vec<usize> = sample(rng, len - 1, k).into_iter().map(|p| p + 1).collect();
    points.sort_unstable();
    crossover_at(parent1, parent2, &points)
}

/// Flips every bit independently with probability `rate`.
pub fn flip_mutate<R: Rng + ?Sized>(chromosome: &Chromosome, rate: f64, rng: &mut R) -> Chromosome {
    let mut out = chromosome.clone();
    for b in &mut out.bits {
        if rng.gen_bool(rate) {
            *b = !*b;
        }
    }
    out
}

/// Random chromosome with exactly `n_conn_init[i]` set bits in block `i`.
pub fn random_chromosome<R: Rng + ?Sized>(layer_sizes: &[usize], n_conn_init: &[usize], rng: &mut R) -> Result<Chromosome> {
    let pairs = layer_sizes.len().saturating_sub(1);
    if n_conn_init.len() != pairs {
        return Err(Error::Config(format!(
            "n_conn_init has {} entries for {} layer pairs",
            n_conn_init.len(),
            pairs
        )));
    }
    let offsets = block_offsets(layer_sizes);
    let mut bits = vec![false; possible_connections(layer_sizes)];
    for (i, &count) in n_conn_init.iter().enumerate() {
        let size = offsets[i + 1] - offsets[i];
        if count > size {
            return Err(Error::Config(format!(
                "n_conn_init[{i}] = {count} exceeds the {size} possible connections"
            )));
        }
        for k in sample(rng, size, count) {
            bits[offsets[i] + k] = true;
        }
    }
    Chromosome::new(bits, layer_sizes.to_vec())
}

pub fn init_population<R: Rng + ?Sized>(config: &GaConfig, layer_sizes: &[usize], rng: &mut R) -> Result<Vec<Chromosome>> {
    (0..config.population_size)
        .map(|_| random_chromosome(layer_sizes, &config.n_conn_init, rng))
        .collect()
}

/// Keeps the best `ceil(elitist_fraction * N)` of `old` unchanged and fills the
/// rest with `offspring` in order.
pub fn elitist_replace<T: Ranked + Clone>(old: &[T], offspring: Vec<T>, elitist_fraction: f64) -> Result<Vec<T>> {
    let n = old.len();
    let elites = elite_count(elitist_fraction, n).min(n);
    let needed = n - elites;
    if offspring.len() < needed {
        return Err(Error::PopulationSize {
            needed,
            available: offspring.len(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if beats(&old[a], a, &old[b], b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let mut next: Vec<T> = order[..elites].iter().map(|&i| old[i].clone()).collect();
    next.extend(offspring.into_iter().take(needed));
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct EvaluatedIndividual {
    pub chromosome: Chromosome,
    pub fitness: f64,
    pub train_accuracy: f64,
    pub connections: usize,
    pub possible_connections: usize,
    pub lambda: f64,
    pub classifier: Arc<TrainedClassifier>,
}

impl EvaluatedIndividual {
    pub fn recompute_fitness(&self) -> f64 {
        fitness(self.train_accuracy, self.connections, self.possible_connections, self.lambda)
    }
}

impl Ranked for EvaluatedIndividual {
    fn fitness(&self) -> f64 {
        self.fitness
    }

    fn connections(&self) -> usize {
        self.connections
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_accuracy: f64,
    pub best_connections: usize,
}

pub fn write_generation_log<W: Write>(writer: W, log: &[GenerationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for record in log {
        w.serialize(record)?;
    }
    w.flush().map_err(|e| Error::io("generation log", e))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub best: EvaluatedIndividual,
    pub log: Vec<GenerationRecord>,
    pub generations_run: usize,
}

struct Evaluator<'a> {
    template: &'a GraphTemplate,
    data: &'a BinarizedDataset,
    split: &'a SplitIndices,
    train: &'a TrainConfig,
    lambda: f64,
    master_seed: u64,
}

impl Evaluator<'_> {
    /// Trains every chromosome, once per distinct chromosome. The training seed
    /// depends on the master seed, the generation and the chromosome itself.
    fn evaluate(&self, generation: usize, chromosomes: Vec<Chromosome>) -> Result<Vec<EvaluatedIndividual>> {
        let mut unique: Vec<&Chromosome> = Vec::new();
        let mut slot: HashMap<&Chromosome, usize> = HashMap::new();
        let index: Vec<usize> = chromosomes
            .iter()
            .map(|c| {
                *slot.entry(c).or_insert_with(|| {
                    unique.push(c);
                    unique.len() - 1
                })
            })
            .collect();
        let results: Vec<EvaluatedIndividual> = unique
            .par_iter()
            .map(|c| self.evaluate_one(generation, c))
            .collect::<Result<_>>()?;
        Ok(index.into_iter().map(|i| results[i].clone()).collect())
    }

    fn evaluate_one(&self, generation: usize, chromosome: &Chromosome) -> Result<EvaluatedIndividual> {
        let structure = self.template.instantiate(chromosome)?;
        let config = TrainConfig {
            seed: derive_seed(self.master_seed, &[generation as u64, chromosome.key()]),
            ..self.train.clone()
        };
        let trained = training::train(&structure, self.data, self.split, &config)?;
        let train_accuracy = training::accuracy(&trained.gaf, self.data, &self.split.train)?;
        let possible = chromosome.len();
        let connections = chromosome.connection_count();
        Ok(EvaluatedIndividual {
            chromosome: chromosome.clone(),
            fitness: fitness(train_accuracy, connections, possible, self.lambda),
            train_accuracy,
            connections,
            possible_connections: possible,
            lambda: self.lambda,
            classifier: Arc::new(trained),
        })
    }
}

fn record(generation: usize, population: &[EvaluatedIndividual]) -> GenerationRecord {
    let best = &population[best_index(population)];
    GenerationRecord {
        generation,
        best_fitness: best.fitness,
        mean_fitness: population.iter().map(|i| i.fitness).sum::<f64>() / population.len() as f64,
        best_accuracy: best.train_accuracy,
        best_connections: best.connections,
    }
}

/// Runs the genetic search with one hidden layer per entry of `hidden`.
///
/// Each generation selects `N - elites` parents by q-tournaments over the whole
/// population, pairs consecutive parents, recombines each pair with
/// probability `crossover_rate`, mutates the children and replaces the
/// population elitistically. The search stops when the best fitness has
/// improved by at most `ga_tolerance` for `ga_patience` consecutive
/// generations, or at the generation cap.
pub fn evolve(
    data: &BinarizedDataset,
    split: &SplitIndices,
    hidden: &[usize],
    ga: &GaConfig,
    train: &TrainConfig,
) -> Result<EvolutionResult> {
    ga.validate()?;
    train.validate()?;
    let template = GraphTemplate::for_dataset(data, hidden);
    let layer_sizes = template.layer_sizes();
    if possible_connections(&layer_sizes) == 0 {
        return Err(Error::Config("graph has no possible connections".into()));
    }
    let evaluator = Evaluator {
        template: &template,
        data,
        split,
        train,
        lambda: ga.lambda,
        master_seed: ga.seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ga.seed, &[u64::MAX]));
    let at = |generation: usize| move |e: Error| Error::Generation {
        generation,
        source: Box::new(e),
    };

    let initial = init_population(ga, &layer_sizes, &mut rng).map_err(at(0))?;
    let mut population = evaluator.evaluate(0, initial).map_err(at(0))?;
    let mut log = vec![record(0, &population)];
    let mut best = population[best_index(&population)].clone();
    let mut reference = best.fitness;
    let mut stale = 0;

    let n = ga.population_size;
    let n_offspring = n - ga.elite_count();
    for generation in 1..ga.generations {
        let pool: Vec<usize> = (0..n_offspring)
            .map(|_| tournament_select(&population, ga.tournament_size, &mut rng))
            .collect();
        let mut children = Vec::with_capacity(n_offspring + 1);
        for pair in pool.chunks(2) {
            let p1 = &population[pair[0]].chromosome;
            match pair.get(1) {
                Some(&j) => {
                    let p2 = &population[j].chromosome;
                    let recombine = p1.len() > ga.crossover_points && rng.gen_bool(ga.crossover_rate);
                    let (c1, c2) = if recombine {
                        k_point_crossover(p1, p2, ga.crossover_points, &mut rng)
                    } else {
                        (p1.clone(), p2.clone())
                    };
                    children.push(c1);
                    children.push(c2);
                }
                None => children.push(p1.clone()),
            }
        }
        children.truncate(n_offspring);
        let children: Vec<Chromosome> = children
            .iter()
            .map(|c| flip_mutate(c, ga.mutation_rate, &mut rng))
            .collect();

        let offspring = evaluator.evaluate(generation, children).map_err(at(generation))?;
        population = elitist_replace(&population, offspring, ga.elitist_fraction).map_err(at(generation))?;
        log.push(record(generation, &population));

        let current = &population[best_index(&population)];
        if beats(current, 1, &best, 0) {
            best = current.clone();
        }
        if best.fitness - reference > ga.ga_tolerance {
            reference = best.fitness;
            stale = 0;
        } else {
            stale += 1;
            if stale >= ga.ga_patience {
                break;
            }
        }
    }

    let generations_run = log.len();
    Ok(EvolutionResult {
        best,
        log,
        generations_run,
    })
}
