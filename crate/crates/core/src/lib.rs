//! Sparse, interpretable gradual argumentation classifiers.
//!
//! A classification GAF is a layered graph of arguments: binary feature
//! arguments at the bottom, meta-arguments in a hidden layer and one argument
//! per class at the top. Positive edge weights are supports, negative ones
//! attacks. Under the MLP-based semantics such a graph is a sparse multilayer
//! perceptron, so its base scores and weights can be learned by gradient
//! descent while a genetic algorithm searches for a sparse structure.
//!
//! | module | contents |
//! |---|---|
//! | [`gaf`] | graphs, semantics, strength trajectories |
//! | [`dataset`] | CSV loading, binarization, stratified splits |
//! | [`training`] | cross-entropy, backpropagation, Adam, early stopping |
//! | [`genetic`] | chromosomes, operators, fitness, the evolution loop |
//! | [`baselines`] | logistic regression, decision trees, metrics |
//! | [`export`] | JSON model documents and DOT rendering |
//! | [`experiment`] | experiment configs and the commands behind the `gaf` binary |

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod export;
pub mod gaf;
pub mod genetic;
pub mod seeding;
pub mod training;

pub use error::{Error, Result};
pub use gaf::{Argument, Interpretation, LayeredGaf, Polarity, WeightedEdge};
