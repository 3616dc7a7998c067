//! Experiment configuration and the commands behind the `gaf` binary.
//!
//! Every run `r` of an experiment derives its own seed from the master seed;
//! the data split, the genetic search and the baselines of that run all use
//! seeds derived from it, so a run is reproducible in isolation and runs can
//! execute in parallel without changing any output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, evaluate_metrics, DecisionTree, Metrics};
use crate::dataset::{load_csv, BinFit, BinarizedDataset, Binarizer, RawDataset, Schema, SplitIndices};
use crate::error::{Error, Result};
use crate::export::{self, ModelMetadata};
use crate::gaf::LayeredGaf;
use crate::genetic::{self, write_generation_log, GaConfig};
use crate::seeding::derive_seed;
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub path: PathBuf,
    pub schema: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeFeatures {
    #[default]
    Binarized,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    #[serde(default = "one")]
    pub tree_min_leaf: usize,
    #[serde(default)]
    pub tree_features: TreeFeatures,
}

fn one() -> usize {
    1
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            tree_min_leaf: 1,
            tree_features: TreeFeatures::Binarized,
        }
    }
}

fn default_bins() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    /// Paths are relative to the config file.
    pub dataset: DatasetRef,
    #[serde(default = "default_bins")]
    pub bins_per_numeric: usize,
    #[serde(default)]
    pub bin_fit: BinFit,
    pub hidden_neurons: usize,
    pub runs: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub ga: GaConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
}

impl ExperimentConfig {
    /// Reads a config and resolves its relative paths against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.dataset.path, &mut config.dataset.schema, &mut config.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.hidden_neurons < 1 {
            return Err(Error::Config("hidden_neurons must be at least 1".into()));
        }
        for p in [&self.dataset.path, &self.dataset.schema] {
            if !p.is_file() {
                return Err(Error::Config(format!("file not found: {}", p.display())));
            }
        }
        self.ga.validate()?;
        self.train.validate()
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, &[run as u64])
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub bin_fit: Option<BinFit>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(r) = self.runs {
            config.runs = r;
        }
        if let Some(o) = &self.output_dir {
            config.output_dir = o.clone();
        }
        if let Some(l) = self.lambda {
            config.ga.lambda = l;
        }
        if let Some(b) = self.bin_fit {
            config.bin_fit = b;
        }
    }
}

/// Raw data plus the binarized view and split for one run.
pub struct RunData {
    pub raw: RawDataset,
    pub data: BinarizedDataset,
    pub split: SplitIndices,
    pub seed: u64,
}

pub fn load_raw(config: &ExperimentConfig) -> Result<RawDataset> {
    let schema = Schema::from_file(&config.dataset.schema)?;
    load_csv(&config.dataset.path, &schema)
}

pub fn prepare_run(config: &ExperimentConfig, raw: &RawDataset, run: usize) -> Result<RunData> {
    let seed = config.run_seed(run);
    let split = crate::dataset::split_stratified(raw.n_instances(), &raw.labels, derive_seed(seed, &[1]))?;
    let fit_rows = match config.bin_fit {
        BinFit::All => None,
        BinFit::Train => Some(split.train.as_slice()),
    };
    let data = Binarizer::fit(raw, fit_rows, config.bins_per_numeric)?.transform(raw);
    Ok(RunData {
        raw: raw.clone(),
        data,
        split,
        seed,
    })
}

pub fn test_metrics(gaf: &LayeredGaf, data: &BinarizedDataset, test: &[usize]) -> Result<Metrics> {
    let predictions = test
        .iter()
        .map(|&i| gaf.predict(&data.instances[i]))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<usize> = test.iter().map(|&i| data.labels[i]).collect();
    evaluate_metrics(&predictions, &truth, data.n_classes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run: usize,
    pub seed: u64,
    pub test_accuracy: f64,
    pub test_precision_macro: f64,
    pub test_recall_macro: f64,
    pub n_connections: usize,
    pub generations_run: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

pub const SUMMARY_COLUMNS: [&str; 8] = [
    "run",
    "seed",
    "test_accuracy",
    "test_precision_macro",
    "test_recall_macro",
    "n_connections",
    "generations_run",
    "wall_seconds",
];

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl Summary {
    pub fn mean_accuracy(&self) -> f64 {
        mean_std(&self.column(|r| r.test_accuracy)).0
    }

    pub fn mean_connections(&self) -> f64 {
        mean_std(&self.column(|r| r.n_connections as f64)).0
    }

    pub fn column(&self, f: impl Fn(&SummaryRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    /// CSV with one row per run followed by `mean` and `std` rows. Wall-clock
    /// times are only written when `timing` is set; otherwise the column stays
    /// empty so the file is reproducible byte for byte.
    pub fn to_csv(&self, timing: bool) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SUMMARY_COLUMNS)?;
        let secs = |v: f64| if timing { format!("{v:.3}") } else { String::new() };
        for r in &self.rows {
            w.write_record([
                r.run.to_string(),
                r.seed.to_string(),
                r.test_accuracy.to_string(),
                r.test_precision_macro.to_string(),
                r.test_recall_macro.to_string(),
                r.n_connections.to_string(),
                r.generations_run.to_string(),
                secs(r.wall_seconds),
            ])?;
        }
        let stats = [
            mean_std(&self.column(|r| r.test_accuracy)),
            mean_std(&self.column(|r| r.test_precision_macro)),
            mean_std(&self.column(|r| r.test_recall_macro)),
            mean_std(&self.column(|r| r.n_connections as f64)),
            mean_std(&self.column(|r| r.generations_run as f64)),
            mean_std(&self.column(|r| r.wall_seconds)),
        ];
        for (label, pick) in [("mean", 0usize), ("std", 1)] {
            let v = |i: usize| if pick == 0 { stats[i].0 } else { stats[i].1 };
            w.write_record([
                label.to_string(),
                String::new(),
                v(0).to_string(),
                v(1).to_string(),
                v(2).to_string(),
                v(3).to_string(),
                v(4).to_string(),
                secs(v(5)),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("summary", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Everything one GAF run produces.
pub struct GafRun {
    pub row: SummaryRow,
    pub model_json: String,
    pub generation_log_csv: String,
    pub test_metrics: Metrics,
}

pub fn run_gaf(config: &ExperimentConfig, raw: &RawDataset, run: usize) -> Result<GafRun> {
    let start = Instant::now();
    let prepared = prepare_run(config, raw, run)?;
    let ga = GaConfig {
        seed: derive_seed(prepared.seed, &[2]),
        ..config.ga.clone()
    };
    let result = genetic::evolve(
        &prepared.data,
        &prepared.split,
        &[config.hidden_neurons],
        &ga,
        &config.train,
    )?;
    let gaf = &result.best.classifier.gaf;
    let metrics = test_metrics(gaf, &prepared.data, &prepared.split.test)?;
    let metadata = ModelMetadata {
        seed: Some(prepared.seed),
        config: Some(serde_json::to_value(config)?),
        fitness: Some(result.best.fitness),
        train_accuracy: Some(result.best.train_accuracy),
        test_metrics: Some(metrics.clone()),
        epochs_run: Some(result.best.classifier.epochs_run),
        generations_run: Some(result.generations_run),
    };
    let mut log = Vec::new();
    write_generation_log(&mut log, &result.log)?;
    Ok(GafRun {
        row: SummaryRow {
            run,
            seed: prepared.seed,
            test_accuracy: metrics.accuracy,
            test_precision_macro: metrics.macro_precision,
            test_recall_macro: metrics.macro_recall,
            n_connections: gaf.connection_count(),
            generations_run: result.generations_run,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        model_json: export::to_json(gaf, &metadata)?,
        generation_log_csv: String::from_utf8(log).expect("csv output is utf-8"),
        test_metrics: metrics,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs `config.runs` seeded genetic searches and writes, under the output
/// directory, `run_XX/model.json`, `run_XX/generations.csv`, `summary.csv` and
/// `config.json` (the resolved config).
pub fn cmd_train(config: &ExperimentConfig, timing: bool) -> Result<Summary> {
    config.validate()?;
    let raw = load_raw(config)?;
    let runs: Vec<GafRun> = (0..config.runs)
        .into_par_iter()
        .map(|r| run_gaf(config, &raw, r))
        .collect::<Result<_>>()?;
    let out = &config.output_dir;
    write(&out.join("config.json"), &serde_json::to_string_pretty(config)?)?;
    for run in &runs {
        let dir = out.join(format!("run_{:02}", run.row.run));
        write(&dir.join("model.json"), &run.model_json)?;
        write(&dir.join("generations.csv"), &run.generation_log_csv)?;
    }
    let summary = Summary {
        rows: runs.into_iter().map(|r| r.row).collect(),
    };
    write(&out.join("summary.csv"), &summary.to_csv(timing)?)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Logistic,
    Tree { max_depth: Option<usize> },
}

impl BaselineKind {
    pub fn dir_name(&self) -> String {
        match self {
            BaselineKind::Logistic => "baseline-logistic".into(),
            BaselineKind::Tree { max_depth: None } => "baseline-tree".into(),
            BaselineKind::Tree { max_depth: Some(d) } => format!("baseline-tree-depth{d}"),
        }
    }
}

pub struct BaselineRun {
    pub row: SummaryRow,
    pub model_json: String,
}

fn tree_metrics(tree: &DecisionTree, x: &[Vec<f64>], labels: &[usize], test: &[usize], n_classes: usize) -> Result<Metrics> {
    let predictions: Vec<usize> = test.iter().map(|&i| tree.predict(&x[i])).collect();
    let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
    evaluate_metrics(&predictions, &truth, n_classes)
}

pub fn run_baseline(config: &ExperimentConfig, raw: &RawDataset, run: usize, kind: BaselineKind) -> Result<BaselineRun> {
    let start = Instant::now();
    let prepared = prepare_run(config, raw, run)?;
    let (metrics, size, model_json) = match kind {
        BaselineKind::Logistic => {
            let train = TrainConfig {
                seed: derive_seed(prepared.seed, &[3]),
                ..config.train.clone()
            };
            let trained = baselines::train_logistic(&prepared.data, &prepared.split, &train)?;
            let metrics = test_metrics(&trained.gaf, &prepared.data, &prepared.split.test)?;
            let metadata = ModelMetadata {
                seed: Some(train.seed),
                config: Some(serde_json::to_value(config)?),
                test_metrics: Some(metrics.clone()),
                epochs_run: Some(trained.epochs_run),
                ..Default::default()
            };
            let json = export::to_json(&trained.gaf, &metadata)?;
            (metrics, trained.gaf.connection_count(), json)
        }
        BaselineKind::Tree { max_depth } => {
            let owned;
            let x: &[Vec<f64>] = match config.baseline.tree_features {
                TreeFeatures::Binarized => &prepared.data.instances,
                TreeFeatures::Raw => {
                    owned = prepared.raw.numeric_matrix().1;
                    &owned
                }
            };
            let tree = baselines::train_tree_on(
                x,
                &prepared.data.labels,
                prepared.data.n_classes(),
                &prepared.split.train,
                max_depth,
                config.baseline.tree_min_leaf,
            )?;
            let metrics = tree_metrics(&tree, x, &prepared.data.labels, &prepared.split.test, prepared.data.n_classes())?;
            (metrics, tree.split_count(), serde_json::to_string_pretty(&tree)?)
        }
    };
    Ok(BaselineRun {
        row: SummaryRow {
            run,
            seed: prepared.seed,
            test_accuracy: metrics.accuracy,
            test_precision_macro: metrics.macro_precision,
            test_recall_macro: metrics.macro_recall,
            n_connections: size,
            generations_run: 0,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        model_json,
    })
}

/// Baseline counterpart of [`cmd_train`]; writes into `<output_dir>/baseline-<kind>/`.
/// For trees `n_connections` holds the number of split nodes.
pub fn cmd_baseline(config: &ExperimentConfig, kind: BaselineKind, timing: bool) -> Result<Summary> {
    config.validate()?;
    let raw = load_raw(config)?;
    let runs: Vec<BaselineRun> = (0..config.runs)
        .into_par_iter()
        .map(|r| run_baseline(config, &raw, r, kind))
        .collect::<Result<_>>()?;
    let out = config.output_dir.join(kind.dir_name());
    for run in &runs {
        write(&out.join(format!("run_{:02}", run.row.run)).join("model.json"), &run.model_json)?;
    }
    let summary = Summary {
        rows: runs.into_iter().map(|r| r.row).collect(),
    };
    write(&out.join("summary.csv"), &summary.to_csv(timing)?)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

pub fn load_model(path: impl AsRef<Path>) -> Result<export::StoredModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    export::from_json(&text)
}

/// Re-emits a stored model as DOT or normalized JSON.
pub fn cmd_export(model: &Path, format: ExportFormat, prune_below: f64, out: &Path) -> Result<()> {
    if !(prune_below >= 0.0) {
        return Err(Error::Config(format!("prune_below must be non-negative, got {prune_below}")));
    }
    let stored = load_model(model)?;
    let text = match format {
        ExportFormat::Dot => export::to_dot(&stored.gaf, prune_below),
        ExportFormat::Json => export::to_json(&stored.gaf, &stored.metadata)?,
    };
    write(out, &text)
}

/// Strength trajectory as CSV: an `iteration` column followed by one column per argument.
pub fn trajectory_csv(gaf: &LayeredGaf, instance: &[f64], iterations: usize) -> Result<String> {
    let trajectory = gaf.strength_trajectory(instance, iterations)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iteration".to_string()];
    header.extend(gaf.arguments().iter().map(|a| a.name.clone()));
    w.write_record(&header)?;
    for (i, strengths) in trajectory.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(strengths.iter().map(|s| s.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("trajectory", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_instance(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("instance value {:?} is not a number", v.trim())))
        })
        .collect()
}

pub fn cmd_run_semantics(model: &Path, instance: &[f64], iterations: usize, out: Option<&Path>) -> Result<String> {
    let stored = load_model(model)?;
    let csv = trajectory_csv(&stored.gaf, instance, iterations)?;
    if let Some(path) = out {
        write(path, &csv)?;
    }
    Ok(csv)
}
