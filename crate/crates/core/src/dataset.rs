//! Tabular data ingestion, binarization into input arguments, and stratified splits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Number of equal-frequency bins for a numeric column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Explicit cut points for a numeric column; overrides `bins`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
}

fn default_missing() -> Option<String> {
    Some("?".to_string())
}

fn default_delimiter() -> char {
    ','
}

/// Declares how a CSV file is read: column kinds in file order, which column
/// holds the class label, and how missing values are marked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub label: String,
    /// Allowed class labels in class-index order; when absent the sorted
    /// distinct labels of the file are used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    /// Rows containing this value in any field are dropped. `null` disables dropping.
    #[serde(default = "default_missing")]
    pub missing_marker: Option<String>,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

impl Schema {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {}", path.display(), e)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
    Binary(Vec<bool>),
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical(_) => ColumnKind::Categorical,
            Column::Binary(_) => ColumnKind::Binary,
        }
    }
}

/// Feature columns (label excluded) with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub specs: Vec<ColumnSpec>,
    pub columns: Vec<Column>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    pub dropped_rows: usize,
}

impl RawDataset {
    pub fn n_instances(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Features as a real matrix: numeric columns unchanged, categorical columns
    /// one-hot encoded, binary columns as 0/1. Used by trees on raw features.
    pub fn numeric_matrix(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let n = self.n_instances();
        let mut names = Vec::new();
        let mut rows = vec![Vec::new(); n];
        for (spec, column) in self.specs.iter().zip(&self.columns) {
            match column {
                Column::Numeric(v) => {
                    names.push(spec.name.clone());
                    for (row, x) in rows.iter_mut().zip(v) {
                        row.push(*x);
                    }
                }
                Column::Binary(v) => {
                    names.push(spec.name.clone());
                    for (row, x) in rows.iter_mut().zip(v) {
                        row.push(if *x { 1.0 } else { 0.0 });
                    }
                }
                Column::Categorical(v) => {
                    let cats: BTreeSet<&String> = v.iter().collect();
                    for cat in cats {
                        names.push(format!("{}={}", spec.name, cat));
                        for (row, x) in rows.iter_mut().zip(v) {
                            row.push(if x == cat { 1.0 } else { 0.0 });
                        }
                    }
                }
            }
        }
        (names, rows)
    }
}

fn parse_binary(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "t" | "y" => Some(true),
        "0" | "false" | "no" | "f" | "n" => Some(false),
        _ => None,
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, &path.display().to_string(), schema)
}

/// Parses CSV text under `schema`. `source` names the input in error messages.
pub fn parse_csv<R: Read>(reader: R, source: &str, schema: &Schema) -> Result<RawDataset> {
    let label_idx = schema
        .columns
        .iter()
        .position(|c| c.name == schema.label)
        .ok_or_else(|| Error::Schema(format!("label column {:?} not declared", schema.label)))?;
    let mut seen = BTreeSet::new();
    for c in &schema.columns {
        if !seen.insert(&c.name) {
            return Err(Error::Schema(format!("duplicate column {:?}", c.name)));
        }
    }
    if !schema.delimiter.is_ascii() {
        return Err(Error::Schema("delimiter must be an ASCII character".into()));
    }

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .delimiter(schema.delimiter as u8)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let arity = schema.columns.len();
    let feature_specs: Vec<&ColumnSpec> = schema
        .columns
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, c)| c)
        .collect();
    let mut columns: Vec<Column> = feature_specs
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => Column::Numeric(Vec::new()),
            ColumnKind::Categorical => Column::Categorical(Vec::new()),
            ColumnKind::Binary => Column::Binary(Vec::new()),
        })
        .collect();
    let mut raw_labels = Vec::new();
    let mut dropped = 0;
    let base_row = if schema.has_header { 2 } else { 1 };

    for (i, record) in rdr.records().enumerate() {
        let row = base_row + i;
        let record = record.map_err(|e| Error::Parse {
            path: source.to_string(),
            row,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != arity {
            return Err(Error::Parse {
                path: source.to_string(),
                row,
                message: format!("expected {} fields, found {}", arity, record.len()),
            });
        }
        if let Some(marker) = &schema.missing_marker {
            if record.iter().any(|f| f == marker) {
                dropped += 1;
                continue;
            }
        }
        let mut feature = 0;
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let bad = |kind: &str| Error::Parse {
                path: source.to_string(),
                row,
                message: format!("{:?} is not a {} value for column {:?}", field, kind, schema.columns[j].name),
            };
            match &mut columns[feature] {
                Column::Numeric(v) => {
                    let x: f64 = field.parse().map_err(|_| bad("numeric"))?;
                    if !x.is_finite() {
                        return Err(bad("finite numeric"));
                    }
                    v.push(x);
                }
                Column::Categorical(v) => v.push(field.to_string()),
                Column::Binary(v) => v.push(parse_binary(field).ok_or_else(|| bad("binary"))?),
            }
            feature += 1;
        }
    }

    if raw_labels.is_empty() {
        return Err(Error::Parse {
            path: source.to_string(),
            row: base_row,
            message: "no data rows".into(),
        });
    }

    let label_names: Vec<String> = match &schema.classes {
        Some(classes) => classes.clone(),
        None => raw_labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let index: BTreeMap<&str, usize> = label_names
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let labels = raw_labels
        .iter()
        .map(|l| {
            index
                .get(l.as_str())
                .copied()
                .ok_or_else(|| Error::Schema(format!("unknown class label {:?}", l)))
        })
        .collect::<Result<Vec<_>>>()?;
    let distinct: BTreeSet<usize> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::Schema(format!(
            "label column {:?} has fewer than 2 distinct values",
            schema.label
        )));
    }

    Ok(RawDataset {
        specs: feature_specs.into_iter().cloned().collect(),
        columns,
        labels,
        label_names,
        dropped_rows: dropped,
    })
}

/// The condition under which an input argument is accepted for a raw row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    /// `lower <= x < upper`, either bound optional.
    Interval {
        column: usize,
        lower: Option<f64>,
        upper: Option<f64>,
    },
    Equals { column: usize, value: String },
    IsTrue { column: usize },
    Always { column: usize },
}

impl Predicate {
    pub fn holds(&self, raw: &RawDataset, row: usize) -> bool {
        match self {
            Predicate::Interval {
                column,
                lower,
                upper,
            } => match &raw.columns[*column] {
                Column::Numeric(v) => {
                    let x = v[row];
                    lower.is_none_or(|l| x >= l) && upper.is_none_or(|u| x < u)
                }
                _ => false,
            },
            Predicate::Equals { column, value } => match &raw.columns[*column] {
                Column::Categorical(v) => &v[row] == value,
                _ => false,
            },
            Predicate::IsTrue { column } => match &raw.columns[*column] {
                Column::Binary(v) => v[row],
                _ => false,
            },
            Predicate::Always { .. } => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    pub name: String,
    pub predicate: Predicate,
}

/// How a raw column is mapped into binary input arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Binarizer {
    pub indicators: Vec<Indicator>,
    pub warnings: Vec<String>,
}

/// Rounds to 6 significant digits so the threshold printed in an argument
/// name is exactly the one used for binarization.
fn round_threshold(t: f64) -> f64 {
    format!("{:.5e}", t).parse().unwrap_or(t)
}

/// Interior cut points of `bins` equal-frequency bins, using linear
/// interpolation between order statistics.
pub fn quantile_thresholds(values: &[f64], bins: usize) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let mut out: Vec<f64> = Vec::new();
    for j in 1..bins {
        let pos = j as f64 / bins as f64 * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        let t = round_threshold(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
        if t > min && t <= max && out.last().is_none_or(|last| t > *last) {
            out.push(t);
        }
    }
    out
}

fn interval_indicators(name: &str, column: usize, thresholds: &[f64]) -> Vec<Indicator> {
    if thresholds.is_empty() {
        return vec![Indicator {
            name: format!("{name}=*"),
            predicate: Predicate::Always { column },
        }];
    }
    let mut out = Vec::with_capacity(thresholds.len() + 1);
    out.push(Indicator {
        name: format!("{name}<{}", thresholds[0]),
        predicate: Predicate::Interval {
            column,
            lower: None,
            upper: Some(thresholds[0]),
        },
    });
    for w in thresholds.windows(2) {
        out.push(Indicator {
            name: format!("{}≤{name}<{}", w[0], w[1]),
            predicate: Predicate::Interval {
                column,
                lower: Some(w[0]),
                upper: Some(w[1]),
            },
        });
    }
    let last = *thresholds.last().unwrap();
    out.push(Indicator {
        name: format!("{name}≥{last}"),
        predicate: Predicate::Interval {
            column,
            lower: Some(last),
            upper: None,
        },
    });
    out
}

impl Binarizer {
    /// Fits numeric thresholds on `fit_rows` (all rows when `None`). Category
    /// levels always come from the full dataset so every row maps to exactly
    /// one indicator.
    pub fn fit(raw: &RawDataset, fit_rows: Option<&[usize]>, default_bins: usize) -> Result<Self> {
        if default_bins < 2 {
            return Err(Error::Config(format!(
                "bins_per_numeric must be at least 2, got {default_bins}"
            )));
        }
        let mut indicators = Vec::new();
        let mut warnings = Vec::new();
        for (column, (spec, data)) in raw.specs.iter().zip(&raw.columns).enumerate() {
            match data {
                Column::Numeric(values) => {
                    let thresholds = if let Some(explicit) = &spec.thresholds {
                        let mut t = explicit.clone();
                        t.sort_by(|a, b| a.total_cmp(b));
                        t.dedup();
                        t
                    } else {
                        let bins = spec.bins.unwrap_or(default_bins);
                        if bins < 2 {
                            return Err(Error::Schema(format!(
                                "column {:?}: bins must be at least 2",
                                spec.name
                            )));
                        }
                        let subset: Vec<f64> = match fit_rows {
                            Some(rows) => rows.iter().map(|&r| values[r]).collect(),
                            None => values.clone(),
                        };
                        quantile_thresholds(&subset, bins)
                    };
                    if thresholds.is_empty() {
                        warnings.push(format!(
                            "numeric column {:?} is constant; using a single always-true indicator",
                            spec.name
                        ));
                    }
                    indicators.extend(interval_indicators(&spec.name, column, &thresholds));
                }
                Column::Categorical(values) => {
                    let levels: BTreeSet<&String> = values.iter().collect();
                    if levels.len() == 1 {
                        warnings.push(format!("categorical column {:?} has a single level", spec.name));
                    }
                    for level in levels {
                        indicators.push(Indicator {
                            name: format!("{}={}", spec.name, level),
                            predicate: Predicate::Equals {
                                column,
                                value: level.clone(),
                            },
                        });
                    }
                }
                Column::Binary(_) => indicators.push(Indicator {
                    name: spec.name.clone(),
                    predicate: Predicate::IsTrue { column },
                }),
            }
        }
        Ok(Binarizer {
            indicators,
            warnings,
        })
    }

    pub fn transform(&self, raw: &RawDataset) -> BinarizedDataset {
        let instances = (0..raw.n_instances())
            .map(|row| {
                self.indicators
                    .iter()
                    .map(|ind| if ind.predicate.holds(raw, row) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        BinarizedDataset {
            input_names: self.indicators.iter().map(|i| i.name.clone()).collect(),
            instances,
            labels: raw.labels.clone(),
            label_names: raw.label_names.clone(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Binarizes every feature with thresholds fitted on the whole dataset.
pub fn binarize(raw: &RawDataset, bins_per_numeric: usize) -> Result<BinarizedDataset> {
    Ok(Binarizer::fit(raw, None, bins_per_numeric)?.transform(raw))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedDataset {
    pub input_names: Vec<String>,
    /// One row per instance with entries in {0, 1}.
    pub instances: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    pub warnings: Vec<String>,
}

impl BinarizedDataset {
    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn n_features(&self) -> usize {
        self.input_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }
}

/// Which split feature thresholds are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinFit {
    Train,
    #[default]
    All,
}

impl fmt::Display for BinFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinFit::Train => "train",
            BinFit::All => "all",
        })
    }
}

impl std::str::FromStr for BinFit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(BinFit::Train),
            "all" => Ok(BinFit::All),
            other => Err(format!("expected train or all, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

pub const TRAIN_FRACTION: f64 = 0.7;
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Per-class shuffled 70/10/20 partition. Index lists come back sorted.
pub fn split_stratified(n_instances: usize, labels: &[usize], seed: u64) -> Result<SplitIndices> {
    if labels.len() != n_instances {
        return Err(Error::LengthMismatch(format!(
            "{} labels for {} instances",
            labels.len(),
            n_instances
        )));
    }
    if n_instances < 10 {
        return Err(Error::Stratification(format!(
            "need at least 10 instances, got {n_instances}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(Error::Stratification("need at least 2 classes".into()));
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < 3) {
        return Err(Error::Stratification(format!(
            "class {} has only {} instances (need 3)",
            class,
            members.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitIndices {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = ((n as f64 * TRAIN_FRACTION).round() as usize).min(n - 1);
        let n_val = ((n as f64 * VALIDATION_FRACTION).round() as usize).min(n - n_train - 1);
        split.train.extend_from_slice(&members[..n_train]);
        split.validation.extend_from_slice(&members[n_train..n_train + n_val]);
        split.test.extend_from_slice(&members[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(cols: &[(&str, ColumnKind)], label: &str) -> Schema {
        Schema {
            columns: cols
                .iter()
                .map(|(n, k)| ColumnSpec {
                    name: n.to_string(),
                    kind: *k,
                    bins: None,
                    thresholds: None,
                })
                .collect(),
            label: label.into(),
            classes: None,
            missing_marker: Some("?".into()),
            has_header: false,
            delimiter: ',',
        }
    }

    #[test]
    fn numeric_median_split() {
        let s = schema(&[("x", ColumnKind::Numeric), ("y", ColumnKind::Categorical)], "y");
        let csv = "1,a\n2,a\n3,a\n4,b\n5,b\n6,b\n";
        let raw = parse_csv(csv.as_bytes(), "mem", &s).unwrap();
        let bin = binarize(&raw, 2).unwrap();
        assert_eq!(bin.input_names, vec!["x<3.5", "x≥3.5"]);
        let col0: Vec<f64> = bin.instances.iter().map(|r| r[0]).collect();
        let col1: Vec<f64> = bin.instances.iter().map(|r| r[1]).collect();
        assert_eq!(col0, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(col1, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn categorical_and_binary() {
        let s = schema(
            &[("c", ColumnKind::Categorical), ("b", ColumnKind::Binary), ("y", ColumnKind::Categorical)],
            "y",
        );
        let raw = parse_csv("a,1,p\nb,0,q\na,1,p\n".as_bytes(), "mem", &s).unwrap();
        let bin = binarize(&raw, 3).unwrap();
        assert_eq!(bin.input_names, vec!["c=a", "c=b", "b"]);
        assert_eq!(
            bin.instances,
            vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]]
        );
    }

    #[test]
    fn constant_numeric_warns() {
        let s = schema(&[("x", ColumnKind::Numeric), ("y", ColumnKind::Categorical)], "y");
        let raw = parse_csv("2,a\n2,b\n2,a\n".as_bytes(), "mem", &s).unwrap();
        let bin = binarize(&raw, 3).unwrap();
        assert_eq!(bin.n_features(), 1);
        assert!(bin.instances.iter().all(|r| r[0] == 1.0));
        assert_eq!(bin.warnings.len(), 1);
    }

    #[test]
    fn missing_rows_dropped_and_counted() {
        let s = schema(&[("x", ColumnKind::Numeric), ("y", ColumnKind::Categorical)], "y");
        let raw = parse_csv("1,a\n?,b\n3,b\n".as_bytes(), "mem", &s).unwrap();
        assert_eq!(raw.n_instances(), 2);
        assert_eq!(raw.dropped_rows, 1);
    }

    #[test]
    fn parse_errors() {
        let s = schema(&[("x", ColumnKind::Numeric), ("y", ColumnKind::Categorical)], "y");
        assert!(matches!(parse_csv("".as_bytes(), "mem", &s), Err(Error::Parse { .. })));
        match parse_csv("1,a\n2,b,3\n".as_bytes(), "mem", &s) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        match parse_csv("1,a\nfoo,b\n".as_bytes(), "mem", &s) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        let mut strict = s.clone();
        strict.classes = Some(vec!["a".into(), "b".into()]);
        assert!(matches!(
            parse_csv("1,a\n2,c\n".as_bytes(), "mem", &strict),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_csv("1,a\n2,a\n".as_bytes(), "mem", &s),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn bins_must_be_at_least_two() {
        let s = schema(&[("x", ColumnKind::Numeric), ("y", ColumnKind::Categorical)], "y");
        let raw = parse_csv("1,a\n2,b\n".as_bytes(), "mem", &s).unwrap();
        assert!(binarize(&raw, 1).is_err());
    }

    #[test]
    fn iris_sized_split() {
        let labels: Vec<usize> = (0..150).map(|i| i / 50).collect();
        let s = split_stratified(150, &labels, 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (105, 15, 30));
        for class in 0..3 {
            let count = |idx: &[usize]| idx.iter().filter(|&&i| labels[i] == class).count();
            assert_eq!((count(&s.train), count(&s.validation), count(&s.test)), (35, 5, 10));
        }
        assert_eq!(s, split_stratified(150, &labels, 7).unwrap());
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            split_stratified(10, &[0; 10], 1),
            Err(Error::Stratification(_))
        ));
        let mut labels = vec![0; 12];
        labels[0] = 1;
        labels[1] = 1;
        assert!(matches!(
            split_stratified(12, &labels, 1),
            Err(Error::Stratification(_))
        ));
    }
}
