//! Model documents (JSON) and graph rendering (DOT).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::baselines::Metrics;
use crate::error::{Error, Result};
use crate::gaf::{Argument, LayeredGaf, Polarity, WeightedEdge};

pub const FORMAT_VERSION: &str = "gaf-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArgumentRecord {
    pub id: usize,
    pub name: String,
    pub layer: usize,
    pub base_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Provenance stored alongside a model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fully resolved experiment configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_metrics: Option<Metrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs_run: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations_run: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format: String,
    pub layer_sizes: Vec<usize>,
    pub arguments: Vec<ArgumentRecord>,
    pub edges: Vec<EdgeRecord>,
    pub class_labels: Vec<String>,
    #[serde(default)]
    pub metadata: ModelMetadata,
}

impl ModelDocument {
    pub fn from_gaf(gaf: &LayeredGaf, metadata: ModelMetadata) -> Self {
        ModelDocument {
            format: FORMAT_VERSION.to_string(),
            layer_sizes: gaf.layer_sizes(),
            arguments: gaf
                .arguments()
                .iter()
                .map(|a| ArgumentRecord {
                    id: a.id,
                    name: a.name.clone(),
                    layer: a.layer,
                    base_score: a.base_score,
                })
                .collect(),
            edges: gaf
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    source: e.source,
                    target: e.target,
                    weight: e.weight,
                })
                .collect(),
            class_labels: gaf.class_labels().to_vec(),
            metadata,
        }
    }

    pub fn to_gaf(&self) -> Result<LayeredGaf> {
        if self.format != FORMAT_VERSION {
            return Err(Error::Document(format!(
                "unsupported format {:?}, expected {:?}",
                self.format, FORMAT_VERSION
            )));
        }
        let total: usize = self.layer_sizes.iter().sum();
        if total != self.arguments.len() {
            return Err(Error::Document(format!(
                "layer sizes add up to {} but {} arguments are listed",
                total,
                self.arguments.len()
            )));
        }
        let mut layers: Vec<Vec<Argument>> = self.layer_sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, a) in self.arguments.iter().enumerate() {
            if a.id != i || a.layer >= layers.len() {
                return Err(Error::Document(format!("argument {:?} has an inconsistent id or layer", a.name)));
            }
            if i > 0 && a.layer < self.arguments[i - 1].layer {
                return Err(Error::Document("arguments are not ordered by layer".into()));
            }
            layers[a.layer].push(Argument::new(a.name.clone(), a.base_score));
        }
        if layers.iter().zip(&self.layer_sizes).any(|(l, &s)| l.len() != s) {
            return Err(Error::Document("argument layers do not match layer sizes".into()));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| WeightedEdge::new(e.source, e.target, e.weight))
            .collect();
        LayeredGaf::new(layers, edges, self.class_labels.clone()).map_err(|e| Error::Document(e.to_string()))
    }
}

/// A graph with its provenance, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredModel {
    pub gaf: LayeredGaf,
    pub metadata: ModelMetadata,
}

pub fn to_json(gaf: &LayeredGaf, metadata: &ModelMetadata) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelDocument::from_gaf(gaf, metadata.clone()))?)
}

/// Parses a model document. Floats are written in shortest round-trip form,
/// so parsing restores every parameter bit for bit.
pub fn from_json(text: &str) -> Result<StoredModel> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    Ok(StoredModel {
        gaf: doc.to_gaf()?,
        metadata: doc.metadata,
    })
}

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the graph in DOT. Layers form left-to-right ranks; supports are
/// dashed, attacks solid, zero-weight edges dotted. Edges with `|w| < prune_below`
/// are left out of the picture.
pub fn to_dot(gaf: &LayeredGaf, prune_below: f64) -> String {
    let mut out = String::new();
    out.push_str("digraph gaf {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    let last = gaf.n_layers() - 1;
    for layer in 0..gaf.n_layers() {
        let title = match layer {
            0 => "inputs".to_string(),
            l if l == last => "outputs".to_string(),
            l => format!("hidden {l}"),
        };
        let _ = writeln!(out, "  subgraph cluster_{layer} {{");
        let _ = writeln!(out, "    label=\"{title}\";");
        out.push_str("    rank=same;\n");
        for a in gaf.layer(layer) {
            let label = if layer == 0 {
                escape(&a.name)
            } else {
                format!("{}\\nβ={:.2}", escape(&a.name), a.base_score)
            };
            let _ = writeln!(out, "    a{} [label=\"{}\"];", a.id, label);
        }
        out.push_str("  }\n");
    }
    for e in gaf.edges() {
        if e.weight.abs() < prune_below {
            continue;
        }
        let style = match e.polarity() {
            Polarity::Attack => "solid",
            Polarity::Support => "dashed",
            Polarity::Neutral => "dotted",
        };
        let _ = writeln!(
            out,
            "  a{} -> a{} [style={}, label=\"{:.2}\"];",
            e.source, e.target, style, e.weight
        );
    }
    out.push_str("}\n");
    out
}
