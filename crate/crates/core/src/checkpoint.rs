//! JSON model checkpoints.
//!
//! Layout:
//!
//! ```text
//! {
//!   "format": "topicgraph-checkpoint", "version": 1,
//!   "dims": {"input": [..], "hidden": 64, "embed": 32, "classes": 2},
//!   "clusters": [8, 16], "r": 0.1, "top_k": 5,
//!   "graphs": [{"num_topics": 8, "topic_id": 0, "tokens": [..], "idf": [..]}, ..],
//!   "parameters": [{"name": "encoder0.w1", "shape": [d, 64], "data": [..]}, ..]
//! }
//! ```
//!
//! Parameters appear in model order: per encoder `w1, b1, w2, b2`, then
//! `head.w, head.b`. Weight data is row-major. Floats round-trip exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Dictionary;
use crate::error::{Error, Result};
use crate::gcn::{ModelDims, MultiGraphGcn};
use crate::graph::TopicGraph;
use crate::tfidf::TfidfModel;

pub const FORMAT: &str = "topicgraph-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub num_topics: usize,
    pub topic_id: usize,
    /// Topic dictionary, in feature-column order.
    pub tokens: Vec<String>,
    pub idf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dims: ModelDims,
    pub clusters: Vec<usize>,
    pub r: f64,
    pub top_k: usize,
    pub graphs: Vec<GraphMeta>,
    pub parameters: Vec<NamedTensor>,
}

fn tensor_layout(dims: &ModelDims) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    for (g, &d) in dims.input.iter().enumerate() {
        out.push((format!("encoder{g}.w1"), vec![d, dims.hidden]));
        out.push((format!("encoder{g}.b1"), vec![dims.hidden]));
        out.push((format!("encoder{g}.w2"), vec![dims.hidden, dims.embed]));
        out.push((format!("encoder{g}.b2"), vec![dims.embed]));
    }
    out.push(("head.w".into(), vec![dims.head_input(), dims.classes]));
    out.push(("head.b".into(), vec![dims.classes]));
    out
}

impl Checkpoint {
    pub fn new(model: &MultiGraphGcn, graphs: &[TopicGraph], clusters: &[usize], r: f64, top_k: usize) -> Self {
        let graphs = graphs
            .iter()
            .map(|g| {
                let (tokens, idf) = match &g.tfidf {
                    Some(t) => (t.dictionary.tokens().to_vec(), t.idf.clone()),
                    None => (Vec::new(), Vec::new()),
                };
                GraphMeta {
                    num_topics: g.num_topics,
                    topic_id: g.topic_id,
                    tokens,
                    idf,
                }
            })
            .collect();
        let parameters = tensor_layout(&model.dims)
            .into_iter()
            .zip(model.tensors())
            .map(|((name, shape), data)| NamedTensor {
                name,
                shape,
                data: data.to_vec(),
            })
            .collect();
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            dims: model.dims.clone(),
            clusters: clusters.to_vec(),
            r,
            top_k,
            graphs,
            parameters,
        }
    }

    /// Rebuilds the model, checking names and shapes against `dims`.
    pub fn to_model(&self) -> Result<MultiGraphGcn> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Invalid(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let layout = tensor_layout(&self.dims);
        if layout.len() != self.parameters.len() {
            return Err(Error::Invalid(format!(
                "checkpoint has {} tensors, dims imply {}",
                self.parameters.len(),
                layout.len()
            )));
        }
        let mut model = MultiGraphGcn::zeros(self.dims.clone());
        for ((name, shape), (t, slot)) in layout.iter().zip(self.parameters.iter().zip(model.tensors_mut())) {
            if &t.name != name || &t.shape != shape || t.data.len() != slot.len() {
                return Err(Error::Invalid(format!(
                    "tensor `{}` {:?} does not match expected `{name}` {shape:?}",
                    t.name, t.shape
                )));
            }
            slot.copy_from_slice(&t.data);
        }
        Ok(model)
    }

    /// Per-graph vectorizers, for featurizing documents against the stored
    /// topic dictionaries.
    pub fn vectorizers(&self, doc_count: usize) -> Vec<TfidfModel> {
        self.graphs
            .iter()
            .map(|g| TfidfModel {
                dictionary: Dictionary::from_tokens(g.tokens.iter().cloned()),
                idf: g.idf.clone(),
                doc_count,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("checkpoint: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
