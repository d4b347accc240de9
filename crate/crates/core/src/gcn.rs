//! Multi-graph GCN classifier with hand-written reverse-mode gradients.
//!
//! Every topic graph `g` has its own two-layer encoder
//!
//! ```text
//! H1 = ReLU(P_g · X_g · W1 + b1)
//! H2 = P_g · H1 · W2 + b2
//! ```
//!
//! The per-graph embeddings `H2` are concatenated in graph order and fed to a
//! dense softmax head with two outputs. The loss is mean cross-entropy over
//! the masked (training) nodes.

use ndarray::{concatenate, s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::graph::TopicGraph;
use crate::rng;

pub const HIDDEN_DIM: usize = 64;
pub const EMBED_DIM: usize = 32;
pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// Input width (topic-dictionary size) of each graph's encoder.
    pub input: Vec<usize>,
    pub hidden: usize,
    pub embed: usize,
    pub classes: usize,
}

impl ModelDims {
    pub fn new(input: Vec<usize>) -> Self {
        ModelDims {
            input,
            hidden: HIDDEN_DIM,
            embed: EMBED_DIM,
            classes: NUM_CLASSES,
        }
    }

    pub fn num_graphs(&self) -> usize {
        self.input.len()
    }

    /// Width of the concatenated embedding fed to the head.
    pub fn head_input(&self) -> usize {
        self.num_graphs() * self.embed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayerParams {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl GcnLayerParams {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        GcnLayerParams {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    /// Glorot-uniform weights in `±√(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut rng::Rng) -> Self {
        let bound = glorot_bound(fan_in, fan_out);
        GcnLayerParams {
            weight: Array2::from_shape_simple_fn((fan_in, fan_out), || rng::uniform_range(rng, -bound, bound)),
            bias: Array1::zeros(fan_out),
        }
    }
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub layer1: GcnLayerParams,
    pub layer2: GcnLayerParams,
}

/// Per-graph encoders plus the shared classification head. Gradients use the
/// same type.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiGraphGcn {
    pub encoders: Vec<Encoder>,
    pub head: GcnLayerParams,
    pub dims: ModelDims,
}

pub type Gradients = MultiGraphGcn;

impl MultiGraphGcn {
    pub fn zeros(dims: ModelDims) -> Self {
        let encoders = dims
            .input
            .iter()
            .map(|&d| Encoder {
                layer1: GcnLayerParams::zeros(d, dims.hidden),
                layer2: GcnLayerParams::zeros(dims.hidden, dims.embed),
            })
            .collect();
        MultiGraphGcn {
            encoders,
            head: GcnLayerParams::zeros(dims.head_input(), dims.classes),
            dims,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims.clone())
    }

    fn layers(&self) -> impl Iterator<Item = &GcnLayerParams> {
        self.encoders
            .iter()
            .flat_map(|e| [&e.layer1, &e.layer2])
            .chain(std::iter::once(&self.head))
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut GcnLayerParams> {
        self.encoders
            .iter_mut()
            .flat_map(|e| [&mut e.layer1, &mut e.layer2])
            .chain(std::iter::once(&mut self.head))
    }

    /// Every parameter tensor as a flat slice: per encoder
    /// `W1, b1, W2, b2`, then head `W, b`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Default-width model (64 hidden, 32 embedding) with one encoder per graph.
pub fn init_model(graph_input_dims: &[usize], seed: u64) -> Result<MultiGraphGcn> {
    init_model_with_dims(ModelDims::new(graph_input_dims.to_vec()), seed)
}

pub fn init_model_with_dims(dims: ModelDims, seed: u64) -> Result<MultiGraphGcn> {
    if dims.input.is_empty() {
        return Err(Error::Invalid("model needs at least one graph".into()));
    }
    if dims.input.contains(&0) || dims.hidden == 0 || dims.embed == 0 || dims.classes == 0 {
        return Err(Error::Invalid(format!("zero-width layer in {dims:?}")));
    }
    let mut r = rng::seeded(seed);
    let encoders = dims
        .input
        .iter()
        .map(|&d| Encoder {
            layer1: GcnLayerParams::glorot(d, dims.hidden, &mut r),
            layer2: GcnLayerParams::glorot(dims.hidden, dims.embed, &mut r),
        })
        .collect();
    let head = GcnLayerParams::glorot(dims.head_input(), dims.classes, &mut r);
    Ok(MultiGraphGcn { encoders, head, dims })
}

#[derive(Debug, Clone)]
pub struct GraphActivations {
    /// `P X W1 + b1`
    pub pre1: Array2<f64>,
    /// `ReLU(pre1)`
    pub hidden: Array2<f64>,
    /// `P · hidden`
    pub propagated_hidden: Array2<f64>,
    /// `P · hidden · W2 + b2`
    pub embedding: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub graphs: Vec<GraphActivations>,
    /// Concatenated embeddings, n × (graphs · embed).
    pub embedding: Array2<f64>,
    pub logits: Array2<f64>,
    pub probs: Array2<f64>,
}

fn check_graphs(model: &MultiGraphGcn, graphs: &[TopicGraph]) -> Result<usize> {
    if graphs.len() != model.encoders.len() {
        return Err(Error::Shape {
            graph: graphs.len().min(model.encoders.len()),
            message: format!(
                "model has {} encoders but {} graphs were given",
                model.encoders.len(),
                graphs.len()
            ),
        });
    }
    let n = graphs[0].num_nodes();
    for (g, (graph, enc)) in graphs.iter().zip(&model.encoders).enumerate() {
        if graph.num_nodes() != n {
            return Err(Error::Shape {
                graph: g,
                message: format!("{} nodes, expected {n}", graph.num_nodes()),
            });
        }
        if graph.input_dim() != enc.layer1.weight.nrows() {
            return Err(Error::Shape {
                graph: g,
                message: format!(
                    "feature width {} does not match encoder input {}",
                    graph.input_dim(),
                    enc.layer1.weight.nrows()
                ),
            });
        }
        if graph.propagation.rows() != n || graph.propagation.cols() != n {
            return Err(Error::Shape {
                graph: g,
                message: "propagation matrix is not n × n".into(),
            });
        }
    }
    Ok(n)
}

/// Numerically stable row softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn log_sum_exp(row: ndarray::ArrayView1<'_, f64>) -> f64 {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn forward(model: &MultiGraphGcn, graphs: &[TopicGraph]) -> Result<ForwardCache> {
    check_graphs(model, graphs)?;
    let acts: Vec<GraphActivations> = graphs
        .iter()
        .zip(&model.encoders)
        .map(|(graph, enc)| {
            let xw = graph.features.matmul(&enc.layer1.weight);
            let pre1 = graph.propagation.matmul(&xw) + &enc.layer1.bias;
            let hidden = pre1.mapv(|v| v.max(0.0));
            let propagated_hidden = graph.propagation.matmul(&hidden);
            let embedding = propagated_hidden.dot(&enc.layer2.weight) + &enc.layer2.bias;
            GraphActivations {
                pre1,
                hidden,
                propagated_hidden,
                embedding,
            }
        })
        .collect();
    let views: Vec<_> = acts.iter().map(|a| a.embedding.view()).collect();
    let embedding = concatenate(Axis(1), &views).expect("embeddings share row count");
    let logits = embedding.dot(&model.head.weight) + &model.head.bias;
    let probs = softmax_rows(&logits);
    Ok(ForwardCache {
        graphs: acts,
        embedding,
        logits,
        probs,
    })
}

pub fn predict_proba(model: &MultiGraphGcn, graphs: &[TopicGraph]) -> Result<Array2<f64>> {
    Ok(forward(model, graphs)?.probs)
}

fn check_targets(n: usize, labels: &[Label], mask: &[bool]) -> Result<usize> {
    if labels.len() != n || mask.len() != n {
        return Err(Error::Invalid(format!(
            "{n} nodes but {} labels and {} mask entries",
            labels.len(),
            mask.len()
        )));
    }
    let m = mask.iter().filter(|&&b| b).count();
    if m == 0 {
        return Err(Error::Invalid("loss mask selects no nodes".into()));
    }
    Ok(m)
}

/// Mean cross-entropy over masked nodes, from the logits via log-sum-exp.
pub fn loss(cache: &ForwardCache, labels: &[Label], mask: &[bool]) -> Result<f64> {
    let m = check_targets(cache.logits.nrows(), labels, mask)?;
    let total: f64 = cache
        .logits
        .rows()
        .into_iter()
        .zip(labels.iter().zip(mask))
        .filter(|(_, (_, &on))| on)
        .map(|(row, (y, _))| log_sum_exp(row) - row[y.index()])
        .sum();
    Ok(total / m as f64)
}

pub fn loss_and_grad(
    cache: &ForwardCache,
    labels: &[Label],
    mask: &[bool],
    model: &MultiGraphGcn,
    graphs: &[TopicGraph],
) -> Result<(f64, Gradients)> {
    check_graphs(model, graphs)?;
    let value = loss(cache, labels, mask)?;
    let m = mask.iter().filter(|&&b| b).count() as f64;

    let mut d_logits = Array2::zeros(cache.probs.raw_dim());
    for (i, (y, &on)) in labels.iter().zip(mask).enumerate() {
        if on {
            let mut row = d_logits.row_mut(i);
            row.assign(&cache.probs.row(i));
            row[y.index()] -= 1.0;
            row.mapv_inplace(|v| v / m);
        }
    }

    let mut grads = model.zeros_like();
    grads.head.weight = cache.embedding.t().dot(&d_logits);
    grads.head.bias = d_logits.sum_axis(Axis(0));
    let d_embedding = d_logits.dot(&model.head.weight.t());

    let p = model.dims.embed;
    for (g, ((graph, enc), act)) in graphs.iter().zip(&model.encoders).zip(&cache.graphs).enumerate() {
        let d_out = d_embedding.slice(s![.., g * p..(g + 1) * p]).to_owned();
        let gr = &mut grads.encoders[g];
        gr.layer2.weight = act.propagated_hidden.t().dot(&d_out);
        gr.layer2.bias = d_out.sum_axis(Axis(0));
        let d_prop_hidden = d_out.dot(&enc.layer2.weight.t());
        let mut d_pre1 = graph.propagation.transpose_matmul(&d_prop_hidden);
        ndarray::Zip::from(&mut d_pre1).and(&act.pre1).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        gr.layer1.bias = d_pre1.sum_axis(Axis(0));
        let d_xw = graph.propagation.transpose_matmul(&d_pre1);
        gr.layer1.weight = graph.features.transpose_matmul(&d_xw);
    }

    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok((value, grads))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Relative error with a floor on the scale so entries that are both ~0 are
/// judged by their absolute difference.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares every analytic gradient entry against central differences with
/// step `h`. `corrupt` perturbs the analytic gradient first (negative control).
pub fn gradient_check(
    model: &MultiGraphGcn,
    graphs: &[TopicGraph],
    labels: &[Label],
    mask: &[bool],
    h: f64,
    corrupt: bool,
) -> Result<GradCheckReport> {
    let cache = forward(model, graphs)?;
    let (_, mut grads) = loss_and_grad(&cache, labels, mask, model, graphs)?;
    if corrupt {
        grads.head.bias[0] += 1e-2;
    }
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();

    let mut probe = model.clone();
    let eval = |probe: &MultiGraphGcn| -> Result<f64> { loss(&forward(probe, graphs)?, labels, mask) };
    let mut max_rel: f64 = 0.0;
    let mut checked = 0;
    for (t, grad) in analytic.iter().enumerate() {
        for (i, &a) in grad.iter().enumerate() {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + h;
            let up = eval(&probe)?;
            probe.tensors_mut()[t][i] = orig - h;
            let down = eval(&probe)?;
            probe.tensors_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            max_rel = max_rel.max(relative_error(a, numeric));
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        checked,
    })
}

/// Small seeded instance: 12 documents, 2 topic graphs, encoder widths
/// 5 → 8 → 4, random nonnegative sparse features, top-2 edges, random biases.
pub fn gradcheck_instance(seed: u64) -> (MultiGraphGcn, Vec<TopicGraph>, Vec<Label>, Vec<bool>) {
    use crate::graph::build_topk_edges;
    use crate::sparse::{SparseMatrix, SparseVec};

    let n = 12;
    let input = 5;
    let mut r = rng::seeded(seed);
    let graphs: Vec<TopicGraph> = (0..2)
        .map(|g| {
            let rows = (0..n)
                .map(|_| {
                    let dense: Vec<f64> = (0..input)
                        .map(|_| {
                            if rng::uniform(&mut r) < 0.6 {
                                rng::uniform(&mut r)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    SparseVec::from_dense(&dense)
                })
                .collect();
            let features = SparseMatrix::from_rows(input, rows);
            let edges = build_topk_edges(&features, 2).expect("k > 0");
            let mut graph = TopicGraph::from_parts(g, features, edges).expect("edges in range");
            graph.num_topics = 2;
            graph
        })
        .collect();
    let dims = ModelDims {
        input: vec![input; 2],
        hidden: 8,
        embed: 4,
        classes: NUM_CLASSES,
    };
    let mut model = init_model_with_dims(dims, rng::derive(seed, 1)).expect("valid dims");
    for t in model.tensors_mut() {
        if t.len() <= 8 {
            for v in t.iter_mut() {
                *v = rng::uniform_range(&mut r, -0.1, 0.1);
            }
        }
    }
    let labels: Vec<Label> = (0..n)
        .map(|i| if i % 2 == 0 { Label::Fake } else { Label::True })
        .collect();
    let mask: Vec<bool> = (0..n).map(|i| i % 4 != 3).collect();
    (model, graphs, labels, mask)
}
