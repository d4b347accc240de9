//! Python bindings: configs, corpora, experiment sessions, LDA and the
//! standalone metric and gradient-check helpers.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use topicgraph::config::ExperimentConfig;
use topicgraph::corpus::{self, InputFormat, Label, LabelMap, Preprocessor, RawPost};
use topicgraph::experiment::{self, SweepRow};
use topicgraph::lda::{fit_lda, LdaConfig, TopicModel};
use topicgraph::metrics::Metrics;
use topicgraph::{gcn, metrics, synthetic, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_label(value: i64) -> PyResult<Label> {
    usize::try_from(value)
        .ok()
        .and_then(Label::from_index)
        .ok_or_else(|| PyValueError::new_err(format!("label must be 0 or 1, got {value}")))
}

fn metrics_dict<'py>(py: Python<'py>, m: &Metrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", m.accuracy)?;
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f1", m.f1)?;
    d.set_item("auc", m.auc)?;
    let per_class: Vec<(f64, f64, f64, f64)> = m
        .per_class
        .iter()
        .map(|c| (c.accuracy, c.precision, c.recall, c.f1))
        .collect();
    d.set_item("per_class", per_class)?;
    d.set_item("confusion", m.confusion.iter().map(|r| r.to_vec()).collect::<Vec<_>>())?;
    Ok(d)
}

fn sweep_dicts<'py>(py: Python<'py>, rows: &[SweepRow]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    rows.iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("key", &row.key)?;
            match &row.result {
                Ok(m) => {
                    d.set_item("accuracy", m.accuracy)?;
                    d.set_item("f1", m.f1)?;
                    d.set_item("auc", m.auc)?;
                    d.set_item("train_seconds", m.train_seconds)?;
                    d.set_item("mean_degree", m.mean_degree)?;
                    d.set_item("error", py.None())?;
                }
                Err(e) => d.set_item("error", e)?,
            }
            Ok(d)
        })
        .collect()
}

/// Experiment configuration (TOML schema; see the README).
#[pyclass(name = "Config", module = "topicgraph_py", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    /// Defaults, or the given TOML text.
    #[new]
    #[pyo3(signature = (toml=None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(t) => ExperimentConfig::from_toml_str(t).map_err(to_py)?,
            None => ExperimentConfig::default(),
        };
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyConfig {
            inner: ExperimentConfig::load(&path).map_err(to_py)?,
        })
    }

    /// Override one dotted key, e.g. `cfg.set("graph.top_k", "10")`.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn clusters(&self) -> Vec<usize> {
        self.inner.graph.clusters.clone()
    }

    #[setter]
    fn set_clusters(&mut self, clusters: Vec<usize>) {
        self.inner.graph.clusters = clusters;
    }

    #[getter]
    fn out_dir(&self) -> PathBuf {
        self.inner.out_dir.clone()
    }

    #[setter]
    fn set_out_dir(&mut self, dir: PathBuf) {
        self.inner.out_dir = dir;
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(seed={}, clusters={:?}, r={}, top_k={})",
            self.inner.seed, self.inner.graph.clusters, self.inner.graph.r, self.inner.graph.top_k
        )
    }
}

/// A preprocessed, labeled corpus.
#[pyclass(name = "Corpus", module = "topicgraph_py", from_py_object)]
#[derive(Clone)]
struct PyCorpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Loads a JSONL (`id`, `text`, `label`) or TSV (`id<TAB>label<TAB>text`)
    /// file and preprocesses it under a label profile.
    #[staticmethod]
    #[pyo3(signature = (path, format="jsonl", profile="twitter"))]
    fn load(path: PathBuf, format: &str, profile: &str) -> PyResult<Self> {
        let format: InputFormat = format.parse().map_err(to_py)?;
        let posts = corpus::load_posts(&path, format).map_err(to_py)?;
        let map = LabelMap::profile(profile).map_err(to_py)?;
        Ok(PyCorpus {
            inner: corpus::preprocess(&posts, &map, &Preprocessor::default()).map_err(to_py)?,
        })
    }

    /// Builds a corpus from `(id, text, label)` triples with raw labels
    /// resolved by `profile`.
    #[staticmethod]
    #[pyo3(signature = (records, profile="twitter"))]
    fn from_records(records: Vec<(String, String, String)>, profile: &str) -> PyResult<Self> {
        let posts: Vec<RawPost> = records
            .into_iter()
            .map(|(id, text, label_raw)| RawPost { id, text, label_raw })
            .collect();
        let map = LabelMap::profile(profile).map_err(to_py)?;
        Ok(PyCorpus {
            inner: corpus::preprocess(&posts, &map, &Preprocessor::default()).map_err(to_py)?,
        })
    }

    /// Seeded synthetic corpus: `disjoint`, `separable` or `noisy`.
    #[staticmethod]
    #[pyo3(signature = (kind, seed=0, docs=200))]
    fn synthetic(kind: &str, seed: u64, docs: usize) -> PyResult<Self> {
        let posts = match kind {
            "disjoint" => synthetic::disjoint_vocabularies(seed, docs, 30),
            "separable" => synthetic::separable(seed, docs, 20),
            "noisy" => synthetic::noisy(
                seed,
                synthetic::NoisySpec {
                    docs,
                    ..Default::default()
                },
            ),
            other => return Err(PyValueError::new_err(format!("unknown synthetic corpus `{other}`"))),
        };
        Ok(PyCorpus {
            inner: synthetic::to_corpus(&posts),
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.documents().iter().map(|d| d.id.clone()).collect()
    }

    fn labels(&self) -> Vec<usize> {
        self.inner.labels().iter().map(|l| l.index()).collect()
    }

    fn tokens(&self, index: usize) -> PyResult<Vec<String>> {
        self.inner
            .documents()
            .get(index)
            .map(|d| d.tokens.clone())
            .ok_or_else(|| PyValueError::new_err(format!("document index {index} out of range")))
    }

    fn dictionary(&self) -> Vec<String> {
        self.inner.dictionary().tokens().to_vec()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}

/// Fitted LDA model.
#[pyclass(name = "TopicModel", module = "topicgraph_py")]
struct PyTopicModel {
    inner: TopicModel,
}

#[pymethods]
impl PyTopicModel {
    #[getter]
    fn num_topics(&self) -> usize {
        self.inner.num_topics()
    }

    /// φ as a list of rows (topics × dictionary words).
    fn topic_word(&self) -> Vec<Vec<f64>> {
        self.inner.topic_word.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    /// θ as a list of rows (documents × topics).
    fn doc_topic(&self) -> Vec<Vec<f64>> {
        self.inner.doc_topic.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    fn top_words(&self, topic: usize, m: usize) -> PyResult<Vec<(String, f64)>> {
        if topic >= self.inner.num_topics() {
            return Err(PyValueError::new_err(format!("topic {topic} out of range")));
        }
        Ok(self
            .inner
            .top_words(topic, m)
            .into_iter()
            .map(|(w, p)| (w.to_string(), p))
            .collect())
    }
}

/// Collapsed-Gibbs LDA with `α = 50 / c` unless given.
#[pyfunction]
#[pyo3(signature = (corpus, num_topics, seed=0, alpha=None, beta=0.01, iterations=1000, burn_in=500))]
fn lda(
    corpus: &PyCorpus,
    num_topics: usize,
    seed: u64,
    alpha: Option<f64>,
    beta: f64,
    iterations: usize,
    burn_in: usize,
) -> PyResult<PyTopicModel> {
    let base = LdaConfig::new(num_topics, seed);
    let cfg = LdaConfig {
        alpha: alpha.unwrap_or(base.alpha),
        beta,
        iterations,
        burn_in,
        ..base
    };
    Ok(PyTopicModel {
        inner: fit_lda(&corpus.inner, &cfg).map_err(to_py)?,
    })
}

/// A corpus plus cached LDA fits; runs experiments and sweeps.
#[pyclass(name = "Session", module = "topicgraph_py")]
struct PySession {
    inner: experiment::Session,
}

#[pymethods]
impl PySession {
    #[new]
    fn new(corpus: &PyCorpus) -> Self {
        PySession {
            inner: experiment::Session::new(corpus.inner.clone()),
        }
    }

    /// Full pipeline in memory; returns test metrics plus run facts.
    fn execute<'py>(&mut self, py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
        let outcome = self.inner.execute(&config.inner).map_err(to_py)?;
        let d = metrics_dict(py, &outcome.metrics)?;
        d.set_item("num_graphs", outcome.graphs.len())?;
        d.set_item("head_input", outcome.model.dims.head_input())?;
        d.set_item("mean_degree", outcome.mean_degree)?;
        d.set_item("train_seconds", outcome.train_seconds())?;
        d.set_item(
            "loss",
            outcome.history.epochs.iter().map(|e| e.loss).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }

    fn sweep_clusters<'py>(
        &mut self,
        py: Python<'py>,
        config: &PyConfig,
        combinations: Vec<Vec<usize>>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let rows = self.inner.sweep_clusters(&config.inner, &combinations).map_err(to_py)?;
        sweep_dicts(py, &rows)
    }

    fn sweep_topk<'py>(
        &mut self,
        py: Python<'py>,
        config: &PyConfig,
        k_values: Vec<usize>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let rows = self.inner.sweep_topk(&config.inner, &k_values).map_err(to_py)?;
        sweep_dicts(py, &rows)
    }

    /// Selected words per topic: `{c: [[(token, weight), ...] per topic]}`.
    fn topics(&mut self, config: &PyConfig) -> PyResult<Vec<(usize, Vec<Vec<(String, f64)>>)>> {
        let sets = self.inner.topic_sets(&config.inner).map_err(to_py)?;
        Ok(sets
            .iter()
            .map(|s| {
                let topics = s
                    .dictionaries
                    .iter()
                    .map(|td| td.ranked().into_iter().map(|(w, p)| (w.to_string(), p)).collect())
                    .collect();
                (s.num_topics, topics)
            })
            .collect())
    }

    /// Undirected edges `(num_topics, topic_id, i, j, similarity)` of every graph.
    fn edges(&mut self, config: &PyConfig) -> PyResult<Vec<(usize, usize, usize, usize, f64)>> {
        let (_, graphs) = self.inner.build_graphs(&config.inner).map_err(to_py)?;
        Ok(graphs
            .iter()
            .flat_map(|g| g.edges.iter().map(move |(i, j, s)| (g.num_topics, g.topic_id, i, j, s)))
            .collect())
    }
}

/// Loads the configured dataset, runs the pipeline and writes all reports
/// to the config's `out_dir`. Returns the written paths.
#[pyfunction]
fn run_experiment(config: &PyConfig) -> PyResult<Vec<PathBuf>> {
    Ok(experiment::run_experiment(&config.inner).map_err(to_py)?.files)
}

/// Tokens after the default preprocessing pipeline.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    Preprocessor::default().tokenize(text)
}

/// Rank-statistic ROC AUC; class 1 is positive.
#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<i64>) -> PyResult<f64> {
    if scores.len() != labels.len() {
        return Err(PyValueError::new_err("scores and labels differ in length"));
    }
    let labels = labels.into_iter().map(parse_label).collect::<PyResult<Vec<_>>>()?;
    metrics::roc_auc(&scores, &labels).map_err(to_py)
}

/// Finite-difference gradient check on the seeded small instance; returns
/// the maximum relative error.
#[pyfunction]
#[pyo3(signature = (seed=0, step=1e-5))]
fn gradcheck(seed: u64, step: f64) -> PyResult<f64> {
    let (model, graphs, labels, mask) = gcn::gradcheck_instance(seed);
    Ok(gcn::gradient_check(&model, &graphs, &labels, &mask, step, false)
        .map_err(to_py)?
        .max_rel_error)
}

#[pymodule]
fn topicgraph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyTopicModel>()?;
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(lda, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    Ok(())
}
