//! Experiment orchestration: the full pipeline for one config, the two
//! sweeps, and the report files they write.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::checkpoint::Checkpoint;
use crate::config::{format_clusters, validate_clusters, ExperimentConfig};
use crate::corpus::{load_posts, preprocess, Corpus};
use crate::error::{Error, Result};
use crate::gcn::{predict_proba, MultiGraphGcn};
use crate::graph::{build_topic_graph, TopicGraph};
use crate::lda::{fit_lda, LdaConfig, TopicModel};
use crate::metrics::{evaluate, Metrics};
use crate::topic_dictionary::{select_topic_words, TopicDictionary};
use crate::train::{stratified_split, train, SplitMasks, TrainHistory};

/// Topic dictionaries of one LDA fit.
#[derive(Debug, Clone)]
pub struct TopicSet {
    pub num_topics: usize,
    pub dictionaries: Vec<TopicDictionary>,
}

/// Everything one pipeline run produces in memory.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub topics: Vec<TopicSet>,
    pub graphs: Vec<TopicGraph>,
    pub masks: SplitMasks,
    pub model: MultiGraphGcn,
    pub history: TrainHistory,
    /// Final-model metrics on the test mask.
    pub metrics: Metrics,
    /// Mean node degree, averaged over graphs.
    pub mean_degree: f64,
}

impl Outcome {
    pub fn train_seconds(&self) -> f64 {
        self.history.duration.as_secs_f64()
    }
}

fn lda_key(fingerprint: &str, cfg: &LdaConfig) -> String {
    format!(
        "{fingerprint}/{}/{:x}/{:x}/{}/{}/{}",
        cfg.num_topics,
        cfg.alpha.to_bits(),
        cfg.beta.to_bits(),
        cfg.iterations,
        cfg.burn_in,
        cfg.seed
    )
}

/// A preprocessed corpus plus a cache of LDA fits on it, shared by every
/// run of a sweep.
pub struct Session {
    corpus: Corpus,
    fingerprint: String,
    topic_models: HashMap<String, TopicModel>,
}

impl Session {
    pub fn new(corpus: Corpus) -> Self {
        let fingerprint = corpus.fingerprint();
        Session {
            corpus,
            fingerprint,
            topic_models: HashMap::new(),
        }
    }

    /// Loads and preprocesses the dataset named by `cfg`.
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self::new(load_corpus(cfg).map_err(|e| e.in_stage("ingest"))?))
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    /// Number of distinct LDA fits computed so far.
    pub fn cached_fits(&self) -> usize {
        self.topic_models.len()
    }

    pub fn topic_model(&mut self, cfg: &ExperimentConfig, num_topics: usize) -> Result<&TopicModel> {
        let lda = cfg.lda_config(num_topics);
        let key = lda_key(&self.fingerprint, &lda);
        if !self.topic_models.contains_key(&key) {
            let model = fit_lda(&self.corpus, &lda)?;
            self.topic_models.insert(key.clone(), model);
        }
        Ok(&self.topic_models[&key])
    }

    pub fn topic_sets(&mut self, cfg: &ExperimentConfig) -> Result<Vec<TopicSet>> {
        validate_clusters(&cfg.graph.clusters)?;
        cfg.graph
            .clusters
            .iter()
            .map(|&c| {
                let model = self.topic_model(cfg, c).map_err(|e| e.in_stage("lda"))?;
                let dictionaries =
                    select_topic_words(model, cfg.graph.r).map_err(|e| e.in_stage("topic_dictionary"))?;
                Ok(TopicSet {
                    num_topics: c,
                    dictionaries,
                })
            })
            .collect()
    }

    /// One graph per topic, ordered by cluster then topic.
    pub fn build_graphs(&mut self, cfg: &ExperimentConfig) -> Result<(Vec<TopicSet>, Vec<TopicGraph>)> {
        let sets = self.topic_sets(cfg)?;
        let mut graphs = Vec::new();
        for set in &sets {
            for td in &set.dictionaries {
                let mut g = build_topic_graph(&self.corpus, td, cfg.graph.top_k).map_err(|e| e.in_stage("graph"))?;
                g.num_topics = set.num_topics;
                graphs.push(g);
            }
        }
        Ok((sets, graphs))
    }

    /// Runs the whole pipeline in memory.
    pub fn execute(&mut self, cfg: &ExperimentConfig) -> Result<Outcome> {
        cfg.validate()?;
        let (topics, graphs) = self.build_graphs(cfg)?;
        let labels = self.corpus.labels();
        let masks =
            stratified_split(&labels, cfg.train.split_ratio, cfg.split_seed()).map_err(|e| e.in_stage("split"))?;
        let (model, history) = train(&graphs, &labels, &masks, &cfg.train_config()).map_err(|e| e.in_stage("train"))?;
        let metrics = predict_proba(&model, &graphs)
            .and_then(|probs| evaluate(&probs, &labels, &masks.test))
            .map_err(|e| e.in_stage("evaluate"))?;
        let n = self.corpus.len();
        let mean_degree = graphs.iter().map(|g| g.edges.mean_degree(n)).sum::<f64>() / graphs.len() as f64;
        Ok(Outcome {
            topics,
            graphs,
            masks,
            model,
            history,
            metrics,
            mean_degree,
        })
    }

    /// One run per cluster combination, everything else fixed.
    pub fn sweep_clusters(&mut self, cfg: &ExperimentConfig, combinations: &[Vec<usize>]) -> Result<Vec<SweepRow>> {
        if combinations.is_empty() {
            return Err(Error::Config("no cluster combinations to sweep".into()));
        }
        for c in combinations {
            validate_clusters(c)?;
        }
        Ok(combinations
            .iter()
            .map(|h| {
                let mut row_cfg = cfg.clone();
                row_cfg.graph.clusters = h.clone();
                SweepRow::from_result(format_clusters(h), self.execute(&row_cfg))
            })
            .collect())
    }

    /// One run per top-K value, everything else fixed.
    pub fn sweep_topk(&mut self, cfg: &ExperimentConfig, k_values: &[usize]) -> Result<Vec<SweepRow>> {
        if k_values.is_empty() {
            return Err(Error::Config("no top-K values to sweep".into()));
        }
        if k_values.contains(&0) {
            return Err(Error::Config("top-K values must be positive".into()));
        }
        Ok(k_values
            .iter()
            .map(|&k| {
                let mut row_cfg = cfg.clone();
                row_cfg.graph.top_k = k;
                SweepRow::from_result(k.to_string(), self.execute(&row_cfg))
            })
            .collect())
    }
}

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    let posts = load_posts(&cfg.data.path, cfg.data.format)?;
    preprocess(&posts, &cfg.label_map()?, &cfg.preprocessor()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub train_seconds: f64,
    pub mean_degree: f64,
}

/// One sweep row; failed runs keep their error message.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub key: String,
    pub result: std::result::Result<RowMetrics, String>,
}

impl SweepRow {
    fn from_result(key: String, outcome: Result<Outcome>) -> Self {
        let result = outcome
            .map(|o| RowMetrics {
                accuracy: o.metrics.accuracy,
                f1: o.metrics.f1,
                auc: o.metrics.auc,
                train_seconds: o.train_seconds(),
                mean_degree: o.mean_degree,
            })
            .map_err(|e| e.to_string());
        SweepRow { key, result }
    }

    pub fn ok(&self) -> Option<&RowMetrics> {
        self.result.as_ref().ok()
    }
}

fn status(row: &SweepRow) -> String {
    match &row.result {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {}", e.replace([',', '\n', '\r'], " ")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// `combination,accuracy,f1,auc,train_seconds,status`
pub fn cluster_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("combination,accuracy,f1,auc,train_seconds,status\n");
    for row in rows {
        let m = row.ok();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.key,
            opt(m.map(|m| m.accuracy)),
            opt(m.map(|m| m.f1)),
            opt(m.and_then(|m| m.auc)),
            opt(m.map(|m| m.train_seconds)),
            status(row)
        );
    }
    out
}

/// `k,f1,accuracy,auc,mean_degree,status`
pub fn topk_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,f1,accuracy,auc,mean_degree,status\n");
    for row in rows {
        let m = row.ok();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.key,
            opt(m.map(|m| m.f1)),
            opt(m.map(|m| m.accuracy)),
            opt(m.and_then(|m| m.auc)),
            opt(m.map(|m| m.mean_degree)),
            status(row)
        );
    }
    out
}

/// `topic,rank,token,weight` for one LDA fit's selected words.
pub fn topics_csv(set: &TopicSet) -> String {
    let mut out = String::from("topic,rank,token,weight\n");
    for td in &set.dictionaries {
        for (rank, (token, weight)) in td.ranked().into_iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{:.9}", td.topic_id, rank + 1, token, weight);
        }
    }
    out
}

/// `num_topics\ttopic_id\ti\tj\tsimilarity`, one line per undirected edge.
pub fn edges_tsv(graphs: &[TopicGraph]) -> String {
    let mut out = String::from("num_topics\ttopic_id\ti\tj\tsimilarity\n");
    for g in graphs {
        for (i, j, s) in g.edges.iter() {
            let _ = writeln!(out, "{}\t{}\t{i}\t{j}\t{s:.9}", g.num_topics, g.topic_id);
        }
    }
    out
}

/// `num_topics,topic_id,doc,token,value` for every nonzero feature.
pub fn features_csv(graphs: &[TopicGraph]) -> String {
    let mut out = String::from("num_topics,topic_id,doc,token,value\n");
    for g in graphs {
        for (doc, row) in g.features.iter_rows().enumerate() {
            for (col, v) in row.iter() {
                let token = g
                    .tfidf
                    .as_ref()
                    .map(|t| t.dictionary.token(col).to_string())
                    .unwrap_or_else(|| col.to_string());
                let _ = writeln!(out, "{},{},{doc},{token},{v:.9}", g.num_topics, g.topic_id);
            }
        }
    }
    out
}

fn metrics_table(m: &Metrics) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert("accuracy".into(), m.accuracy.into());
    t.insert("precision".into(), m.precision.into());
    t.insert("recall".into(), m.recall.into());
    t.insert("f1".into(), m.f1.into());
    t.insert("auc_defined".into(), m.auc.is_some().into());
    if let Some(auc) = m.auc {
        t.insert("auc".into(), auc.into());
    }
    t.insert("evaluated".into(), (m.total() as i64).into());
    for (c, pc) in m.per_class.iter().enumerate() {
        let mut ct = toml::Table::new();
        ct.insert("accuracy".into(), pc.accuracy.into());
        ct.insert("precision".into(), pc.precision.into());
        ct.insert("recall".into(), pc.recall.into());
        ct.insert("f1".into(), pc.f1.into());
        t.insert(format!("class{c}"), ct.into());
    }
    let mut conf = toml::Table::new();
    for actual in 0..2 {
        for pred in 0..2 {
            conf.insert(
                format!("actual{actual}_pred{pred}"),
                (m.confusion[actual][pred] as i64).into(),
            );
        }
    }
    t.insert("confusion".into(), conf.into());
    t
}

/// The metrics report: TOML with run facts, `[test]` metrics and a
/// `[config]` echo. Contains no timing, so reruns are byte-identical.
pub fn metrics_report(cfg: &ExperimentConfig, outcome: &Outcome, corpus: &Corpus) -> String {
    let mut root = toml::Table::new();
    root.insert("format".into(), "topicgraph-metrics".into());
    root.insert("version".into(), 1.into());
    root.insert("seed".into(), (cfg.seed as i64).into());
    root.insert("corpus_fingerprint".into(), corpus.fingerprint().into());
    root.insert("documents".into(), (corpus.len() as i64).into());
    root.insert("vocabulary".into(), (corpus.dictionary().len() as i64).into());
    root.insert("num_graphs".into(), (outcome.graphs.len() as i64).into());
    root.insert("head_input".into(), (outcome.model.dims.head_input() as i64).into());
    root.insert("parameters".into(), (outcome.model.num_parameters() as i64).into());
    root.insert("train_nodes".into(), (outcome.masks.train_count() as i64).into());
    root.insert("test_nodes".into(), (outcome.masks.test_count() as i64).into());
    root.insert("mean_degree".into(), outcome.mean_degree.into());
    let last = outcome.history.epochs.last().expect("at least one epoch");
    root.insert("final_loss".into(), last.loss.into());
    root.insert("final_train_accuracy".into(), last.train_accuracy.into());
    root.insert("test".into(), metrics_table(&outcome.metrics).into());

    let mut config: toml::Table = toml::from_str(&cfg.to_toml()).expect("config is valid TOML");
    config.remove("out_dir");
    root.insert("config".into(), config.into());
    toml::to_string(&root).expect("report serializes")
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

/// Writes `(name, contents)` pairs under `dir`; on any failure, removes the
/// files already written and returns the error.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, contents) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(Error::io(path, e).in_stage("write"));
        }
        written.push(path);
    }
    Ok(written)
}

/// Pipeline plus outputs: `metrics.txt`, `history.csv`, `model.json`,
/// `topics_c{c}.csv` per cluster, and `timing.txt`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let mut session = Session::load(cfg)?;
    run_in_session(&mut session, cfg)
}

pub fn run_in_session(session: &mut Session, cfg: &ExperimentConfig) -> Result<RunReport> {
    let outcome = session.execute(cfg)?;
    let mut files = vec![
        (
            "metrics.txt".to_string(),
            metrics_report(cfg, &outcome, session.corpus()),
        ),
        ("history.csv".to_string(), outcome.history.to_csv()),
        (
            "model.json".to_string(),
            Checkpoint::new(
                &outcome.model,
                &outcome.graphs,
                &cfg.graph.clusters,
                cfg.graph.r,
                cfg.graph.top_k,
            )
            .to_json(),
        ),
    ];
    for set in &outcome.topics {
        files.push((format!("topics_c{}.csv", set.num_topics), topics_csv(set)));
    }
    files.push((
        "timing.txt".to_string(),
        format!("train_seconds = {:.6}\n", outcome.train_seconds()),
    ));
    let files = write_all(&cfg.out_dir, &files)?;
    Ok(RunReport { outcome, files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.graph.clusters = vec![2];
        cfg.graph.r = 0.5;
        cfg.lda.iterations = 60;
        cfg.lda.burn_in = 30;
        cfg.train.epochs = 20;
        cfg
    }

    fn session() -> Session {
        Session::new(synthetic::to_corpus(&synthetic::separable(3, 40, 10)))
    }

    #[test]
    fn graph_count_matches_clusters() {
        let mut s = session();
        let mut cfg = small_config();
        cfg.graph.clusters = vec![1, 2, 3];
        let (sets, graphs) = s.build_graphs(&cfg).unwrap();
        assert_eq!(sets.len(), 3);
        assert_eq!(graphs.len(), 6);
        let tags: Vec<(usize, usize)> = graphs.iter().map(|g| (g.num_topics, g.topic_id)).collect();
        assert_eq!(tags, vec![(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]);
    }

    #[test]
    fn single_topic_full_ratio_is_global_tfidf() {
        let mut s = session();
        let mut cfg = small_config();
        cfg.graph.clusters = vec![1];
        cfg.graph.r = 1.0;
        let (_, graphs) = s.build_graphs(&cfg).unwrap();
        let global = crate::tfidf::fit_tfidf(s.corpus(), s.corpus().dictionary()).unwrap();
        assert_eq!(graphs[0].features, global.transform(s.corpus()));
    }

    #[test]
    fn lda_fits_are_cached_across_rows() {
        let mut s = session();
        let cfg = small_config();
        let rows = s.sweep_topk(&cfg, &[1, 3]).unwrap();
        assert!(rows.iter().all(|r| r.ok().is_some()));
        assert_eq!(s.cached_fits(), 1);
        s.sweep_clusters(&cfg, &[vec![2], vec![2, 3]]).unwrap();
        assert_eq!(s.cached_fits(), 2);
    }

    #[test]
    fn sweeps_reject_vacuous_input() {
        let mut s = session();
        let cfg = small_config();
        assert!(s.sweep_clusters(&cfg, &[]).is_err());
        assert!(s.sweep_topk(&cfg, &[]).is_err());
        assert!(s.sweep_topk(&cfg, &[0]).is_err());
    }

    #[test]
    fn failed_rows_are_recorded() {
        let mut s = session();
        let mut cfg = small_config();
        cfg.train.lr = 1e300;
        let rows = s.sweep_topk(&cfg, &[2]).unwrap();
        assert!(rows[0].result.is_err());
        let csv = topk_sweep_csv(&rows);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("2,,,,,error: "), "{line}");
        assert_eq!(line.split(',').count(), 6);
    }

    #[test]
    fn report_is_valid_toml_without_timing() {
        let mut s = session();
        let cfg = small_config();
        let outcome = s.execute(&cfg).unwrap();
        let report = metrics_report(&cfg, &outcome, s.corpus());
        let parsed: toml::Table = toml::from_str(&report).unwrap();
        assert_eq!(parsed["num_graphs"].as_integer(), Some(2));
        assert_eq!(parsed["head_input"].as_integer(), Some(64));
        assert!(parsed["test"]["f1"].as_float().is_some());
        assert!(parsed["config"].get("out_dir").is_none());
        assert!(!report.contains("seconds"));
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let mut cfg = small_config();
        cfg.data.path = PathBuf::from("/nonexistent/corpus.jsonl");
        let err = run_experiment(&cfg).unwrap_err();
        assert!(err.to_string().contains("ingest"), "{err}");
    }
}
