//! Experiment configuration, read from TOML.
//!
//! Every key has a default, so a config file only needs what differs. Any key
//! can also be overridden from the command line with a dotted path, e.g.
//! `graph.top_k=10` or `lda.alpha=0.5`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adam::AdamConfig;
use crate::corpus::{InputFormat, LabelMap, LabelTarget, Normalizer, Preprocessor, Stopwords};
use crate::error::{Error, Result};
use crate::lda::LdaConfig;
use crate::rng;
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub preprocess: PreprocessConfig,
    pub graph: GraphConfig,
    pub lda: LdaSection,
    pub train: TrainSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    pub format: InputFormat,
    /// `twitter`, `pheme` or `binary`.
    pub profile: String,
    /// Extra raw-label mappings on top of the profile: value `0`, `1` or `drop`.
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub normalizer: Normalizer,
    /// Stopword file; the bundled English list when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Cluster combination H: one LDA fit per entry.
    pub clusters: Vec<usize>,
    /// Fraction of the corpus dictionary kept per topic.
    pub r: f64,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    /// Document-topic prior; `50 / c` for each topic count `c` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub eval_every: usize,
    pub split_ratio: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            preprocess: PreprocessConfig::default(),
            graph: GraphConfig::default(),
            lda: LdaSection::default(),
            train: TrainSection::default(),
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: PathBuf::new(),
            format: InputFormat::Jsonl,
            profile: "twitter".into(),
            labels: BTreeMap::new(),
        }
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            normalizer: Normalizer::Stem,
            stopwords: None,
        }
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            clusters: vec![8, 16, 32],
            r: 0.1,
            top_k: 5,
        }
    }
}

impl Default for LdaSection {
    fn default() -> Self {
        let d = LdaConfig::new(1, 0);
        LdaSection {
            alpha: None,
            beta: d.beta,
            iterations: d.iterations,
            burn_in: d.burn_in,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            eval_every: t.eval_every,
            split_ratio: 0.9,
        }
    }
}

/// Validates a cluster combination: nonempty, positive, strictly increasing.
pub fn validate_clusters(clusters: &[usize]) -> Result<()> {
    if clusters.is_empty() {
        return Err(Error::Config("cluster combination is empty".into()));
    }
    if clusters[0] == 0 {
        return Err(Error::Config("topic counts must be positive".into()));
    }
    if clusters.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "cluster combination {clusters:?} must be strictly increasing"
        )));
    }
    Ok(())
}

/// Parses `8+16+32` or `8,16,32`.
pub fn parse_clusters(text: &str) -> Result<Vec<usize>> {
    let clusters = text
        .split(['+', ','])
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad topic count `{s}` in `{text}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    validate_clusters(&clusters)?;
    Ok(clusters)
}

pub fn format_clusters(clusters: &[usize]) -> String {
    clusters.iter().map(usize::to_string).collect::<Vec<_>>().join("+")
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets `dotted.key = value`. The value is read as a TOML literal when it
    /// parses as one and fits the key; otherwise as a bare string.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let literal = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"));
        let as_string = toml::Value::String(value.to_string());
        let updated = match literal {
            Some(v) => self
                .with_value(key, v)
                .or_else(|e| self.with_value(key, as_string).map_err(|_| e))?,
            None => self.with_value(key, as_string)?,
        };
        *self = updated;
        Ok(())
    }

    fn with_value(&self, key: &str, value: toml::Value) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(&self.to_toml()).map_err(|e| Error::Config(e.to_string()))?;
        let parts: Vec<&str> = key.split('.').collect();
        let (last, parents) = parts.split_last().expect("split yields one part");
        let mut cursor = &mut table;
        for p in parents {
            cursor = cursor
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a section")))?;
        }
        cursor.insert(last.to_string(), value);
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("override `{key}`: {e}")))
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{}` is not key=value", o.as_ref())))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        validate_clusters(&self.graph.clusters)?;
        crate::topic_dictionary::selection_size(self.graph.r, 1)?;
        if self.graph.top_k == 0 {
            return Err(Error::Config("graph.top_k must be at least 1".into()));
        }
        if !(self.train.split_ratio > 0.0 && self.train.split_ratio < 1.0) {
            return Err(Error::Config("train.split_ratio must lie in (0, 1)".into()));
        }
        for &c in &self.graph.clusters {
            self.lda_config(c).validate()?;
        }
        self.train_config().validate()?;
        self.label_map()?;
        Ok(())
    }

    pub fn label_map(&self) -> Result<LabelMap> {
        let mut map = LabelMap::profile(&self.data.profile)?;
        for (raw, target) in &self.data.labels {
            map.insert(raw, target.parse::<LabelTarget>()?);
        }
        Ok(map)
    }

    pub fn preprocessor(&self) -> Result<Preprocessor> {
        let stopwords = match &self.preprocess.stopwords {
            Some(p) => Stopwords::from_file(p)?,
            None => Stopwords::english(),
        };
        Ok(Preprocessor::new(stopwords, self.preprocess.normalizer))
    }

    pub fn lda_config(&self, num_topics: usize) -> LdaConfig {
        let base = LdaConfig::new(num_topics, rng::derive(self.seed, rng::stage::LDA + num_topics as u64));
        LdaConfig {
            alpha: self.lda.alpha.unwrap_or(base.alpha),
            beta: self.lda.beta,
            iterations: self.lda.iterations,
            burn_in: self.lda.burn_in,
            ..base
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            adam: AdamConfig {
                lr: self.train.lr,
                beta1: self.train.beta1,
                beta2: self.train.beta2,
                epsilon: self.train.epsilon,
            },
            seed: rng::derive(self.seed, rng::stage::INIT),
            eval_every: self.train.eval_every,
        }
    }

    pub fn split_seed(&self) -> u64 {
        rng::derive(self.seed, rng::stage::SPLIT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = ExperimentConfig::default();
        assert_eq!(c.graph.clusters, vec![8, 16, 32]);
        assert_eq!(c.graph.top_k, 5);
        assert_eq!(c.train.epochs, 300);
        assert_eq!(c.train.split_ratio, 0.9);
        assert_eq!(c.lda_config(8).alpha, 6.25);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml_str("seed = 7\n[graph]\nclusters = [4]\nr = 0.5\n[lda]\nalpha = 0.1\n")
            .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.graph.clusters, vec![4]);
        assert_eq!(c.graph.top_k, 5);
        assert_eq!(c.lda_config(4).alpha, 0.1);
        assert!(ExperimentConfig::from_toml_str("[graph]\nbogus = 1\n").is_err());
    }

    #[test]
    fn overrides_by_dotted_key() {
        let mut c = ExperimentConfig::default();
        c.apply_overrides(&[
            "graph.top_k=10",
            "data.path=corpus.tsv",
            "data.format=tsv",
            "graph.clusters=[2, 4]",
        ])
        .unwrap();
        assert_eq!(c.graph.top_k, 10);
        assert_eq!(c.data.path, PathBuf::from("corpus.tsv"));
        assert_eq!(c.data.format, InputFormat::Tsv);
        assert_eq!(c.graph.clusters, vec![2, 4]);
        assert!(c.set("graph.top_k", "many").is_err());
        c.set("data.labels.rumor", "0").unwrap();
        assert_eq!(c.data.labels["rumor"], "0");
        assert!(c.apply_overrides(&["no_equals"]).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::default();
        c.lda.alpha = Some(0.5);
        c.data.labels.insert("rumor".into(), "0".into());
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn cluster_lists() {
        assert_eq!(parse_clusters("8+16+32").unwrap(), vec![8, 16, 32]);
        assert_eq!(parse_clusters("2,4").unwrap(), vec![2, 4]);
        assert!(parse_clusters("4+4").is_err());
        assert!(parse_clusters("8+4").is_err());
        assert!(parse_clusters("0").is_err());
        assert!(parse_clusters("").is_err());
        assert_eq!(format_clusters(&[8, 16, 32]), "8+16+32");
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ExperimentConfig::default();
        c.graph.r = 0.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.data.labels.insert("x".into(), "maybe".into());
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.train.epochs = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn stage_seeds_differ() {
        let c = ExperimentConfig::default();
        let seeds = [
            c.lda_config(8).seed,
            c.lda_config(16).seed,
            c.train_config().seed,
            c.split_seed(),
        ];
        let unique: std::collections::HashSet<_> = seeds.iter().collect();
        assert_eq!(unique.len(), seeds.len());
    }
}
