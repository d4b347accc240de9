//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! The sampler runs on raw token counts. After `burn_in` sweeps the count
//! tables are summed every sweep, and the returned `topic_word` (φ) and
//! `doc_topic` (θ) matrices are posterior means computed from the averaged
//! counts.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dictionary};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Griffiths-Steyvers style defaults: α = 50 / c, β = 0.01, 1000 sweeps
    /// with the first 500 discarded.
    pub fn new(num_topics: usize, seed: u64) -> Self {
        LdaConfig {
            num_topics,
            alpha: 50.0 / num_topics.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            burn_in: 500,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(Error::Config("number of topics must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be less than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    /// c × |W|, rows sum to 1.
    pub topic_word: Array2<f64>,
    /// n × c, rows sum to 1.
    pub doc_topic: Array2<f64>,
    pub config: LdaConfig,
    pub dictionary: Dictionary,
}

impl TopicModel {
    pub fn num_topics(&self) -> usize {
        self.topic_word.nrows()
    }

    /// The `m` highest-weighted words of topic `k`, ties by token order.
    pub fn top_words(&self, k: usize, m: usize) -> Vec<(&str, f64)> {
        let row = self.topic_word.row(k);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .take(m)
            .map(|w| (self.dictionary.token(w), row[w]))
            .collect()
    }
}

/// The topic-word weight matrix T (c × |W|).
pub fn topic_word_weights(model: &TopicModel) -> &Array2<f64> {
    &model.topic_word
}

/// Unnormalized full conditional for one token of word `word`, with that
/// token already removed from the counts. Returns the sum.
///
/// `word_topic` is laid out word-major: entry `word * c + k`.
#[inline]
fn conditional_weights(
    doc_topic: &[u32],
    word_topic: &[u32],
    topic_totals: &[u32],
    word: usize,
    alpha: f64,
    beta: f64,
    vocab_beta: f64,
    out: &mut [f64],
) -> f64 {
    let c = topic_totals.len();
    let wt = &word_topic[word * c..(word + 1) * c];
    let mut total = 0.0;
    for k in 0..c {
        let p = (doc_topic[k] as f64 + alpha) * (wt[k] as f64 + beta) / (topic_totals[k] as f64 + vocab_beta);
        out[k] = p;
        total += p;
    }
    total
}

/// Normalized p(z = k | rest) for a token of `word`; counts exclude the token.
pub fn topic_conditional(
    doc_topic: &[u32],
    word_topic: &[u32],
    topic_totals: &[u32],
    word: usize,
    alpha: f64,
    beta: f64,
    vocab_size: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; topic_totals.len()];
    let total = conditional_weights(
        doc_topic,
        word_topic,
        topic_totals,
        word,
        alpha,
        beta,
        vocab_size as f64 * beta,
        &mut out,
    );
    out.iter_mut().for_each(|p| *p /= total);
    out
}

pub fn fit_lda(corpus: &Corpus, config: &LdaConfig) -> Result<TopicModel> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let empty: Vec<String> = corpus
        .documents()
        .iter()
        .filter(|d| d.tokens.is_empty())
        .map(|d| d.id.clone())
        .collect();
    if !empty.is_empty() {
        return Err(Error::EmptyDocuments(empty));
    }

    let docs = corpus.token_ids();
    let n = docs.len();
    let c = config.num_topics;
    let v = corpus.dictionary().len();
    let (alpha, beta) = (config.alpha, config.beta);
    let vocab_beta = v as f64 * beta;

    let mut rng = rng::seeded(config.seed);
    let mut doc_topic = vec![0u32; n * c];
    let mut word_topic = vec![0u32; v * c];
    let mut topic_totals = vec![0u32; c];
    let mut assignments: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (d, words) in docs.iter().enumerate() {
        let z: Vec<usize> = words
            .iter()
            .map(|&w| {
                let k = rng::below(&mut rng, c);
                doc_topic[d * c + k] += 1;
                word_topic[w * c + k] += 1;
                topic_totals[k] += 1;
                k
            })
            .collect();
        assignments.push(z);
    }

    let mut acc_doc_topic = vec![0u64; n * c];
    let mut acc_word_topic = vec![0u64; v * c];
    let mut weights = vec![0.0; c];
    for sweep in 0..config.iterations {
        for (d, words) in docs.iter().enumerate() {
            let dt = &mut doc_topic[d * c..(d + 1) * c];
            for (i, &w) in words.iter().enumerate() {
                let old = assignments[d][i];
                dt[old] -= 1;
                word_topic[w * c + old] -= 1;
                topic_totals[old] -= 1;

                let total =
                    conditional_weights(dt, &word_topic, &topic_totals, w, alpha, beta, vocab_beta, &mut weights);
                let mut u = rng::uniform(&mut rng) * total;
                let mut new = c - 1;
                for (k, p) in weights.iter().enumerate() {
                    if u < *p {
                        new = k;
                        break;
                    }
                    u -= p;
                }

                assignments[d][i] = new;
                dt[new] += 1;
                word_topic[w * c + new] += 1;
                topic_totals[new] += 1;
            }
        }
        if sweep >= config.burn_in {
            for (a, &x) in acc_doc_topic.iter_mut().zip(&doc_topic) {
                *a += x as u64;
            }
            for (a, &x) in acc_word_topic.iter_mut().zip(&word_topic) {
                *a += x as u64;
            }
        }
    }

    let samples = (config.iterations - config.burn_in) as f64;
    let mut topic_word = Array2::zeros((c, v));
    for k in 0..c {
        let mean_total: f64 = (0..v).map(|w| acc_word_topic[w * c + k] as f64 / samples).sum();
        let denom = mean_total + vocab_beta;
        for w in 0..v {
            topic_word[[k, w]] = (acc_word_topic[w * c + k] as f64 / samples + beta) / denom;
        }
    }
    let mut theta = Array2::zeros((n, c));
    for (d, words) in docs.iter().enumerate() {
        let denom = words.len() as f64 + c as f64 * alpha;
        for k in 0..c {
            theta[[d, k]] = (acc_doc_topic[d * c + k] as f64 / samples + alpha) / denom;
        }
    }

    Ok(TopicModel {
        topic_word,
        doc_topic: theta,
        config: *config,
        dictionary: corpus.dictionary().clone(),
    })
}
