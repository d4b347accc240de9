//! Topic-wise word collection: each topic keeps its `⌈r·|W|⌉` heaviest words.

use serde::{Deserialize, Serialize};

use crate::corpus::Dictionary;
use crate::error::{Error, Result};
use crate::lda::TopicModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDictionary {
    pub topic_id: usize,
    /// Selected words in canonical (sorted) order.
    pub dictionary: Dictionary,
    /// φ weight of each selected word, aligned with `dictionary`.
    pub weights: Vec<f64>,
}

impl TopicDictionary {
    pub fn weight(&self, token: &str) -> Option<f64> {
        self.dictionary.get(token).map(|i| self.weights[i])
    }

    /// Selected words by descending weight, ties by token.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = self
            .dictionary
            .tokens()
            .iter()
            .map(String::as_str)
            .zip(self.weights.iter().copied())
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }
}

/// Number of words kept per topic for ratio `r` over a `vocab`-word
/// dictionary. Products within 1e-9 of an integer count as that integer so
/// that e.g. `0.1 · 30` keeps 3 words, not 4.
pub fn selection_size(r: f64, vocab: usize) -> Result<usize> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Config(format!(
            "word-selection ratio r must lie in (0, 1], got {r}"
        )));
    }
    let raw = r * vocab as f64;
    let size = (raw - 1e-9).ceil().max(1.0) as usize;
    Ok(size.min(vocab))
}

pub fn select_topic_words(model: &TopicModel, r: f64) -> Result<Vec<TopicDictionary>> {
    let vocab = model.dictionary.len();
    let keep = selection_size(r, vocab)?;
    let selected = model
        .topic_word
        .rows()
        .into_iter()
        .enumerate()
        .map(|(k, row)| {
            let mut order: Vec<usize> = (0..vocab).collect();
            // Dictionary order is lexicographic, so index order breaks ties by token.
            order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            order.truncate(keep);
            order.sort_unstable();
            let dictionary = Dictionary::from_tokens(order.iter().map(|&w| model.dictionary.token(w).to_string()));
            let weights = order.iter().map(|&w| row[w]).collect();
            TopicDictionary {
                topic_id: k,
                dictionary,
                weights,
            }
        })
        .collect();
    Ok(selected)
}
