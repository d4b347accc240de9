//! TF-IDF over an arbitrary vocabulary, and cosine similarity.
//!
//! Weights are raw term counts times the smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1`, and every nonzero row is scaled to unit
//! Euclidean norm. Tokens outside the model's dictionary are ignored.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dictionary};
use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, SparseRow, SparseVec};

/// Documents × dictionary-words, L2-normalized rows.
pub type FeatureMatrix = SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub dictionary: Dictionary,
    pub idf: Vec<f64>,
    pub doc_count: usize,
}

pub fn smoothed_idf(doc_count: usize, doc_freq: usize) -> f64 {
    ((1 + doc_count) as f64 / (1 + doc_freq) as f64).ln() + 1.0
}

pub fn fit_tfidf(corpus: &Corpus, dictionary: &Dictionary) -> Result<TfidfModel> {
    if dictionary.is_empty() {
        return Err(Error::Invalid("tf-idf dictionary is empty".into()));
    }
    let mut df = vec![0usize; dictionary.len()];
    let mut seen = vec![usize::MAX; dictionary.len()];
    for (d, doc) in corpus.documents().iter().enumerate() {
        for t in &doc.tokens {
            if let Some(w) = dictionary.get(t) {
                if seen[w] != d {
                    seen[w] = d;
                    df[w] += 1;
                }
            }
        }
    }
    let n = corpus.len();
    Ok(TfidfModel {
        dictionary: dictionary.clone(),
        idf: df.iter().map(|&f| smoothed_idf(n, f)).collect(),
        doc_count: n,
    })
}

impl TfidfModel {
    /// One document's weighted, normalized vector.
    pub fn transform_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVec {
        let pairs = tokens
            .iter()
            .filter_map(|t| self.dictionary.get(t.as_ref()))
            .map(|w| (w, 1.0))
            .collect();
        let mut row = SparseVec::from_pairs(pairs);
        for (w, v) in row.indices.iter().zip(row.values.iter_mut()) {
            *v *= self.idf[*w];
        }
        let norm = row.view().norm();
        if norm > 0.0 {
            for v in &mut row.values {
                *v /= norm;
            }
        }
        row
    }

    pub fn transform(&self, corpus: &Corpus) -> FeatureMatrix {
        let rows = corpus
            .documents()
            .iter()
            .map(|d| self.transform_tokens(&d.tokens))
            .collect();
        SparseMatrix::from_rows(self.dictionary.len(), rows)
    }
}

/// `u·v / (‖u‖‖v‖)`, or 0 when either vector is zero.
pub fn cosine_similarity(u: SparseRow<'_>, v: SparseRow<'_>) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    u.dot(&v) / (nu * nv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Label};
    use proptest::prelude::*;

    fn corpus(docs: &[&[&str]]) -> Corpus {
        Corpus::from_documents(
            docs.iter()
                .enumerate()
                .map(|(i, t)| Document {
                    id: i.to_string(),
                    tokens: t.iter().map(|s| s.to_string()).collect(),
                    label: Label::True,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn idf_hand_values() {
        let c = corpus(&[&["a", "b"], &["a"]]);
        let dict = Dictionary::from_tokens(["a", "b", "z"]);
        let m = fit_tfidf(&c, &dict).unwrap();
        // a in every doc; b in 1 of 2.
        assert_eq!(m.idf[0], 1.0);
        assert!((m.idf[1] - 1.405_465_108_108_164_4).abs() < 1e-12);
        // z in none of 2.
        assert!((m.idf[2] - (3f64.ln() + 1.0)).abs() < 1e-12);

        let c3 = corpus(&[&["a"], &["a"], &["a"]]);
        let m3 = fit_tfidf(&c3, &Dictionary::from_tokens(["q"])).unwrap();
        assert!((m3.idf[0] - 2.386_294_361_119_890_6).abs() < 1e-12);
    }

    #[test]
    fn empty_dictionary_rejected() {
        let c = corpus(&[&["a"]]);
        assert!(fit_tfidf(&c, &Dictionary::from_tokens(Vec::<String>::new())).is_err());
    }

    #[test]
    fn counts_then_normalize() {
        let m = TfidfModel {
            dictionary: Dictionary::from_tokens(["a", "b"]),
            idf: vec![1.0, 1.0],
            doc_count: 1,
        };
        let row = m.transform_tokens(&["a", "a", "b"]);
        assert_eq!(row.indices, vec![0, 1]);
        assert!((row.values[0] - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((row.values[1] - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.transform_tokens(&["b", "a", "a"]), row);
        assert!(m.transform_tokens(&["zz", "yy"]).indices.is_empty());
    }

    #[test]
    fn cosine_hand_values() {
        let u = SparseVec::from_dense(&[1.0, 1.0, 0.0]);
        let v = SparseVec::from_dense(&[1.0, 0.0, 1.0]);
        assert!((cosine_similarity(u.view(), v.view()) - 0.5).abs() < 1e-15);
        assert!((cosine_similarity(u.view(), u.view()) - 1.0).abs() < 1e-15);
        let w = SparseVec::from_dense(&[0.0, 0.0, 3.0]);
        assert_eq!(cosine_similarity(u.view(), w.view()), 0.0);
        let z = SparseVec::default();
        assert_eq!(cosine_similarity(u.view(), z.view()), 0.0);
    }

    proptest! {
        #[test]
        fn rows_are_unit_and_self_similar(docs in prop::collection::vec(
            prop::collection::vec(0usize..12, 1..15), 1..12)) {
            let words: Vec<Vec<String>> = docs.iter().map(|d| d.iter().map(|w| format!("w{w}")).collect()).collect();
            let refs: Vec<Vec<&str>> = words.iter().map(|d| d.iter().map(String::as_str).collect()).collect();
            let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
            let c = corpus(&slices);
            let m = fit_tfidf(&c, c.dictionary()).unwrap();
            let x = m.transform(&c);
            for r in x.iter_rows() {
                prop_assert!((r.norm() - 1.0).abs() < 1e-9);
                prop_assert!(r.values.iter().all(|v| *v >= 0.0));
                prop_assert!((cosine_similarity(r, r) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn repeating_tokens_keeps_row(doc in prop::collection::vec(0usize..8, 1..10), k in 1usize..5) {
            let dict = Dictionary::from_tokens((0..8).map(|w| format!("w{w}")));
            let m = TfidfModel { idf: (0..8).map(|w| 1.0 + w as f64 * 0.3).collect(), dictionary: dict, doc_count: 4 };
            let once: Vec<String> = doc.iter().map(|w| format!("w{w}")).collect();
            let many: Vec<String> = once.iter().flat_map(|t| std::iter::repeat_n(t.clone(), k)).collect();
            let a = m.transform_tokens(&once);
            let b = m.transform_tokens(&many);
            prop_assert_eq!(&a.indices, &b.indices);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
