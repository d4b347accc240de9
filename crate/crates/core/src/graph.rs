//! Per-topic document graphs: topic TF-IDF features, top-K cosine edges and
//! the symmetric-normalized propagation matrix.

use std::collections::BTreeMap;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, SparseVec};
use crate::tfidf::{cosine_similarity, fit_tfidf, FeatureMatrix, TfidfModel};
use crate::topic_dictionary::TopicDictionary;

/// Undirected edges `(i, j)` with `i < j`, each carrying its cosine similarity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeList {
    edges: BTreeMap<(usize, usize), f64>,
}

impl EdgeList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an undirected edge. Self-pairs and non-positive similarities
    /// are ignored.
    pub fn insert(&mut self, i: usize, j: usize, similarity: f64) {
        if i == j || !(similarity > 0.0) {
            return;
        }
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.entry(key).or_insert(similarity);
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.contains_key(&key)
    }

    pub fn similarity(&self, i: usize, j: usize) -> Option<f64> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.get(&key).copied()
    }

    /// Edges in ascending `(i, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &s)| (i, j, s))
    }

    pub fn degrees(&self, n: usize) -> Vec<usize> {
        let mut deg = vec![0; n];
        for (i, j, _) in self.iter() {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn mean_degree(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            2.0 * self.len() as f64 / n as f64
        }
    }
}

/// One topic's view of the corpus.
#[derive(Debug, Clone)]
pub struct TopicGraph {
    /// Topic index within its LDA fit.
    pub topic_id: usize,
    /// Number of topics of the LDA fit this graph came from.
    pub num_topics: usize,
    pub features: FeatureMatrix,
    pub edges: EdgeList,
    pub propagation: SparseMatrix,
    /// Vectorizer that produced `features`; absent for hand-built graphs.
    pub tfidf: Option<TfidfModel>,
}

impl TopicGraph {
    /// Assembles a graph from precomputed features and edges.
    pub fn from_parts(topic_id: usize, features: FeatureMatrix, edges: EdgeList) -> Result<Self> {
        let n = features.rows();
        if let Some((i, j, _)) = edges.iter().find(|&(i, j, _)| i >= n || j >= n) {
            return Err(Error::Invalid(format!("edge ({i}, {j}) out of range for {n} nodes")));
        }
        let propagation = normalize_adjacency(&edges, n);
        Ok(TopicGraph {
            topic_id,
            num_topics: 1,
            features,
            edges,
            propagation,
            tfidf: None,
        })
    }

    /// Graph with explicit propagation matrix (no edge list); for tests and
    /// small hand-built instances.
    pub fn with_propagation(features: FeatureMatrix, propagation: SparseMatrix) -> Self {
        TopicGraph {
            topic_id: 0,
            num_topics: 1,
            features,
            edges: EdgeList::new(),
            propagation,
            tfidf: None,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    /// Relabels node `i` as `perm[i]` in features, edges and propagation.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut edges = EdgeList::new();
        for (i, j, s) in self.edges.iter() {
            edges.insert(perm[i], perm[j], s);
        }
        TopicGraph {
            topic_id: self.topic_id,
            num_topics: self.num_topics,
            features: self.features.permute_rows(perm),
            edges,
            propagation: self.propagation.permute_symmetric(perm),
            tfidf: self.tfidf.clone(),
        }
    }
}

/// TF-IDF of the whole corpus over one topic dictionary.
pub fn build_topic_features(corpus: &Corpus, td: &TopicDictionary) -> Result<(TfidfModel, FeatureMatrix)> {
    let model = fit_tfidf(corpus, &td.dictionary)?;
    let features = model.transform(corpus);
    Ok((model, features))
}

/// Directed top-K picks: for each node, up to `k` other nodes with positive
/// cosine similarity, most similar first, ties to the lower index.
pub fn topk_selections(features: &FeatureMatrix, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    if k == 0 {
        return Err(Error::Config("top-K must be at least 1".into()));
    }
    let n = features.rows();
    let mut postings: Vec<Vec<usize>> = vec![Vec::new(); features.cols()];
    for (i, row) in features.iter_rows().enumerate() {
        for &c in row.indices {
            postings[c].push(i);
        }
    }

    let mut touched = vec![usize::MAX; n];
    let mut selections = Vec::with_capacity(n);
    for i in 0..n {
        let row = features.row(i);
        let mut candidates: Vec<(usize, f64)> = Vec::new();
        for &c in row.indices {
            for &j in &postings[c] {
                if j != i && touched[j] != i {
                    touched[j] = i;
                    let s = cosine_similarity(row, features.row(j));
                    if s > 0.0 {
                        candidates.push((j, s));
                    }
                }
            }
        }
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        candidates.truncate(k);
        selections.push(candidates);
    }
    Ok(selections)
}

/// Union of every node's top-K picks as an undirected edge set.
///
/// Each node picks at most `k` neighbours, so there are at most `n·k` edges
/// and the mean degree is at most `2k`. Individual degrees are not bounded:
/// a node picked by many others keeps all of those edges.
pub fn build_topk_edges(features: &FeatureMatrix, k: usize) -> Result<EdgeList> {
    let mut edges = EdgeList::new();
    for (i, picks) in topk_selections(features, k)?.into_iter().enumerate() {
        for (j, s) in picks {
            edges.insert(i, j, s);
        }
    }
    Ok(edges)
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` for the binary adjacency `A` of `edges`.
pub fn normalize_adjacency(edges: &EdgeList, n: usize) -> SparseMatrix {
    let mut neighbors: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for (i, j, _) in edges.iter() {
        neighbors[i].push(j);
        neighbors[j].push(i);
    }
    let degree: Vec<usize> = neighbors.iter().map(Vec::len).collect();
    let rows = neighbors
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            SparseVec::from_pairs(
                nb.iter()
                    .map(|&j| (j, 1.0 / ((degree[i] * degree[j]) as f64).sqrt()))
                    .collect(),
            )
        })
        .collect();
    SparseMatrix::from_rows(n, rows)
}

pub fn build_topic_graph(corpus: &Corpus, td: &TopicDictionary, k: usize) -> Result<TopicGraph> {
    let (tfidf, features) = build_topic_features(corpus, td)?;
    let edges = build_topk_edges(&features, k)?;
    let propagation = normalize_adjacency(&edges, corpus.len());
    Ok(TopicGraph {
        topic_id: td.topic_id,
        num_topics: 1,
        features,
        edges,
        propagation,
        tfidf: Some(tfidf),
    })
}
