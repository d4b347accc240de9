//! Topic-conditioned multi-graph GCN for short-text classification.
//!
//! The pipeline: tokenize a labeled corpus ([`corpus`]), fit LDA topic models
//! ([`lda`]), keep the heaviest words of every topic ([`topic_dictionary`]),
//! build one TF-IDF / top-K cosine graph per topic ([`graph`]), and train a
//! GCN with one encoder per graph and a shared softmax head ([`gcn`],
//! [`train`]).

pub mod adam;
pub mod checkpoint;
pub mod config;
pub mod corpus;
mod error;
pub mod experiment;
pub mod gcn;
pub mod graph;
pub mod lda;
pub mod metrics;
pub mod rng;
pub mod sparse;
pub mod synthetic;
pub mod tfidf;
pub mod topic_dictionary;
pub mod train;

pub use error::{Error, Result};
