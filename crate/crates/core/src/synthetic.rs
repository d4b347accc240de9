//! Seeded synthetic corpora with known structure.
//!
//! Tokens are letter prefixes followed by two digits (`fk07`, `tr13`, ...),
//! which pass through tokenization and stemming unchanged, so the generated
//! posts can go through the same loader and preprocessor as real data.

use std::fmt::Write as _;

use crate::corpus::{Corpus, Document, Label, RawPost};
use crate::rng::{self, Rng};

fn word(prefix: &str, i: usize) -> String {
    format!("{prefix}{i:02}")
}

fn pick(rng: &mut Rng, prefix: &str, size: usize) -> String {
    word(prefix, rng::below(rng, size))
}

fn label_name(label: Label) -> &'static str {
    match label {
        Label::Fake => "false",
        Label::True => "true",
    }
}

fn posts_from(docs: Vec<(Label, Vec<String>)>) -> Vec<RawPost> {
    docs.into_iter()
        .enumerate()
        .map(|(i, (label, tokens))| RawPost {
            id: format!("s{i:04}"),
            text: tokens.join(" "),
            label_raw: label_name(label).to_string(),
        })
        .collect()
}

/// Renders posts as JSONL (`id`, `text`, `label`).
pub fn to_jsonl(posts: &[RawPost]) -> String {
    let mut out = String::new();
    for p in posts {
        let line = serde_json::json!({"id": p.id, "text": p.text, "label": p.label_raw});
        let _ = writeln!(out, "{line}");
    }
    out
}

/// Tokenized corpus straight from generated posts (no stopword or stemming
/// effects, since generated tokens are inert under both).
pub fn to_corpus(posts: &[RawPost]) -> Corpus {
    let documents = posts
        .iter()
        .map(|p| Document {
            id: p.id.clone(),
            tokens: p.text.split_whitespace().map(str::to_string).collect(),
            label: if p.label_raw == "true" {
                Label::True
            } else {
                Label::Fake
            },
        })
        .collect();
    Corpus::from_documents(documents).expect("generated corpus is nonempty")
}

/// Two disjoint 20-word vocabularies `va..`/`vb..`; document `i` draws all of
/// its `doc_len` tokens from vocabulary A when `i` is even and from B when
/// odd. Labels follow the vocabulary.
pub fn disjoint_vocabularies(seed: u64, docs: usize, doc_len: usize) -> Vec<RawPost> {
    let mut r = rng::seeded(seed);
    let generated = (0..docs)
        .map(|i| {
            let (prefix, label) = if i % 2 == 0 {
                ("va", Label::Fake)
            } else {
                ("vb", Label::True)
            };
            let tokens = (0..doc_len).map(|_| pick(&mut r, prefix, 20)).collect();
            (label, tokens)
        })
        .collect();
    posts_from(generated)
}

/// Label-correlated vocabularies with a shared background: each of the
/// `doc_len` tokens comes from the document's class vocabulary (30 words)
/// with probability 0.6, otherwise from a 40-word shared vocabulary.
pub fn separable(seed: u64, docs: usize, doc_len: usize) -> Vec<RawPost> {
    let mut r = rng::seeded(seed);
    let generated = (0..docs)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Fake } else { Label::True };
            let class_prefix = if label == Label::Fake { "fk" } else { "tr" };
            let tokens = (0..doc_len)
                .map(|_| {
                    if rng::uniform(&mut r) < 0.6 {
                        pick(&mut r, class_prefix, 30)
                    } else {
                        pick(&mut r, "sh", 40)
                    }
                })
                .collect();
            (label, tokens)
        })
        .collect();
    posts_from(generated)
}

/// Parameters of the noisy corpus.
#[derive(Debug, Clone, Copy)]
pub struct NoisySpec {
    pub docs: usize,
    pub doc_len: usize,
    /// Stories; each document belongs to one.
    pub themes: usize,
    pub theme_vocab: usize,
    /// Probability that a document carries its story's label; 0.5 makes
    /// stories label-independent.
    pub theme_purity: f64,
    pub class_vocab: usize,
    /// Probability that a token is a class (label-correlated) word.
    pub class_rate: f64,
    /// Probability that a token is a story word; the remainder is uniform
    /// background noise.
    pub theme_rate: f64,
    pub background_vocab: usize,
    /// Fraction of documents whose class words come from the other class.
    pub label_noise: f64,
}

impl Default for NoisySpec {
    fn default() -> Self {
        NoisySpec {
            docs: 600,
            doc_len: 12,
            themes: 80,
            theme_vocab: 30,
            theme_purity: 1.0,
            class_vocab: 40,
            class_rate: 0.05,
            theme_rate: 0.4,
            background_vocab: 150,
            label_noise: 0.0,
        }
    }
}

fn theme_prefix(theme: usize) -> String {
    let a = (b'a' + (theme / 26) as u8) as char;
    let b = (b'a' + (theme % 26) as u8) as char;
    format!("t{a}{b}h")
}

/// Documents grouped into small stories (about 7 documents each with the
/// defaults). Story words are rare and carry the label through the story;
/// class words are sparse. A node's nearest neighbours are its story-mates,
/// so a few neighbours pool useful evidence while many reach into unrelated
/// stories and dilute it.
pub fn noisy(seed: u64, spec: NoisySpec) -> Vec<RawPost> {
    let mut r = rng::seeded(seed);
    let generated = (0..spec.docs)
        .map(|_| {
            let theme = rng::below(&mut r, spec.themes);
            let theme_label = if theme % 2 == 0 { Label::Fake } else { Label::True };
            let label = if rng::uniform(&mut r) < spec.theme_purity {
                theme_label
            } else {
                Label::from_index(1 - theme_label.index()).expect("binary label")
            };
            let flipped = rng::uniform(&mut r) < spec.label_noise;
            let class_prefix = match (label, flipped) {
                (Label::Fake, false) | (Label::True, true) => "fk",
                _ => "tr",
            };
            let theme_prefix = theme_prefix(theme);
            let tokens = (0..spec.doc_len)
                .map(|_| {
                    let u = rng::uniform(&mut r);
                    if u < spec.class_rate {
                        pick(&mut r, class_prefix, spec.class_vocab)
                    } else if u < spec.class_rate + spec.theme_rate {
                        pick(&mut r, &theme_prefix, spec.theme_vocab)
                    } else {
                        pick(&mut r, "bg", spec.background_vocab)
                    }
                })
                .collect();
            (label, tokens)
        })
        .collect();
    posts_from(generated)
}
