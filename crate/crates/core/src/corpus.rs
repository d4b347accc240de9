//! Loading labeled posts and turning them into a tokenized corpus.
//!
//! The preprocessing pipeline runs in a fixed order: lowercase, URL removal,
//! non-alphanumeric stripping, whitespace tokenization, stopword removal,
//! normalization (stemming), label mapping and the minimum-length filter.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Documents with fewer tokens than this are dropped.
pub const MIN_DOC_TOKENS: usize = 3;

/// Bundled English stopword list, one token per line.
pub const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub id: String,
    pub text: String,
    pub label_raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(InputFormat::Jsonl),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(Error::Config(format!("unknown input format `{other}`"))),
        }
    }
}

/// Binary class. Fake news is 0, true news is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Fake = 0,
    True = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::Fake),
            1 => Some(Label::True),
            _ => None,
        }
    }
}

/// Where a raw dataset label goes: one of the two classes, or nowhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelTarget {
    Class(Label),
    Drop,
}

impl FromStr for LabelTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(LabelTarget::Class(Label::Fake)),
            "1" => Ok(LabelTarget::Class(Label::True)),
            "drop" => Ok(LabelTarget::Drop),
            other => Err(Error::Config(format!(
                "label target must be 0, 1 or drop, got `{other}`"
            ))),
        }
    }
}

/// Maps dataset label strings to classes. Labels not listed fall through to
/// `fallback`; with no fallback they are an error.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    entries: HashMap<String, LabelTarget>,
    fallback: Option<LabelTarget>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, raw: &str, target: LabelTarget) -> Self {
        self.entries.insert(raw.to_string(), target);
        self
    }

    pub fn with_fallback(mut self, target: LabelTarget) -> Self {
        self.fallback = Some(target);
        self
    }

    pub fn insert(&mut self, raw: &str, target: LabelTarget) {
        self.entries.insert(raw.to_string(), target);
    }

    /// Twitter15 / Twitter16 label vocabulary.
    pub fn twitter() -> Self {
        Self::new()
            .with("false", LabelTarget::Class(Label::Fake))
            .with("true", LabelTarget::Class(Label::True))
            .with("unverified", LabelTarget::Drop)
            .with("non-rumor", LabelTarget::Drop)
    }

    /// PHEME: only the two resolved rumour veracities are kept.
    pub fn pheme() -> Self {
        Self::new()
            .with("rumour-false", LabelTarget::Class(Label::Fake))
            .with("rumour-true", LabelTarget::Class(Label::True))
            .with_fallback(LabelTarget::Drop)
    }

    /// Plain `0` / `1` labels.
    pub fn binary() -> Self {
        Self::new()
            .with("0", LabelTarget::Class(Label::Fake))
            .with("1", LabelTarget::Class(Label::True))
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "twitter" | "twitter15" | "twitter16" => Ok(Self::twitter()),
            "pheme" => Ok(Self::pheme()),
            "binary" => Ok(Self::binary()),
            other => Err(Error::Config(format!("unknown label profile `{other}`"))),
        }
    }

    pub fn resolve(&self, raw: &str) -> Result<LabelTarget> {
        self.entries
            .get(raw)
            .copied()
            .or(self.fallback)
            .ok_or_else(|| Error::UnknownLabel(raw.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalizer {
    #[default]
    Stem,
    None,
}

impl FromStr for Normalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stem" => Ok(Normalizer::Stem),
            "none" => Ok(Normalizer::None),
            other => Err(Error::Config(format!("unknown normalizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(Into::into).collect())
    }
}

/// Text normalization settings.
pub struct Preprocessor {
    stopwords: Stopwords,
    stemmer: Option<Stemmer>,
}

impl fmt::Debug for Preprocessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Preprocessor")
            .field("stopwords", &self.stopwords.len())
            .field("stem", &self.stemmer.is_some())
            .finish()
    }
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self::new(Stopwords::english(), Normalizer::Stem)
    }
}

impl Preprocessor {
    pub fn new(stopwords: Stopwords, normalizer: Normalizer) -> Self {
        let stemmer = match normalizer {
            Normalizer::Stem => Some(Stemmer::create(Algorithm::English)),
            Normalizer::None => None,
        };
        Self { stopwords, stemmer }
    }

    /// Tokenize one text: steps 1 to 6 of the pipeline.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let lowered = text.to_lowercase();
        let without_urls = strip_urls(&lowered);
        let cleaned: String = without_urls
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect();
        cleaned
            .split_whitespace()
            .filter(|t| !self.stopwords.contains(t))
            .filter_map(|t| {
                let normalized = self.normalize(t);
                // A stem can land on a stopword ("doing" -> "do").
                (!normalized.is_empty() && !self.stopwords.contains(&normalized)).then_some(normalized)
            })
            .collect()
    }

    fn normalize(&self, token: &str) -> String {
        let Some(stemmer) = &self.stemmer else {
            return token.to_string();
        };
        // Snowball English is not idempotent on every word; iterate to a
        // fixed point so re-tokenizing a corpus is a no-op.
        let mut current = stemmer.stem(token).into_owned();
        for _ in 0..8 {
            let next = stemmer.stem(&current);
            if next == current {
                break;
            }
            current = next.into_owned();
        }
        current
    }
}

const URL_PREFIXES: [&str; 2] = ["http", "www."];

/// Removes every maximal run starting with a URL prefix up to the next
/// whitespace. A prefix only counts at the start of the text or after a
/// non-alphanumeric character.
fn strip_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    let mut prev: Option<char> = None;
    while let Some(c) = rest.chars().next() {
        let at_boundary = prev.is_none_or(|p| !p.is_alphanumeric());
        if at_boundary && URL_PREFIXES.iter().any(|p| rest.starts_with(p)) {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            rest = &rest[end..];
            out.push(' ');
            prev = Some(' ');
            continue;
        }
        out.push(c);
        prev = Some(c);
        rest = &rest[c.len_utf8()..];
    }
    out
}

/// Sorted vocabulary with its inverse index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Dictionary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Dictionary {
    /// Builds a dictionary from any token collection; duplicates collapse and
    /// the result is sorted.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let tokens: Vec<String> = sorted.into_iter().collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Dictionary { tokens, index }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

impl From<Vec<String>> for Dictionary {
    fn from(tokens: Vec<String>) -> Self {
        Dictionary::from_tokens(tokens)
    }
}

impl From<Dictionary> for Vec<String> {
    fn from(d: Dictionary) -> Self {
        d.tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: Label,
}

/// Preprocessed documents in a fixed order; a document's position is its node
/// id in every topic graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    dictionary: Dictionary,
}

impl Corpus {
    /// Wraps already-tokenized documents, building the dictionary from them.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        let dictionary = build_dictionary(&documents)?;
        Ok(Corpus { documents, dictionary })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.documents.iter().map(|d| d.label).collect()
    }

    /// Each document as corpus-dictionary word ids.
    pub fn token_ids(&self) -> Vec<Vec<usize>> {
        self.documents
            .iter()
            .map(|d| {
                d.tokens
                    .iter()
                    .map(|t| self.dictionary.get(t).expect("dictionary covers corpus"))
                    .collect()
            })
            .collect()
    }

    /// SHA-256 over ids, labels and tokens; used to key cached topic models.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for d in &self.documents {
            h.update(d.id.as_bytes());
            h.update([0xff, d.label as u8]);
            for t in &d.tokens {
                h.update(t.as_bytes());
                h.update([0]);
            }
            h.update([0xfe]);
        }
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn build_dictionary(documents: &[Document]) -> Result<Dictionary> {
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Dictionary::from_tokens(
        documents.iter().flat_map(|d| d.tokens.iter().cloned()),
    ))
}

pub fn load_posts(path: &Path, format: InputFormat) -> Result<Vec<RawPost>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_posts(std::io::BufReader::new(file), format)
}

#[derive(Deserialize)]
struct JsonPost {
    id: String,
    text: String,
    label: String,
}

/// Parses posts from any reader. Blank lines are skipped.
pub fn read_posts<R: BufRead>(reader: R, format: InputFormat) -> Result<Vec<RawPost>> {
    let mut posts = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let post = match format {
            InputFormat::Jsonl => {
                let p: JsonPost = serde_json::from_str(line).map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?;
                RawPost {
                    id: p.id,
                    text: p.text,
                    label_raw: p.label,
                }
            }
            InputFormat::Tsv => {
                let mut cols = line.splitn(3, '\t');
                match (cols.next(), cols.next(), cols.next()) {
                    (Some(id), Some(label), Some(text)) => RawPost {
                        id: id.to_string(),
                        text: text.to_string(),
                        label_raw: label.to_string(),
                    },
                    _ => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "expected 3 tab-separated columns: id, label, text".into(),
                        })
                    }
                }
            }
        };
        if post.id.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty id".into(),
            });
        }
        if !seen.insert(post.id.clone()) {
            return Err(Error::DuplicateId(post.id));
        }
        posts.push(post);
    }
    Ok(posts)
}

/// Runs the full preprocessing pipeline and builds the corpus dictionary.
pub fn preprocess(posts: &[RawPost], label_map: &LabelMap, preprocessor: &Preprocessor) -> Result<Corpus> {
    let mut documents = Vec::with_capacity(posts.len());
    for post in posts {
        let label = match label_map.resolve(&post.label_raw)? {
            LabelTarget::Class(l) => l,
            LabelTarget::Drop => continue,
        };
        let tokens = preprocessor.tokenize(&post.text);
        if tokens.len() < MIN_DOC_TOKENS {
            continue;
        }
        documents.push(Document {
            id: post.id.clone(),
            tokens,
            label,
        });
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Corpus::from_documents(documents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use sha2::{Digest, Sha256};

    fn post(id: &str, text: &str, label: &str) -> RawPost {
        RawPost {
            id: id.into(),
            text: text.into(),
            label_raw: label.into(),
        }
    }

    #[test]
    fn stopword_file_is_pinned() {
        let digest = Sha256::digest(ENGLISH_STOPWORDS.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(hex, "8bdb2ec2335e8a6859d252a30c36b2ad00bd9d5454798898a055507c7742b050");
        assert_eq!(Stopwords::english().len(), 156);
    }

    #[test]
    fn single_jsonl_record() {
        let src = r#"{"id":"t1","text":"hello world today","label":"false"}"#;
        let posts = read_posts(src.as_bytes(), InputFormat::Jsonl).unwrap();
        assert_eq!(posts, vec![post("t1", "hello world today", "false")]);
    }

    #[test]
    fn empty_input_gives_no_posts() {
        assert!(read_posts(&b""[..], InputFormat::Jsonl).unwrap().is_empty());
        assert!(read_posts(&b""[..], InputFormat::Tsv).unwrap().is_empty());
    }

    #[test]
    fn tsv_rows_keep_file_order() {
        let src = "a\ttrue\tfirst post here\nb\tfalse\tsecond\tpost with tab\nc\tunverified\tthird\n";
        let posts = read_posts(src.as_bytes(), InputFormat::Tsv).unwrap();
        assert_eq!(
            posts,
            vec![
                post("a", "first post here", "true"),
                post("b", "second\tpost with tab", "false"),
                post("c", "third", "unverified"),
            ]
        );
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let src = "{\"id\":\"a\",\"text\":\"x\",\"label\":\"true\"}\n{oops}\n";
        match read_posts(src.as_bytes(), InputFormat::Jsonl) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match read_posts("a\tonly two\n".as_bytes(), InputFormat::Tsv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_is_named() {
        let src = "x\ttrue\ta b c\nx\tfalse\td e f\n";
        match read_posts(src.as_bytes(), InputFormat::Tsv) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "x"),
            other => panic!("expected duplicate id, got {other:?}"),
        }
    }

    #[test]
    fn short_document_is_dropped() {
        let stop: Stopwords = ["the", "and"].into_iter().collect();
        let pre = Preprocessor::new(stop, Normalizer::Stem);
        assert_eq!(pre.tokenize("The CAT, and the cat! http://x.co"), vec!["cat", "cat"]);
        let posts = vec![
            post("a", "The CAT, and the cat! http://x.co", "true"),
            post("b", "three words remain", "true"),
        ];
        let corpus = preprocess(&posts, &LabelMap::twitter(), &pre).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.documents()[0].id, "b");
    }

    #[test]
    fn stems_are_pinned() {
        let pre = Preprocessor::new(Stopwords::empty(), Normalizer::Stem);
        assert_eq!(pre.tokenize("Breaking News Alert"), vec!["break", "news", "alert"]);
        let raw = Preprocessor::new(Stopwords::empty(), Normalizer::None);
        assert_eq!(raw.tokenize("Breaking News Alert"), vec!["breaking", "news", "alert"]);
    }

    #[test]
    fn dropped_labels_are_absent() {
        let pre = Preprocessor::new(Stopwords::empty(), Normalizer::None);
        let posts = vec![
            post("a", "one two three", "unverified"),
            post("b", "four five six", "false"),
        ];
        let corpus = preprocess(&posts, &LabelMap::twitter(), &pre).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.documents()[0].label, Label::Fake);
    }

    #[test]
    fn pheme_profile_drops_other_labels() {
        let pre = Preprocessor::new(Stopwords::empty(), Normalizer::None);
        let posts = vec![
            post("a", "one two three", "non-rumour"),
            post("b", "four five six", "rumour-true"),
        ];
        let corpus = preprocess(&posts, &LabelMap::pheme(), &pre).unwrap();
        assert_eq!(corpus.labels(), vec![Label::True]);
    }

    #[test]
    fn unknown_label_and_empty_corpus_are_errors() {
        let pre = Preprocessor::default();
        let posts = vec![post("a", "one two three", "maybe")];
        assert!(matches!(
            preprocess(&posts, &LabelMap::twitter(), &pre),
            Err(Error::UnknownLabel(l)) if l == "maybe"
        ));
        let posts = vec![post("a", "too short", "true")];
        assert!(matches!(
            preprocess(&posts, &LabelMap::twitter(), &pre),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn urls_are_removed_up_to_whitespace() {
        assert_eq!(
            strip_urls("see https://a.b/c?d=1 now")
                .split_whitespace()
                .collect::<Vec<_>>(),
            ["see", "now"]
        );
        assert_eq!(
            strip_urls("x www.foo.com y").split_whitespace().collect::<Vec<_>>(),
            ["x", "y"]
        );
        assert_eq!(
            strip_urls("(http://t.co/abc) ok")
                .split_whitespace()
                .collect::<Vec<_>>(),
            ["(", "ok"]
        );
        // Not at a word boundary: left alone.
        assert_eq!(strip_urls("xhttp yes"), "xhttp yes");
    }

    #[test]
    fn stems_landing_on_stopwords_are_removed() {
        let pre = Preprocessor::default();
        assert!(!pre.tokenize("doing").contains(&"do".to_string()));
    }

    #[test]
    fn small_dictionaries() {
        let doc = |t: &[&str]| Document {
            id: String::new(),
            tokens: t.iter().map(|s| s.to_string()).collect(),
            label: Label::Fake,
        };
        let d = build_dictionary(&[doc(&["b", "a", "a"]), doc(&["c", "a", "b"])]).unwrap();
        assert_eq!(d.tokens(), ["a", "b", "c"]);
        let d = build_dictionary(&[doc(&["x", "x", "x"])]).unwrap();
        assert_eq!(d.tokens(), ["x"]);
        assert!(matches!(build_dictionary(&[]), Err(Error::EmptyCorpus)));
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "Running",
            "jumped",
            "THE",
            "cats",
            "and",
            "news",
            "breaking",
            "happily",
            "www.x.org",
            "http://t.co/z",
            "doing",
            "u.s.",
            "2020",
            "café",
            "is",
            "organization",
            "generously",
            "wasn't",
            "!!",
            "ties",
            "agreed",
            "relational",
            "a1b2",
        ])
        .prop_map(str::to_string)
    }

    proptest! {
        #[test]
        fn retokenizing_is_idempotent(words in prop::collection::vec(word(), 0..30)) {
            let pre = Preprocessor::default();
            let tokens = pre.tokenize(&words.join(" "));
            prop_assert_eq!(pre.tokenize(&tokens.join(" ")), tokens);
        }

        #[test]
        fn tokens_are_clean(words in prop::collection::vec(word(), 0..30)) {
            let stop = Stopwords::english();
            let pre = Preprocessor::default();
            for t in pre.tokenize(&words.join(" ")) {
                prop_assert!(t.chars().all(char::is_alphanumeric));
                prop_assert!(!t.chars().any(char::is_uppercase));
                prop_assert!(!stop.contains(&t));
            }
        }

        #[test]
        fn dictionary_matches_set_union(docs in prop::collection::vec(
            prop::collection::vec("[a-e]{1,3}", 1..8), 1..50)) {
            let documents: Vec<Document> = docs.iter().map(|t| Document {
                id: String::new(), tokens: t.clone(), label: Label::True,
            }).collect();
            let dict = build_dictionary(&documents).unwrap();
            let mut oracle: Vec<String> = docs.iter().flatten().cloned().collect::<HashSet<_>>().into_iter().collect();
            oracle.sort();
            prop_assert_eq!(dict.tokens(), &oracle[..]);
            for (i, t) in dict.tokens().iter().enumerate() {
                prop_assert_eq!(dict.get(t), Some(i));
            }
        }
    }
}
