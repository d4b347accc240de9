use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate post id `{0}`")]
    DuplicateId(String),

    #[error("label `{0}` is not covered by the label map")]
    UnknownLabel(String),

    #[error("corpus is empty after preprocessing")]
    EmptyCorpus,

    #[error("documents with no in-dictionary tokens: {}", .0.join(", "))]
    EmptyDocuments(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch in graph {graph}: {message}")]
    Shape { graph: usize, message: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("non-finite loss at epoch {0}")]
    Diverged(usize),

    #[error("{0}")]
    Invalid(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
