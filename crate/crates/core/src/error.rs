use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unbalanced ENAMEX tag at byte {offset}")]
    UnbalancedTag { offset: usize },

    #[error("unknown entity type `{0}`")]
    UnknownEntityType(String),

    #[error("spans {a:?} and {b:?} cross")]
    CrossingSpans {
        a: (usize, usize),
        b: (usize, usize),
    },

    #[error("same-level spans {a:?} and {b:?} overlap")]
    OverlappingSpans {
        a: (usize, usize),
        b: (usize, usize),
    },

    #[error("span {span:?} out of range for {len} tokens")]
    SpanOutOfRange { span: (usize, usize), len: usize },

    #[error("invalid BIO sequence: `{tag}` at position {position}")]
    InvalidSequence { position: usize, tag: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("malformed BIO tag `{0}`")]
    MalformedTag(String),

    #[error("malformed joint tag `{0}`")]
    MalformedJointTag(String),

    #[error("unknown segmenter `{0}`")]
    UnknownSegmenter(String),

    #[error("template enables {0} features but no {0} lexicon was given")]
    MissingLexicon(&'static str),

    #[error("line {line}: expected {expected} vector components, found {found}")]
    DimMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid cluster count {m}: need m >= 2 and a vocabulary of at least 2 words")]
    InvalidM { m: usize },

    #[error("gold label `{0}` is not in the label alphabet")]
    UnknownGoldLabel(String),

    #[error("no training data")]
    NoData,

    #[error("objective became non-finite during optimization")]
    NonFiniteObjective,

    #[error(
        "feature template fingerprint mismatch: model has `{expected}`, extractor has `{found}`"
    )]
    FingerprintMismatch { expected: String, found: String },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
