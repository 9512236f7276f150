//! Nested named-entity recognition over linear-chain conditional random fields.
//!
//! The crate covers the whole pipeline for two-level nested entities:
//!
//! - [`corpus`]: data model, inline `ENAMEX` parsing, nesting levels, BIO and joint-tag codecs,
//!   CoNLL column files.
//! - [`preprocess`]: sentence splitting and pluggable word segmentation.
//! - [`features`]: windowed unigram/bigram feature templates, Brown-cluster and embedding
//!   lexicons.
//! - [`brown`]: agglomerative Brown clustering producing bit-string paths.
//! - [`crf`]: linear-chain CRF inference, training and model files.
//! - [`nested`]: the Separated, Joint and Hybrid strategies for two nesting levels.
//! - [`eval`]: exact-match precision/recall/F1 reports.
//! - [`synthetic`]: a seeded generator of nested-entity corpora for end-to-end checks.

pub mod brown;
pub mod corpus;
pub mod crf;
mod error;
pub mod eval;
pub mod features;
pub mod nested;
pub mod preprocess;
pub mod synthetic;

pub use error::{Error, Result};
