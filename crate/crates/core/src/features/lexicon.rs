use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;

use crate::{Error, Result};

/// Word → Brown-cluster bit-string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterLexicon {
    paths: HashMap<String, String>,
}

impl ClusterLexicon {
    pub fn from_pairs<W: Into<String>, B: Into<String>>(
        pairs: impl IntoIterator<Item = (W, B)>,
    ) -> Self {
        ClusterLexicon {
            paths: pairs
                .into_iter()
                .map(|(w, b)| (w.into(), b.into()))
                .collect(),
        }
    }

    /// Reads `bitstring<TAB>word<TAB>count` lines. Lines starting with `#` are comments.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut paths = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = n + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::MalformedLine {
                    line: line_no,
                    message: "expected bitstring<TAB>word<TAB>count".into(),
                });
            }
            let bits = fields[0];
            if bits.is_empty() || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::MalformedLine {
                    line: line_no,
                    message: format!("`{bits}` is not a bit-string"),
                });
            }
            if let Some(count) = fields.get(2) {
                count
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::MalformedLine {
                        line: line_no,
                        message: format!("bad count `{count}`"),
                    })?;
            }
            if paths
                .insert(fields[1].to_string(), bits.to_string())
                .is_some()
            {
                warn!(
                    "cluster file line {line_no}: duplicate word `{}`, keeping last",
                    fields[1]
                );
            }
        }
        Ok(ClusterLexicon { paths })
    }

    /// Exact surface first, then its lowercase form.
    pub fn lookup(&self, word: &str) -> Option<&str> {
        self.paths
            .get(word)
            .or_else(|| self.paths.get(&word.to_lowercase()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

pub fn load_clusters(path: impl AsRef<Path>) -> Result<ClusterLexicon> {
    ClusterLexicon::from_reader(BufReader::new(File::open(path)?))
}

/// Lowercased word → dense vector of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn from_pairs<W: Into<String>>(
        dim: usize,
        pairs: impl IntoIterator<Item = (W, Vec<f64>)>,
    ) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (i, (w, v)) in pairs.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    line: i + 1,
                    expected: dim,
                    found: v.len(),
                });
            }
            vectors.insert(w.into().to_lowercase(), v);
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    /// Reads GloVe text format: `word v1 … vD` per line.
    pub fn from_reader<R: BufRead>(reader: R, expected_dim: usize) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = n + 1;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            // word2vec-style "count dim" header
            if line_no == 1
                && expected_dim != 1
                && rest.len() == 1
                && word.parse::<usize>().is_ok()
                && rest[0].parse::<usize>().is_ok()
            {
                continue;
            }
            if rest.len() != expected_dim {
                return Err(Error::DimMismatch {
                    line: line_no,
                    expected: expected_dim,
                    found: rest.len(),
                });
            }
            let values = rest
                .iter()
                .map(|x| {
                    x.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::MalformedLine {
                            line: line_no,
                            message: format!("bad vector component `{x}`"),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            if vectors.insert(word.to_lowercase(), values).is_some() {
                warn!("embedding file line {line_no}: duplicate word `{word}`, keeping last");
            }
        }
        Ok(EmbeddingTable {
            dim: expected_dim,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn load_embeddings(path: impl AsRef<Path>, expected_dim: usize) -> Result<EmbeddingTable> {
    EmbeddingTable::from_reader(BufReader::new(File::open(path)?), expected_dim)
}
