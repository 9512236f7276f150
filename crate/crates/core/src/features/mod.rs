//! Sparse per-token features from windowed templates.
//!
//! Feature names have the form `family[offset]=value` for unigrams and
//! `family[d]|family[d+1]=v1|v2` for bigrams over adjacent offsets. Embedding features are
//! real-valued and named `embJ[offset]`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::corpus::Token;
use crate::{Error, Result};

mod lexicon;

pub use lexicon::{load_clusters, load_embeddings, ClusterLexicon, EmbeddingTable};

const BOS: &str = "<BOS>";
const EOS: &str = "<EOS>";

/// Named real-valued features of one token position. Names are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseFeatureVector {
    entries: Vec<(String, f64)>,
}

impl SparseFeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a feature. Callers guarantee the name is not already present.
    pub fn push(&mut self, name: String, value: f64) {
        debug_assert!(!self.contains(&name), "duplicate feature {name}");
        self.entries.push((name, value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(String, f64)> for SparseFeatureVector {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        SparseFeatureVector {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Which feature families are extracted, and how wide the context window is.
///
/// The text form produced by `Display` is the template fingerprint stored in trained models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTemplate {
    /// Half-width of the context window; 2 gives offsets -2..=2.
    pub window: usize,
    pub use_word: bool,
    pub use_lower: bool,
    pub affix_lengths: BTreeSet<usize>,
    pub use_shape: bool,
    /// Capitalized / all-caps / has-digit / has-hyphen indicators.
    pub use_shape_flags: bool,
    pub use_clusters: bool,
    pub cluster_prefix_lengths: BTreeSet<usize>,
    pub use_full_bitstring: bool,
    pub embedding_dim: Option<usize>,
}

impl Default for FeatureTemplate {
    fn default() -> Self {
        FeatureTemplate {
            window: 2,
            use_word: true,
            use_lower: true,
            affix_lengths: (1..=4).collect(),
            use_shape: true,
            use_shape_flags: true,
            use_clusters: false,
            cluster_prefix_lengths: [2, 4, 6, 8, 10, 12, 16, 20].into_iter().collect(),
            use_full_bitstring: true,
            embedding_dim: None,
        }
    }
}

impl FeatureTemplate {
    pub fn validate(&self) -> Result<()> {
        if self.affix_lengths.contains(&0) || self.cluster_prefix_lengths.contains(&0) {
            return Err(Error::Config(
                "affix and cluster prefix lengths must be >= 1".into(),
            ));
        }
        if self.embedding_dim == Some(0) {
            return Err(Error::Config("embedding_dim must be >= 1".into()));
        }
        Ok(())
    }

    pub fn wants_clusters(&self) -> bool {
        self.use_clusters && (self.use_full_bitstring || !self.cluster_prefix_lengths.is_empty())
    }

    pub fn fingerprint(&self) -> String {
        self.to_string()
    }
}

fn join_set(set: &BTreeSet<usize>) -> String {
    set.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |x: bool| if x { "1" } else { "0" };
        write!(
            f,
            "window={};word={};lower={};affix={};shape={};shape_flags={};clusters={};\
             cluster_prefix={};cluster_full={};embedding_dim={}",
            self.window,
            b(self.use_word),
            b(self.use_lower),
            join_set(&self.affix_lengths),
            b(self.use_shape),
            b(self.use_shape_flags),
            b(self.use_clusters),
            join_set(&self.cluster_prefix_lengths),
            b(self.use_full_bitstring),
            self.embedding_dim
                .map_or_else(|| "none".to_string(), |d| d.to_string()),
        )
    }
}

impl FromStr for FeatureTemplate {
    type Err = Error;

    /// Parses `key=value` pairs separated by `;` or newlines. Missing keys keep defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut t = FeatureTemplate::default();
        let bad = |k: &str, v: &str| Error::Config(format!("bad template value {k}={v}"));
        for item in s
            .split([';', '\n'])
            .map(str::trim)
            .filter(|i| !i.is_empty())
        {
            if item.starts_with('#') {
                continue;
            }
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad template entry `{item}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let flag = || match v {
                "1" | "true" | "on" => Ok(true),
                "0" | "false" | "off" => Ok(false),
                _ => Err(bad(k, v)),
            };
            let set = || -> Result<BTreeSet<usize>> {
                v.split(',')
                    .filter(|x| !x.trim().is_empty())
                    .map(|x| x.trim().parse().map_err(|_| bad(k, v)))
                    .collect()
            };
            match k {
                "window" => t.window = v.parse().map_err(|_| bad(k, v))?,
                "word" => t.use_word = flag()?,
                "lower" => t.use_lower = flag()?,
                "affix" => t.affix_lengths = set()?,
                "shape" => t.use_shape = flag()?,
                "shape_flags" => t.use_shape_flags = flag()?,
                "clusters" => t.use_clusters = flag()?,
                "cluster_prefix" => t.cluster_prefix_lengths = set()?,
                "cluster_full" => t.use_full_bitstring = flag()?,
                "embedding_dim" => {
                    t.embedding_dim = match v {
                        "none" | "" => None,
                        _ => Some(v.parse().map_err(|_| bad(k, v))?),
                    }
                }
                _ => return Err(Error::Config(format!("unknown template key `{k}`"))),
            }
        }
        t.validate()?;
        Ok(t)
    }
}

/// Character-class shape of a word and its run-collapsed form.
///
/// Uppercase letters map to `A`, lowercase to `a`, digits to `0`; anything else is kept.
pub fn word_shape(surface: &str) -> (String, String) {
    let shape: String = surface
        .chars()
        .map(|c| {
            if c.is_uppercase() {
                'A'
            } else if c.is_lowercase() {
                'a'
            } else if c.is_numeric() {
                '0'
            } else {
                c
            }
        })
        .collect();
    let mut collapsed = String::with_capacity(shape.len());
    let mut last = None;
    for c in shape.chars() {
        if last != Some(c) {
            collapsed.push(c);
        }
        last = Some(c);
    }
    (shape, collapsed)
}

/// Backslash-escapes the characters that delimit feature names, plus tab and newlines.
pub fn escape_value(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    for c in v.chars() {
        match c {
            '\\' | '=' | '|' | '+' => {
                out.push('\\');
                out.push(c);
            }
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

/// Per-token values computed once per sentence.
struct TokenAttrs<'a> {
    word: String,
    lower: String,
    prefixes: Vec<Option<String>>,
    suffixes: Vec<Option<String>>,
    shape: String,
    shape_collapsed: String,
    flags: Vec<&'static str>,
    bits: Option<&'a str>,
    embedding: Option<&'a [f64]>,
}

fn token_attrs<'a>(
    token: &Token,
    template: &FeatureTemplate,
    clusters: Option<&'a ClusterLexicon>,
    embeddings: Option<&'a EmbeddingTable>,
) -> TokenAttrs<'a> {
    let surface = token.surface.as_str();
    let chars: Vec<char> = surface.chars().collect();
    let lower = surface.to_lowercase();
    let affix = |k: usize, from_end: bool| {
        (chars.len() >= k).then(|| {
            let piece: String = if from_end {
                chars[chars.len() - k..].iter().collect()
            } else {
                chars[..k].iter().collect()
            };
            escape_value(&piece)
        })
    };
    let (shape, shape_collapsed) = word_shape(surface);
    let mut flags = Vec::new();
    if template.use_shape_flags {
        if chars.first().is_some_and(|c| c.is_uppercase()) {
            flags.push("cap");
        }
        if chars.iter().any(|c| c.is_alphabetic()) && chars.iter().all(|c| !c.is_lowercase()) {
            flags.push("allcaps");
        }
        if chars.iter().any(|c| c.is_numeric()) {
            flags.push("digit");
        }
        if chars.contains(&'-') {
            flags.push("hyphen");
        }
    }
    TokenAttrs {
        word: escape_value(surface),
        prefixes: template
            .affix_lengths
            .iter()
            .map(|&k| affix(k, false))
            .collect(),
        suffixes: template
            .affix_lengths
            .iter()
            .map(|&k| affix(k, true))
            .collect(),
        shape: escape_value(&shape),
        shape_collapsed: escape_value(&shape_collapsed),
        flags,
        bits: clusters.and_then(|c| c.lookup(surface)),
        embedding: embeddings.and_then(|e| e.lookup(surface)),
        lower: escape_value(&lower),
    }
}

fn emit(attrs: &[TokenAttrs<'_>], i: usize, template: &FeatureTemplate) -> SparseFeatureVector {
    let n = attrs.len() as isize;
    let w = template.window as isize;
    let offsets: Vec<isize> = (-w..=w).collect();
    let at = |d: isize| -> Option<&TokenAttrs<'_>> {
        let j = i as isize + d;
        (0..n).contains(&j).then(|| &attrs[j as usize])
    };
    let sentinel = |d: isize| if (i as isize + d) < 0 { BOS } else { EOS };

    let mut fv = SparseFeatureVector::new();

    // Positional families get unigram and bigram expansion.
    let mut positional =
        |family: &str, get: &dyn for<'a> Fn(&'a TokenAttrs<'a>) -> Option<&'a str>| {
            let values: Vec<Option<&str>> = offsets
                .iter()
                .map(|&d| match at(d) {
                    Some(a) => get(a),
                    None => Some(sentinel(d)),
                })
                .collect();
            for (&d, v) in offsets.iter().zip(&values) {
                if let Some(v) = v {
                    fv.push(format!("{family}[{d}]={v}"), 1.0);
                }
            }
            for k in 0..offsets.len().saturating_sub(1) {
                if let (Some(a), Some(b)) = (values[k], values[k + 1]) {
                    let (d0, d1) = (offsets[k], offsets[k + 1]);
                    fv.push(format!("{family}[{d0}]|{family}[{d1}]={a}|{b}"), 1.0);
                }
            }
        };

    if template.use_word {
        positional("w", &|a| Some(&a.word));
    }
    if template.use_lower {
        positional("wl", &|a| Some(&a.lower));
    }
    for (slot, k) in template.affix_lengths.iter().enumerate() {
        positional(&format!("p{k}"), &|a| a.prefixes[slot].as_deref());
        positional(&format!("s{k}"), &|a| a.suffixes[slot].as_deref());
    }
    if template.use_shape {
        positional("sh", &|a| Some(&a.shape));
        positional("shc", &|a| Some(&a.shape_collapsed));
    }

    // Everything below is unigram only.
    for &d in &offsets {
        let Some(a) = at(d) else { continue };
        for flag in &a.flags {
            fv.push(format!("flag[{d}]={flag}"), 1.0);
        }
        if template.use_clusters {
            if let Some(bits) = a.bits {
                if template.use_full_bitstring {
                    fv.push(format!("bc[{d}]={bits}"), 1.0);
                }
                for &k in &template.cluster_prefix_lengths {
                    let prefix = &bits[..k.min(bits.len())];
                    fv.push(format!("bc{k}[{d}]={prefix}"), 1.0);
                }
            }
        }
        if template.embedding_dim.is_some() {
            if let Some(vec) = a.embedding {
                for (j, &x) in vec.iter().enumerate() {
                    fv.push(format!("emb{j}[{d}]"), x);
                }
            }
        }
    }
    fv
}

/// A template bound to the lexicons it needs.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    template: FeatureTemplate,
    clusters: Option<ClusterLexicon>,
    embeddings: Option<EmbeddingTable>,
}

impl FeatureExtractor {
    pub fn new(
        template: FeatureTemplate,
        clusters: Option<ClusterLexicon>,
        embeddings: Option<EmbeddingTable>,
    ) -> Result<Self> {
        template.validate()?;
        check_resources(&template, clusters.as_ref(), embeddings.as_ref())?;
        Ok(FeatureExtractor {
            template,
            clusters,
            embeddings,
        })
    }

    pub fn template(&self) -> &FeatureTemplate {
        &self.template
    }

    pub fn fingerprint(&self) -> String {
        self.template.fingerprint()
    }

    /// Features for every position of a sentence.
    pub fn extract(&self, tokens: &[Token]) -> Vec<SparseFeatureVector> {
        let attrs: Vec<_> = tokens
            .iter()
            .map(|t| {
                token_attrs(
                    t,
                    &self.template,
                    self.clusters.as_ref(),
                    self.embeddings.as_ref(),
                )
            })
            .collect();
        (0..tokens.len())
            .map(|i| emit(&attrs, i, &self.template))
            .collect()
    }
}

fn check_resources(
    template: &FeatureTemplate,
    clusters: Option<&ClusterLexicon>,
    embeddings: Option<&EmbeddingTable>,
) -> Result<()> {
    if template.wants_clusters() && clusters.is_none() {
        return Err(Error::MissingLexicon("cluster"));
    }
    if let Some(dim) = template.embedding_dim {
        let table = embeddings.ok_or(Error::MissingLexicon("embedding"))?;
        if table.dim() != dim {
            return Err(Error::Config(format!(
                "template expects {dim}-dimensional embeddings, table has {}",
                table.dim()
            )));
        }
    }
    Ok(())
}

/// Features of position `i` of `sentence`.
pub fn extract_token_features(
    sentence: &[Token],
    i: usize,
    template: &FeatureTemplate,
    clusters: Option<&ClusterLexicon>,
    embeddings: Option<&EmbeddingTable>,
) -> Result<SparseFeatureVector> {
    check_resources(template, clusters, embeddings)?;
    if i >= sentence.len() {
        return Err(Error::SpanOutOfRange {
            span: (i, i + 1),
            len: sentence.len(),
        });
    }
    let attrs: Vec<_> = sentence
        .iter()
        .map(|t| token_attrs(t, template, clusters, embeddings))
        .collect();
    Ok(emit(&attrs, i, template))
}
