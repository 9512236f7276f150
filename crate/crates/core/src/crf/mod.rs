//! Linear-chain conditional random fields over sparse named features.
//!
//! Weights are laid out as an emission block (feature-major, one weight per label) followed
//! by an L×L transition block. Transitions depend on the label pair only.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;

use crate::corpus::{BioTag, JointTag};
use crate::features::SparseFeatureVector;

mod inference;
mod io;
mod train;

pub use inference::{
    backward, forward, log_partition, marginals, marginals_with_log_z, path_score, viterbi_path,
};
pub use train::{
    log_likelihood_and_gradient, train, train_traced, Instance, Optimizer, TrainConfig,
};

/// Ordered label set. Index order is fixed at training time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelAlphabet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of `label`, adding it if new.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), self.labels.len() - 1);
        self.labels.len() - 1
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for LabelAlphabet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        let mut a = LabelAlphabet::new();
        for s in iter {
            a.intern(s.as_ref());
        }
        a
    }
}

/// Emission feature names mapped to dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureAlphabet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl FeatureAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for FeatureAlphabet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        let mut a = FeatureAlphabet::new();
        for s in iter {
            a.intern(s.as_ref());
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub(crate) labels: LabelAlphabet,
    pub(crate) features: FeatureAlphabet,
    pub(crate) weights: Vec<f64>,
    pub(crate) template_fingerprint: String,
    pub metadata: BTreeMap<String, String>,
}

impl CrfModel {
    /// A model with every weight at zero.
    pub fn zeros(
        labels: LabelAlphabet,
        features: FeatureAlphabet,
        template_fingerprint: &str,
    ) -> Self {
        let n = features.len() * labels.len() + labels.len() * labels.len();
        CrfModel {
            labels,
            features,
            weights: vec![0.0; n],
            template_fingerprint: template_fingerprint.to_string(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn labels(&self) -> &LabelAlphabet {
        &self.labels
    }

    pub fn features(&self) -> &FeatureAlphabet {
        &self.features
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn template_fingerprint(&self) -> &str {
        &self.template_fingerprint
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    fn transition_offset(&self) -> usize {
        self.features.len() * self.labels.len()
    }

    pub fn emission_index(&self, feature: usize, label: usize) -> usize {
        feature * self.labels.len() + label
    }

    pub fn transition_index(&self, prev: usize, cur: usize) -> usize {
        self.transition_offset() + prev * self.labels.len() + cur
    }

    pub fn emission_weight(&self, feature: &str, label: &str) -> f64 {
        match (self.features.get(feature), self.labels.get(label)) {
            (Some(f), Some(y)) => self.weights[self.emission_index(f, y)],
            _ => 0.0,
        }
    }

    pub fn transition_weight(&self, prev: &str, cur: &str) -> f64 {
        match (self.labels.get(prev), self.labels.get(cur)) {
            (Some(p), Some(y)) => self.weights[self.transition_index(p, y)],
            _ => 0.0,
        }
    }

    pub fn set_emission_weight(&mut self, feature: &str, label: &str, w: f64) -> bool {
        match (self.features.get(feature), self.labels.get(label)) {
            (Some(f), Some(y)) => {
                let i = self.emission_index(f, y);
                self.weights[i] = w;
                true
            }
            _ => false,
        }
    }

    pub fn set_transition_weight(&mut self, prev: &str, cur: &str, w: f64) -> bool {
        match (self.labels.get(prev), self.labels.get(cur)) {
            (Some(p), Some(y)) => {
                let i = self.transition_index(p, y);
                self.weights[i] = w;
                true
            }
            _ => false,
        }
    }

    pub fn transition_matrix(&self) -> Array2<f64> {
        let l = self.labels.len();
        let off = self.transition_offset();
        Array2::from_shape_vec((l, l), self.weights[off..off + l * l].to_vec())
            .expect("transition block is L×L")
    }

    /// Resolves feature names to indices, skipping names the model has never seen.
    pub fn compile(&self, sentence: &[SparseFeatureVector]) -> Vec<Vec<(usize, f64)>> {
        sentence
            .iter()
            .map(|fv| {
                fv.iter()
                    .filter_map(|(name, v)| self.features.get(name).map(|f| (f, v)))
                    .collect()
            })
            .collect()
    }

    pub(crate) fn emission_matrix(&self, compiled: &[Vec<(usize, f64)>]) -> Array2<f64> {
        emission_scores(&self.weights, self.labels.len(), compiled)
    }

    /// Viterbi label sequence.
    pub fn viterbi(&self, sentence: &[SparseFeatureVector]) -> Vec<String> {
        let (em, tr) = compute_potentials(sentence, self);
        let (path, _) = viterbi_path(&em, &tr);
        path.into_iter()
            .map(|y| self.labels.name(y).to_string())
            .collect()
    }

    /// Viterbi restricted to well-formed BIO sequences: no `I-X` at the start or after a
    /// label of another type. Joint labels apply the rule to both levels.
    pub fn viterbi_constrained(&self, sentence: &[SparseFeatureVector]) -> Vec<String> {
        let (mut em, mut tr) = compute_potentials(sentence, self);
        let l = self.labels.len();
        let parsed: Vec<Option<Vec<BioTag>>> = self
            .labels
            .labels()
            .iter()
            .map(|s| label_levels(s))
            .collect();
        if em.nrows() > 0 {
            for y in 0..l {
                if !bio_allowed(None, parsed[y].as_deref()) {
                    em[[0, y]] = f64::NEG_INFINITY;
                }
            }
        }
        for p in 0..l {
            for y in 0..l {
                if !bio_allowed(parsed[p].as_deref(), parsed[y].as_deref()) {
                    tr[[p, y]] = f64::NEG_INFINITY;
                }
            }
        }
        let (path, _) = viterbi_path(&em, &tr);
        path.into_iter()
            .map(|y| self.labels.name(y).to_string())
            .collect()
    }
}

fn label_levels(label: &str) -> Option<Vec<BioTag>> {
    if let Ok(t) = label.parse::<BioTag>() {
        return Some(vec![t]);
    }
    label
        .parse::<JointTag>()
        .ok()
        .map(|j| vec![j.level1, j.level2])
}

fn bio_allowed(prev: Option<&[BioTag]>, cur: Option<&[BioTag]>) -> bool {
    let Some(cur) = cur else { return true };
    cur.iter().enumerate().all(|(k, tag)| match tag {
        BioTag::I(ty) => match prev.and_then(|p| p.get(k)) {
            Some(BioTag::B(p) | BioTag::I(p)) => p == ty,
            _ => false,
        },
        _ => true,
    })
}

pub(crate) fn emission_scores(
    weights: &[f64],
    n_labels: usize,
    compiled: &[Vec<(usize, f64)>],
) -> Array2<f64> {
    let mut em = Array2::<f64>::zeros((compiled.len(), n_labels));
    for (t, feats) in compiled.iter().enumerate() {
        let mut row = em.row_mut(t);
        for &(f, v) in feats {
            let base = f * n_labels;
            for (y, cell) in row.iter_mut().enumerate() {
                *cell += v * weights[base + y];
            }
        }
    }
    em
}

/// Emission (T×L) and transition (L×L) scores of a sentence under `model`.
/// Features unknown to the model contribute nothing.
pub fn compute_potentials(
    sentence: &[SparseFeatureVector],
    model: &CrfModel,
) -> (Array2<f64>, Array2<f64>) {
    let compiled = model.compile(sentence);
    (model.emission_matrix(&compiled), model.transition_matrix())
}
