//! Two-level nested NER on top of the CRF: separate per-level models, one joint-tag model,
//! or a hybrid of the two.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;

use crate::corpus::{bio_decode, decode_joint, BioTag, EntitySpan, JointTag, Sentence};
use crate::crf::{train, CrfModel, TrainConfig};
use crate::features::{FeatureExtractor, SparseFeatureVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Separated,
    Joint,
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Separated, Strategy::Joint, Strategy::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Separated => "separated",
            Strategy::Joint => "joint",
            Strategy::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "separated" => Ok(Strategy::Separated),
            "joint" => Ok(Strategy::Joint),
            "hybrid" => Ok(Strategy::Hybrid),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedModel {
    pub strategy: Strategy,
    pub level1: Option<CrfModel>,
    pub level2: Option<CrfModel>,
    pub joint: Option<CrfModel>,
}

const LEVEL1_FILE: &str = "level1.crf";
const LEVEL2_FILE: &str = "level2.crf";
const JOINT_FILE: &str = "joint.crf";
const STRATEGY_FILE: &str = "strategy";

type Labelled = (Vec<SparseFeatureVector>, Vec<String>);

/// Trains the models `strategy` needs. Level-3 entities are ignored.
pub fn train_nested(
    corpus: &[Sentence],
    strategy: Strategy,
    extractor: &FeatureExtractor,
    config: &TrainConfig,
) -> Result<NestedModel> {
    if corpus.is_empty() {
        return Err(Error::NoData);
    }
    let deep = corpus
        .iter()
        .flat_map(|s| &s.entities)
        .filter(|e| e.level > 2)
        .count();
    if deep > 0 {
        warn!("ignoring {deep} entities above level 2");
    }

    let features: Vec<Vec<SparseFeatureVector>> = corpus
        .par_iter()
        .map(|s| extractor.extract(&s.tokens))
        .collect();
    let fingerprint = extractor.fingerprint();
    let column = |level: u8| -> Result<Vec<Labelled>> {
        corpus
            .iter()
            .zip(&features)
            .map(|(s, x)| {
                let tags = s.level_tags(level)?;
                Ok((x.clone(), tags.iter().map(ToString::to_string).collect()))
            })
            .collect()
    };
    let joint_column = || -> Result<Vec<Labelled>> {
        corpus
            .iter()
            .zip(&features)
            .map(|(s, x)| {
                let tags = s.joint_tags()?;
                Ok((x.clone(), tags.iter().map(ToString::to_string).collect()))
            })
            .collect()
    };
    let fit = |name: &str, data: Vec<Labelled>| -> Result<CrfModel> {
        let m = train(&data, &fingerprint, config)?;
        info!(
            "{name} model: {} labels, {} features, {} iterations, objective {}",
            m.n_labels(),
            m.features().len(),
            m.metadata["train.iterations"],
            m.metadata["train.final_objective"],
        );
        Ok(m)
    };

    let (mut level1, mut level2, mut joint) = (None, None, None);
    if matches!(strategy, Strategy::Separated | Strategy::Hybrid) {
        level1 = Some(fit("level-1", column(1)?)?);
    }
    if strategy == Strategy::Separated {
        level2 = Some(fit("level-2", column(2)?)?);
    }
    if matches!(strategy, Strategy::Joint | Strategy::Hybrid) {
        joint = Some(fit("joint", joint_column()?)?);
    }
    let mut model = NestedModel {
        strategy,
        level1,
        level2,
        joint,
    };
    for m in model.models_mut() {
        m.metadata.insert("strategy".into(), strategy.to_string());
    }
    Ok(model)
}

fn bio_labels(labels: &[String]) -> Result<Vec<BioTag>> {
    labels.iter().map(|l| l.parse()).collect()
}

fn joint_labels(labels: &[String]) -> Result<Vec<JointTag>> {
    labels.iter().map(|l| l.parse()).collect()
}

impl NestedModel {
    fn models(&self) -> impl Iterator<Item = &CrfModel> {
        [&self.level1, &self.level2, &self.joint]
            .into_iter()
            .filter_map(Option::as_ref)
    }

    fn models_mut(&mut self) -> impl Iterator<Item = &mut CrfModel> {
        [&mut self.level1, &mut self.level2, &mut self.joint]
            .into_iter()
            .filter_map(Option::as_mut)
    }

    fn require<'a>(&self, m: &'a Option<CrfModel>, which: &str) -> Result<&'a CrfModel> {
        m.as_ref().ok_or_else(|| {
            Error::Model(format!(
                "{} model directory has no {which} model",
                self.strategy
            ))
        })
    }

    fn check_invariants(&self) -> Result<()> {
        match self.strategy {
            Strategy::Separated => {
                self.require(&self.level1, "level-1")?;
                self.require(&self.level2, "level-2")?;
            }
            Strategy::Joint => {
                self.require(&self.joint, "joint")?;
            }
            Strategy::Hybrid => {
                self.require(&self.level1, "level-1")?;
                self.require(&self.joint, "joint")?;
            }
        }
        Ok(())
    }

    /// Template fingerprint shared by all contained models.
    pub fn template_fingerprint(&self) -> &str {
        self.models()
            .next()
            .map(CrfModel::template_fingerprint)
            .unwrap_or("")
    }

    /// Fails unless every contained model was trained with `fingerprint`.
    pub fn check_fingerprint(&self, fingerprint: &str) -> Result<()> {
        for m in self.models() {
            if m.template_fingerprint() != fingerprint {
                return Err(Error::FingerprintMismatch {
                    expected: m.template_fingerprint().to_string(),
                    found: fingerprint.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Level-1 and level-2 spans for one sentence's features, extracted under `fingerprint`.
    pub fn predict(
        &self,
        features: &[SparseFeatureVector],
        fingerprint: &str,
    ) -> Result<(Vec<EntitySpan>, Vec<EntitySpan>)> {
        self.check_fingerprint(fingerprint)?;
        self.check_invariants()?;
        let joint_levels = || -> Result<(Vec<BioTag>, Vec<BioTag>)> {
            let joint = self.require(&self.joint, "joint")?;
            Ok(decode_joint(&joint_labels(&joint.viterbi(features))?))
        };
        let (tags1, tags2) = match self.strategy {
            Strategy::Separated => (
                bio_labels(&self.require(&self.level1, "level-1")?.viterbi(features))?,
                bio_labels(&self.require(&self.level2, "level-2")?.viterbi(features))?,
            ),
            Strategy::Joint => joint_levels()?,
            Strategy::Hybrid => (
                bio_labels(&self.require(&self.level1, "level-1")?.viterbi(features))?,
                joint_levels()?.1,
            ),
        };
        let l1 = bio_decode(&tags1, true, 1)?;
        let l2 = bio_decode(&tags2, true, 2)?;
        Ok(resolve_conflicts(&l1, &l2))
    }

    /// Extracts features and predicts; the returned sentence carries the predicted entities.
    pub fn predict_sentence(
        &self,
        extractor: &FeatureExtractor,
        sentence: &Sentence,
    ) -> Result<Sentence> {
        let features = extractor.extract(&sentence.tokens);
        let (l1, l2) = self.predict(&features, &extractor.fingerprint())?;
        let mut out = sentence.clone();
        out.entities = l1.into_iter().chain(l2).collect();
        out.entities.sort();
        Ok(out)
    }

    /// Predicts every sentence in parallel, preserving order.
    pub fn predict_corpus(
        &self,
        extractor: &FeatureExtractor,
        sentences: &[Sentence],
    ) -> Result<Vec<Sentence>> {
        self.check_fingerprint(&extractor.fingerprint())?;
        sentences
            .par_iter()
            .map(|s| self.predict_sentence(extractor, s))
            .collect()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        self.check_invariants()?;
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(STRATEGY_FILE), format!("{}\n", self.strategy))?;
        for (m, file) in [
            (&self.level1, LEVEL1_FILE),
            (&self.level2, LEVEL2_FILE),
            (&self.joint, JOINT_FILE),
        ] {
            let path = dir.join(file);
            match m {
                Some(m) => m.save_to_path(&path)?,
                None if path.exists() => fs::remove_file(&path)?,
                None => {}
            }
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let strategy: Strategy = fs::read_to_string(dir.join(STRATEGY_FILE))?.parse()?;
        let load = |file: &str| -> Result<Option<CrfModel>> {
            let path = dir.join(file);
            if path.exists() {
                CrfModel::load_from_path(&path).map(Some)
            } else {
                Ok(None)
            }
        };
        let model = NestedModel {
            strategy,
            level1: load(LEVEL1_FILE)?,
            level2: load(LEVEL2_FILE)?,
            joint: load(JOINT_FILE)?,
        };
        model.check_invariants()?;
        let fp = model.template_fingerprint().to_string();
        model.check_fingerprint(&fp).map_err(|_| {
            Error::Model("models in the directory were trained with different templates".into())
        })?;
        Ok(model)
    }
}

/// Drops every level-2 span lying inside (or equal to) a level-1 span.
pub fn resolve_conflicts(
    level1: &[EntitySpan],
    level2: &[EntitySpan],
) -> (Vec<EntitySpan>, Vec<EntitySpan>) {
    let kept = level2
        .iter()
        .filter(|s2| !level1.iter().any(|s1| s2.is_within(s1)))
        .copied()
        .collect();
    (level1.to_vec(), kept)
}
