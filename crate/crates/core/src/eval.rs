//! Exact-match entity scoring in the style of conlleval.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{
    bio_decode, bio_encode, syllable_explode, Document, EntitySpan, EntityType, Sentence,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bucket {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl Bucket {
    fn add(&mut self, other: Bucket) {
        self.gold += other.gold;
        self.predicted += other.predicted;
        self.correct += other.correct;
    }
}

/// Gold / predicted / correct counts per entity type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    buckets: [Bucket; 4],
}

fn type_index(t: EntityType) -> usize {
    EntityType::ALL
        .iter()
        .position(|&x| x == t)
        .expect("closed enum")
}

impl EvalCounts {
    pub fn get(&self, t: EntityType) -> Bucket {
        self.buckets[type_index(t)]
    }

    pub fn get_mut(&mut self, t: EntityType) -> &mut Bucket {
        &mut self.buckets[type_index(t)]
    }

    pub fn total(&self) -> Bucket {
        let mut b = Bucket::default();
        for x in self.buckets {
            b.add(x);
        }
        b
    }

    pub fn merge(&mut self, other: &EvalCounts) {
        for (a, b) in self.buckets.iter_mut().zip(other.buckets) {
            a.add(b);
        }
    }
}

/// Counts exact (type, start, end) matches. Duplicate spans on either side count once.
pub fn match_entities(gold: &[EntitySpan], pred: &[EntitySpan]) -> EvalCounts {
    let gold: HashSet<EntitySpan> = gold.iter().copied().collect();
    let pred: HashSet<EntitySpan> = pred.iter().copied().collect();
    let key = |s: &EntitySpan| (s.entity_type, s.token_start, s.token_end);
    let mut pool: HashMap<(EntityType, usize, usize), usize> = HashMap::new();
    let mut counts = EvalCounts::default();
    for g in &gold {
        *pool.entry(key(g)).or_default() += 1;
        counts.get_mut(g.entity_type).gold += 1;
    }
    for p in &pred {
        let b = counts.get_mut(p.entity_type);
        b.predicted += 1;
        if let Some(n) = pool.get_mut(&key(p)).filter(|n| **n > 0) {
            *n -= 1;
            b.correct += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub counts: Bucket,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ReportRow {
    fn new(label: &str, counts: Bucket) -> Self {
        let pct = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        let precision = pct(counts.correct, counts.predicted);
        let recall = pct(counts.correct, counts.gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ReportRow {
            label: label.to_string(),
            counts,
            precision,
            recall,
            f1,
        }
    }
}

/// One row per entity type plus an `All` row. Scores are percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn overall(&self) -> &ReportRow {
        self.rows.last().expect("report always has an All row")
    }

    /// Fixed-width table followed by a `[scores]` key=value block.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<6}{:>8}{:>8}{:>9}{:>11}{:>9}{:>9}",
            "type", "gold", "pred", "correct", "precision", "recall", "f1"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<6}{:>8}{:>8}{:>9}{:>11.2}{:>9.2}{:>9.2}",
                r.label,
                r.counts.gold,
                r.counts.predicted,
                r.counts.correct,
                r.precision,
                r.recall,
                r.f1
            )?;
        }
        writeln!(f, "[scores]")?;
        for r in &self.rows {
            writeln!(f, "{}.gold={}", r.label, r.counts.gold)?;
            writeln!(f, "{}.predicted={}", r.label, r.counts.predicted)?;
            writeln!(f, "{}.correct={}", r.label, r.counts.correct)?;
            writeln!(f, "{}.precision={:.2}", r.label, r.precision)?;
            writeln!(f, "{}.recall={:.2}", r.label, r.recall)?;
            writeln!(f, "{}.f1={:.2}", r.label, r.f1)?;
        }
        Ok(())
    }
}

pub fn prf(counts: &EvalCounts) -> EvalReport {
    let mut rows: Vec<ReportRow> = EntityType::ALL
        .iter()
        .map(|&t| ReportRow::new(t.as_str(), counts.get(t)))
        .collect();
    rows.push(ReportRow::new("All", counts.total()));
    EvalReport { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Level1,
    Level2,
    AllLevels,
}

impl Mode {
    pub fn levels(self) -> &'static [u8] {
        match self {
            Mode::Level1 => &[1],
            Mode::Level2 => &[2],
            Mode::AllLevels => &[1, 2],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Level1 => "level1",
            Mode::Level2 => "level2",
            Mode::AllLevels => "all_levels",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level1" | "1" => Ok(Mode::Level1),
            "level2" | "2" => Ok(Mode::Level2),
            "all_levels" | "all" => Ok(Mode::AllLevels),
            _ => Err(Error::Config(format!("unknown evaluation mode `{s}`"))),
        }
    }
}

/// Spans of `sentence` at the selected levels, optionally moved to syllable indices.
fn selected_spans(
    sentence: &Sentence,
    mode: Mode,
    syllable: bool,
) -> Result<(Vec<EntitySpan>, usize)> {
    let mut spans = Vec::new();
    let mut width = sentence.tokens.len();
    for &level in mode.levels() {
        let at_level = sentence.entities_at(level);
        if syllable {
            let tags = bio_encode(&at_level, sentence.tokens.len())?;
            let (syl, syl_tags) = syllable_explode(&sentence.tokens, &tags)?;
            width = syl.len();
            spans.extend(bio_decode(&syl_tags, true, level)?);
        } else {
            spans.extend(at_level);
        }
    }
    Ok((spans, width))
}

/// Scores `pred` against `gold`, pairing documents by id and sentences by position.
pub fn evaluate_corpus(
    gold: &[Document],
    pred: &[Document],
    mode: Mode,
    syllable: bool,
) -> Result<EvalReport> {
    let by_id: HashMap<&str, &Document> = pred.iter().map(|d| (d.id.as_str(), d)).collect();
    if by_id.len() != pred.len() {
        return Err(Error::Alignment(
            "duplicate document ids in predictions".into(),
        ));
    }
    if gold.len() != pred.len() {
        return Err(Error::Alignment(format!(
            "{} gold documents vs {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let mut counts = EvalCounts::default();
    for g in gold {
        let p = by_id.get(g.id.as_str()).ok_or_else(|| {
            Error::Alignment(format!("document `{}` missing from predictions", g.id))
        })?;
        if g.sentences.len() != p.sentences.len() {
            return Err(Error::Alignment(format!(
                "document `{}`: {} gold sentences vs {} predicted",
                g.id,
                g.sentences.len(),
                p.sentences.len()
            )));
        }
        for (i, (gs, ps)) in g.sentences.iter().zip(&p.sentences).enumerate() {
            let (gspans, gw) = selected_spans(gs, mode, syllable)?;
            let (pspans, pw) = selected_spans(ps, mode, syllable)?;
            if gw != pw {
                return Err(Error::Alignment(format!(
                    "document `{}` sentence {}: {gw} vs {pw} {}",
                    g.id,
                    i + 1,
                    if syllable { "syllables" } else { "tokens" }
                )));
            }
            counts.merge(&match_entities(&gspans, &pspans));
        }
    }
    Ok(prf(&counts))
}
