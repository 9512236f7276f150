//! Documents, sentences, tokens and entity spans, plus the codecs between span annotations,
//! per-level BIO tags and joint tags.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

mod bio;
pub mod conll;
mod enamex;

pub use bio::{
    bio_decode, bio_encode, decode_joint, encode_joint, parse_joint_tags, syllable_explode,
    syllables, BioTag, JointTag,
};
pub use enamex::{
    assign_entity_levels, documents_to_enamex, parse_enamex, project_entities_to_tokens,
    render_enamex, split_doc_wrappers, RawDocument,
};

/// Highest nesting level kept in the data model. Deeper entities are clamped to it.
pub const MAX_LEVEL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityType {
    Per,
    Loc,
    Org,
    Misc,
}

impl EntityType {
    /// Report order: PER, LOC, ORG, MISC.
    pub const ALL: [EntityType; 4] = [
        EntityType::Per,
        EntityType::Loc,
        EntityType::Org,
        EntityType::Misc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Per => "PER",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
            EntityType::Misc => "MISC",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PER" => Ok(EntityType::Per),
            "LOC" => Ok(EntityType::Loc),
            "ORG" => Ok(EntityType::Org),
            "MISC" => Ok(EntityType::Misc),
            _ => Err(Error::UnknownEntityType(s.to_string())),
        }
    }
}

/// A word produced by segmentation. Offsets count Unicode scalar values in the sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    /// Word form; multi-syllable words join their syllables with `_`.
    pub surface: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, char_start: usize, char_end: usize) -> Self {
        Token {
            surface: surface.into(),
            char_start,
            char_end,
        }
    }
}

/// An entity as found in marked-up text, in character offsets of the plain text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CharSpan {
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(entity_type: EntityType, start: usize, end: usize) -> Self {
        CharSpan {
            entity_type,
            start,
            end,
        }
    }
}

/// A character-offset entity with its nesting level assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CharEntity {
    pub entity_type: EntityType,
    pub char_start: usize,
    pub char_end: usize,
    pub level: u8,
}

/// A typed entity over the token range `token_start..token_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub entity_type: EntityType,
    pub token_start: usize,
    pub token_end: usize,
    pub level: u8,
}

impl EntitySpan {
    pub fn new(entity_type: EntityType, token_start: usize, token_end: usize, level: u8) -> Self {
        EntitySpan {
            entity_type,
            token_start,
            token_end,
            level,
        }
    }

    /// True when `self`'s token range lies within `other`'s (equal ranges included).
    pub fn is_within(&self, other: &EntitySpan) -> bool {
        other.token_start <= self.token_start && self.token_end <= other.token_end
    }

    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end <= self.token_start
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sentence {
    pub raw_text: String,
    pub tokens: Vec<Token>,
    pub entities: Vec<EntitySpan>,
}

impl Sentence {
    /// Builds a sentence whose raw text is the surfaces joined by single spaces.
    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S]) -> Self {
        let mut raw_text = String::new();
        let mut tokens = Vec::with_capacity(surfaces.len());
        let mut pos = 0;
        for (i, s) in surfaces.iter().enumerate() {
            let s = s.as_ref();
            if i > 0 {
                raw_text.push(' ');
                pos += 1;
            }
            let len = s.chars().count();
            tokens.push(Token::new(s, pos, pos + len));
            raw_text.push_str(s);
            pos += len;
        }
        Sentence {
            raw_text,
            tokens,
            entities: Vec::new(),
        }
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Entities at `level`, sorted by position.
    pub fn entities_at(&self, level: u8) -> Vec<EntitySpan> {
        let mut spans: Vec<_> = self
            .entities
            .iter()
            .copied()
            .filter(|e| e.level == level)
            .collect();
        spans.sort();
        spans
    }

    /// BIO column for one nesting level.
    pub fn level_tags(&self, level: u8) -> Result<Vec<BioTag>> {
        bio_encode(&self.entities_at(level), self.tokens.len())
    }

    /// Joint level-1/level-2 tags for training a single model on both levels.
    pub fn joint_tags(&self) -> Result<Vec<JointTag>> {
        encode_joint(&self.level_tags(1)?, &self.level_tags(2)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Config("document id must be non-empty".into()));
        }
        Ok(Document {
            id,
            sentences: Vec::new(),
        })
    }
}

/// Counts entities per (type, level) over a corpus.
pub fn level_statistics<'a, I>(sentences: I) -> std::collections::BTreeMap<(EntityType, u8), usize>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut stats = std::collections::BTreeMap::new();
    for s in sentences {
        for e in &s.entities {
            *stats.entry((e.entity_type, e.level)).or_insert(0) += 1;
        }
    }
    stats
}
