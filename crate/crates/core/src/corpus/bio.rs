use std::fmt;
use std::str::FromStr;

use super::{EntitySpan, EntityType, Token};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioTag {
    O,
    B(EntityType),
    I(EntityType),
}

impl BioTag {
    pub fn entity_type(self) -> Option<EntityType> {
        match self {
            BioTag::O => None,
            BioTag::B(t) | BioTag::I(t) => Some(t),
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::B(t) => write!(f, "B-{t}"),
            BioTag::I(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for BioTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(BioTag::O);
        }
        let malformed = || Error::MalformedTag(s.to_string());
        let (prefix, ty) = s.split_once('-').ok_or_else(malformed)?;
        let ty: EntityType = ty.parse().map_err(|_| malformed())?;
        match prefix {
            "B" => Ok(BioTag::B(ty)),
            "I" => Ok(BioTag::I(ty)),
            _ => Err(malformed()),
        }
    }
}

/// A level-1 tag paired with a level-2 tag, rendered as `level1+level2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JointTag {
    pub level1: BioTag,
    pub level2: BioTag,
}

impl JointTag {
    pub fn new(level1: BioTag, level2: BioTag) -> Self {
        JointTag { level1, level2 }
    }
}

impl fmt::Display for JointTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.level1, self.level2)
    }
}

impl FromStr for JointTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let malformed = || Error::MalformedJointTag(s.to_string());
        let mut parts = s.split('+');
        let (Some(l1), Some(l2), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(malformed());
        };
        Ok(JointTag {
            level1: l1.parse().map_err(|_| malformed())?,
            level2: l2.parse().map_err(|_| malformed())?,
        })
    }
}

/// Tags `n_tokens` positions from disjoint spans of one level.
pub fn bio_encode(spans: &[EntitySpan], n_tokens: usize) -> Result<Vec<BioTag>> {
    let mut tags = vec![BioTag::O; n_tokens];
    let mut owner: Vec<Option<usize>> = vec![None; n_tokens];
    for (k, span) in spans.iter().enumerate() {
        if span.token_start >= span.token_end || span.token_end > n_tokens {
            return Err(Error::SpanOutOfRange {
                span: (span.token_start, span.token_end),
                len: n_tokens,
            });
        }
        for i in span.token_start..span.token_end {
            if let Some(other) = owner[i] {
                let o = &spans[other];
                return Err(Error::OverlappingSpans {
                    a: (o.token_start, o.token_end),
                    b: (span.token_start, span.token_end),
                });
            }
            owner[i] = Some(k);
            tags[i] = if i == span.token_start {
                BioTag::B(span.entity_type)
            } else {
                BioTag::I(span.entity_type)
            };
        }
    }
    Ok(tags)
}

/// Recovers maximal spans from a BIO column, labelling them with `level`.
///
/// With `repair`, an `I-X` that does not continue an `X` span opens a new one; without it,
/// such a tag is an [`Error::InvalidSequence`].
pub fn bio_decode(tags: &[BioTag], repair: bool, level: u8) -> Result<Vec<EntitySpan>> {
    let mut spans = Vec::new();
    let mut open: Option<(EntityType, usize)> = None;
    let close = |open: &mut Option<(EntityType, usize)>, end: usize, spans: &mut Vec<_>| {
        if let Some((ty, start)) = open.take() {
            spans.push(EntitySpan::new(ty, start, end, level));
        }
    };
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            BioTag::O => close(&mut open, i, &mut spans),
            BioTag::B(ty) => {
                close(&mut open, i, &mut spans);
                open = Some((ty, i));
            }
            BioTag::I(ty) => match open {
                Some((open_ty, _)) if open_ty == ty => {}
                _ if repair => {
                    close(&mut open, i, &mut spans);
                    open = Some((ty, i));
                }
                _ => {
                    return Err(Error::InvalidSequence {
                        position: i,
                        tag: tag.to_string(),
                    })
                }
            },
        }
    }
    close(&mut open, tags.len(), &mut spans);
    Ok(spans)
}

pub fn encode_joint(level1: &[BioTag], level2: &[BioTag]) -> Result<Vec<JointTag>> {
    if level1.len() != level2.len() {
        return Err(Error::LengthMismatch {
            left: level1.len(),
            right: level2.len(),
        });
    }
    Ok(level1
        .iter()
        .zip(level2)
        .map(|(&a, &b)| JointTag::new(a, b))
        .collect())
}

pub fn decode_joint(tags: &[JointTag]) -> (Vec<BioTag>, Vec<BioTag>) {
    tags.iter().map(|t| (t.level1, t.level2)).unzip()
}

pub fn parse_joint_tags<S: AsRef<str>>(tags: &[S]) -> Result<Vec<JointTag>> {
    tags.iter().map(|t| t.as_ref().parse()).collect()
}

/// Splits a word surface into its `_`-joined syllables. Always yields at least one piece.
pub fn syllables(surface: &str) -> Vec<&str> {
    let parts: Vec<&str> = surface.split('_').filter(|p| !p.is_empty()).collect();
    if parts.is_empty() {
        vec![surface]
    } else {
        parts
    }
}

/// Re-expresses a tagged word sequence as a tagged syllable sequence.
pub fn syllable_explode(tokens: &[Token], tags: &[BioTag]) -> Result<(Vec<String>, Vec<BioTag>)> {
    if tokens.len() != tags.len() {
        return Err(Error::LengthMismatch {
            left: tokens.len(),
            right: tags.len(),
        });
    }
    let mut out_syl = Vec::with_capacity(tokens.len());
    let mut out_tags = Vec::with_capacity(tokens.len());
    for (token, &tag) in tokens.iter().zip(tags) {
        for (k, syl) in syllables(&token.surface).into_iter().enumerate() {
            out_syl.push(syl.to_string());
            out_tags.push(match tag {
                BioTag::B(ty) if k > 0 => BioTag::I(ty),
                other => other,
            });
        }
    }
    Ok((out_syl, out_tags))
}
