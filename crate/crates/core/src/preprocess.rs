//! Sentence splitting, word segmentation and conversion of marked-up text into documents.

use crate::corpus::{
    assign_entity_levels, parse_enamex, project_entities_to_tokens, CharEntity, Document, Sentence,
    Token,
};
use crate::{Error, Result};

/// Splits after each period that is followed by exactly one space and an uppercase letter.
///
/// The period stays with the left sentence and the space belongs to neither. Offsets are
/// character offsets into `text`.
pub fn split_sentences(text: &str) -> Vec<(String, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i + 2 < chars.len() {
        if chars[i] == '.' && chars[i + 1] == ' ' && chars[i + 2].is_uppercase() {
            out.push((chars[start..=i].iter().collect(), start));
            start = i + 2;
            i += 2;
        } else {
            i += 1;
        }
    }
    if start < chars.len() || out.is_empty() {
        out.push((chars[start..].iter().collect(), start));
    }
    out
}

/// Word segmentation seam. Implementations return tokens over non-whitespace characters with
/// character offsets into the sentence they were given.
pub trait Segmenter: Send + Sync {
    fn name(&self) -> &str;
    fn segment(&self, sentence: &str) -> Vec<Token>;
}

/// Every whitespace-separated syllable becomes a token.
#[derive(Debug, Default, Clone, Copy)]
pub struct WhitespaceSegmenter;

/// Input already segmented by an external tool: words are whitespace-separated and their
/// syllables joined with `_`. Offsets are valid for the spaced form too, since `_` and the
/// space it replaces are both one character.
#[derive(Debug, Default, Clone, Copy)]
pub struct PresegmentedSegmenter;

fn split_on_whitespace(sentence: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let mut n = 0;
    for (pos, ch) in sentence.chars().enumerate() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(Token::new(std::mem::take(&mut current), start, pos));
            }
        } else {
            if current.is_empty() {
                start = pos;
            }
            current.push(ch);
        }
        n = pos + 1;
    }
    if !current.is_empty() {
        tokens.push(Token::new(current, start, n));
    }
    tokens
}

impl Segmenter for WhitespaceSegmenter {
    fn name(&self) -> &str {
        "whitespace"
    }

    fn segment(&self, sentence: &str) -> Vec<Token> {
        split_on_whitespace(sentence)
    }
}

impl Segmenter for PresegmentedSegmenter {
    fn name(&self) -> &str {
        "presegmented"
    }

    fn segment(&self, sentence: &str) -> Vec<Token> {
        split_on_whitespace(sentence)
    }
}

pub const SEGMENTERS: [&str; 2] = ["whitespace", "presegmented"];

pub fn segmenter_by_name(name: &str) -> Result<Box<dyn Segmenter>> {
    match name {
        "whitespace" => Ok(Box::new(WhitespaceSegmenter)),
        "presegmented" => Ok(Box::new(PresegmentedSegmenter)),
        _ => Err(Error::UnknownSegmenter(name.to_string())),
    }
}

pub fn segment_words(sentence: &str, segmenter: &dyn Segmenter) -> Vec<Token> {
    segmenter.segment(sentence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// An entity boundary falls inside a word.
    BoundaryConflict,
    /// The entity spans a sentence split.
    SentenceBoundary,
}

/// An annotated entity that could not be represented on the token level.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedEntity {
    pub doc_id: String,
    pub entity: CharEntity,
    pub text: String,
    pub reason: DropReason,
}

/// Turns the body of one ENAMEX document into segmented, annotated sentences.
///
/// Markup is stripped first. Each non-blank line is a paragraph; with `sentence_split` it is
/// further cut by [`split_sentences`]. Entities that do not align with the resulting sentences
/// or words are returned separately and leave their tokens untagged.
pub fn build_document(
    id: &str,
    body: &str,
    sentence_split: bool,
    segmenter: &dyn Segmenter,
) -> Result<(Document, Vec<DroppedEntity>)> {
    let (plain, spans) = parse_enamex(body)?;
    let entities = assign_entity_levels(&spans)?;
    let plain_chars: Vec<char> = plain.chars().collect();

    // (absolute char offset, text)
    let mut pieces: Vec<(usize, String)> = Vec::new();
    let mut line_start = 0;
    for line in plain.split('\n') {
        let line_len = line.chars().count();
        if !line.trim().is_empty() {
            if sentence_split {
                for (text, off) in split_sentences(line) {
                    if !text.trim().is_empty() {
                        pieces.push((line_start + off, text));
                    }
                }
            } else {
                pieces.push((line_start, line.to_string()));
            }
        }
        line_start += line_len + 1;
    }

    let mut doc = Document::new(id)?;
    let mut per_sentence: Vec<Vec<CharEntity>> = vec![Vec::new(); pieces.len()];
    let mut dropped = Vec::new();
    let span_text =
        |e: &CharEntity| -> String { plain_chars[e.char_start..e.char_end].iter().collect() };
    for e in &entities {
        // last piece starting at or before the entity
        let k = pieces.partition_point(|(off, _)| *off <= e.char_start);
        let home = k.checked_sub(1).filter(|&k| {
            let (off, text) = &pieces[k];
            e.char_end <= off + text.chars().count()
        });
        match home {
            Some(k) => {
                let off = pieces[k].0;
                per_sentence[k].push(CharEntity {
                    char_start: e.char_start - off,
                    char_end: e.char_end - off,
                    ..*e
                });
            }
            None => dropped.push(DroppedEntity {
                doc_id: id.to_string(),
                entity: *e,
                text: span_text(e),
                reason: DropReason::SentenceBoundary,
            }),
        }
    }

    for ((off, text), local) in pieces.into_iter().zip(per_sentence) {
        let tokens = segment_words(&text, segmenter);
        let (kept, lost) = project_entities_to_tokens(&tokens, &local);
        for e in lost {
            let abs = CharEntity {
                char_start: e.char_start + off,
                char_end: e.char_end + off,
                ..e
            };
            dropped.push(DroppedEntity {
                doc_id: id.to_string(),
                entity: abs,
                text: span_text(&abs),
                reason: DropReason::BoundaryConflict,
            });
        }
        if tokens.is_empty() {
            continue;
        }
        doc.sentences.push(Sentence {
            raw_text: text,
            tokens,
            entities: kept,
        });
    }
    Ok((doc, dropped))
}
