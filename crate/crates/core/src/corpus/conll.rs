//! CoNLL column files: one token per line, blank lines between sentences.
//!
//! Three layouts are understood: `surface tag` (single level), `surface level1 level2`
//! (two levels) and `surface joint` where the tag column holds joint tags. A line starting
//! with `-DOCSTART-` opens a new document; the rest of that line is its id. The reader
//! accepts tabs or spaces between columns; the writer always uses tabs.

use std::io::Write;

use super::{bio_decode, decode_joint, parse_joint_tags, BioTag, Document, Sentence};
use crate::{Error, Result};

const DOCSTART: &str = "-DOCSTART-";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllRow {
    pub surface: String,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllDocument {
    pub id: String,
    pub sentences: Vec<Vec<ConllRow>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Surfaces only, e.g. prediction input.
    Surface,
    /// One BIO column, read as level 1.
    Single,
    TwoLevel,
    Joint,
}

pub fn read_conll(text: &str) -> Result<Vec<ConllDocument>> {
    let mut docs: Vec<ConllDocument> = Vec::new();
    let mut current: Vec<ConllRow> = Vec::new();
    let mut width: Option<usize> = None;

    fn flush(docs: &mut Vec<ConllDocument>, current: &mut Vec<ConllRow>) {
        if current.is_empty() {
            return;
        }
        if docs.is_empty() {
            docs.push(ConllDocument {
                id: "doc".into(),
                sentences: Vec::new(),
            });
        }
        docs.last_mut()
            .expect("document exists")
            .sentences
            .push(std::mem::take(current));
    }

    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut docs, &mut current);
            continue;
        }
        if let Some(rest) = line.strip_prefix(DOCSTART) {
            flush(&mut docs, &mut current);
            let id = rest.split_whitespace().next().map(str::to_string);
            docs.push(ConllDocument {
                id: id.unwrap_or_else(|| format!("doc{}", docs.len())),
                sentences: Vec::new(),
            });
            continue;
        }
        let cols: Vec<&str> = line.split([' ', '\t']).filter(|c| !c.is_empty()).collect();
        match width {
            None => width = Some(cols.len()),
            Some(w) if w != cols.len() => {
                return Err(Error::MalformedLine {
                    line: line_no,
                    message: format!("expected {w} columns, found {}", cols.len()),
                })
            }
            _ => {}
        }
        current.push(ConllRow {
            surface: cols[0].to_string(),
            tags: cols[1..].iter().map(|s| s.to_string()).collect(),
        });
    }
    flush(&mut docs, &mut current);
    Ok(docs)
}

/// Guesses the layout from the first row of the first sentence.
pub fn detect_layout(docs: &[ConllDocument]) -> Layout {
    let Some(row) = docs
        .iter()
        .flat_map(|d| d.sentences.iter().flatten())
        .next()
    else {
        return Layout::Surface;
    };
    match row.tags.len() {
        0 => Layout::Surface,
        1 if docs
            .iter()
            .flat_map(|d| d.sentences.iter().flatten())
            .any(|r| r.tags[0].contains('+')) =>
        {
            Layout::Joint
        }
        1 => Layout::Single,
        _ => Layout::TwoLevel,
    }
}

/// Builds annotated documents from column data, decoding tag columns into entity spans.
pub fn to_documents(docs: &[ConllDocument], layout: Layout, repair: bool) -> Result<Vec<Document>> {
    docs.iter()
        .map(|d| {
            let mut doc = Document::new(d.id.clone())?;
            for rows in &d.sentences {
                doc.sentences.push(to_sentence(rows, layout, repair)?);
            }
            Ok(doc)
        })
        .collect()
}

fn to_sentence(rows: &[ConllRow], layout: Layout, repair: bool) -> Result<Sentence> {
    let surfaces: Vec<&str> = rows.iter().map(|r| r.surface.as_str()).collect();
    let mut sentence = Sentence::from_surfaces(&surfaces);
    let column = |k: usize| -> Result<Vec<BioTag>> {
        rows.iter()
            .map(|r| {
                r.tags
                    .get(k)
                    .ok_or_else(|| Error::MalformedTag(format!("missing column {}", k + 2)))?
                    .parse()
            })
            .collect()
    };
    let (l1, l2) = match layout {
        Layout::Surface => return Ok(sentence),
        Layout::Single => (column(0)?, Vec::new()),
        Layout::TwoLevel => (column(0)?, column(1)?),
        Layout::Joint => {
            let joint: Vec<&str> = rows.iter().map(|r| r.tags[0].as_str()).collect();
            decode_joint(&parse_joint_tags(&joint)?)
        }
    };
    sentence.entities = bio_decode(&l1, repair, 1)?;
    sentence.entities.extend(bio_decode(&l2, repair, 2)?);
    Ok(sentence)
}

/// Writes `surface<TAB>level1<TAB>level2` rows. Level-3 entities have no column and are skipped.
pub fn write_two_level<W: Write>(out: &mut W, docs: &[Document]) -> Result<()> {
    for doc in docs {
        writeln!(out, "{DOCSTART}\t{}\n", doc.id)?;
        for s in &doc.sentences {
            let l1 = s.level_tags(1)?;
            let l2 = s.level_tags(2)?;
            for ((tok, a), b) in s.tokens.iter().zip(&l1).zip(&l2) {
                writeln!(out, "{}\t{a}\t{b}", tok.surface)?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes `surface<TAB>joint` rows.
pub fn write_joint<W: Write>(out: &mut W, docs: &[Document]) -> Result<()> {
    for doc in docs {
        writeln!(out, "{DOCSTART}\t{}\n", doc.id)?;
        for s in &doc.sentences {
            for (tok, tag) in s.tokens.iter().zip(s.joint_tags()?) {
                writeln!(out, "{}\t{tag}", tok.surface)?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes `surface<TAB>tag` rows for one level.
pub fn write_single<W: Write>(out: &mut W, docs: &[Document], level: u8) -> Result<()> {
    for doc in docs {
        writeln!(out, "{DOCSTART}\t{}\n", doc.id)?;
        for s in &doc.sentences {
            for (tok, tag) in s.tokens.iter().zip(s.level_tags(level)?) {
                writeln!(out, "{}\t{tag}", tok.surface)?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
