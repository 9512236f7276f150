//! Inline `<ENAMEX TYPE="X">…</ENAMEX>` markup.

use std::collections::HashMap;

use super::{CharEntity, CharSpan, Document, EntitySpan, EntityType, Token, MAX_LEVEL};
use crate::{Error, Result};

const OPEN: &str = "<ENAMEX";
const CLOSE: &str = "</ENAMEX";

/// Strips ENAMEX markup, returning the plain text and every entity at every depth.
///
/// Entities come out in document order of their opening tags, so an outer entity precedes
/// the entities nested in it. Offsets count characters of the returned plain text.
pub fn parse_enamex(raw: &str) -> Result<(String, Vec<CharSpan>)> {
    let mut plain = String::with_capacity(raw.len());
    let mut n_chars = 0;
    let mut spans: Vec<CharSpan> = Vec::new();
    // (index into spans, byte offset of the opening tag)
    let mut stack: Vec<(usize, usize)> = Vec::new();

    let mut i = 0;
    while i < raw.len() {
        let rest = &raw[i..];
        if is_tag_start(rest, OPEN) {
            let close = rest.find('>').ok_or_else(|| Error::Parse {
                offset: i,
                message: "unterminated ENAMEX tag".into(),
            })?;
            let attrs = &rest[OPEN.len()..close];
            let ty = type_attribute(attrs).ok_or_else(|| Error::Parse {
                offset: i,
                message: "ENAMEX tag without TYPE attribute".into(),
            })?;
            let entity_type: EntityType = ty.parse()?;
            stack.push((spans.len(), i));
            spans.push(CharSpan::new(entity_type, n_chars, n_chars));
            i += close + 1;
        } else if is_tag_start(rest, CLOSE) {
            let close = rest.find('>').ok_or_else(|| Error::Parse {
                offset: i,
                message: "unterminated closing tag".into(),
            })?;
            if !rest[CLOSE.len()..close].trim().is_empty() {
                return Err(Error::Parse {
                    offset: i,
                    message: "unexpected content in closing tag".into(),
                });
            }
            let (idx, open_at) = stack.pop().ok_or(Error::UnbalancedTag { offset: i })?;
            if spans[idx].start == n_chars {
                return Err(Error::Parse {
                    offset: open_at,
                    message: "empty entity".into(),
                });
            }
            spans[idx].end = n_chars;
            i += close + 1;
        } else {
            let ch = rest.chars().next().expect("non-empty rest");
            plain.push(ch);
            n_chars += 1;
            i += ch.len_utf8();
        }
    }
    if let Some(&(_, open_at)) = stack.last() {
        return Err(Error::UnbalancedTag { offset: open_at });
    }
    Ok((plain, spans))
}

fn is_tag_start(rest: &str, name: &str) -> bool {
    rest.starts_with(name)
        && rest[name.len()..]
            .chars()
            .next()
            .is_some_and(|c| c == '>' || c.is_whitespace())
}

/// Extracts the TYPE value; accepts `"X"`, `'X'`, the LaTeX-style ``` ``X'' ``` and bare values.
fn type_attribute(attrs: &str) -> Option<&str> {
    let mut rest = attrs;
    loop {
        let pos = rest.find("TYPE")?;
        let preceded_ok = rest[..pos].chars().last().is_none_or(char::is_whitespace);
        let after = rest[pos + 4..].trim_start();
        if preceded_ok {
            if let Some(value) = after.strip_prefix('=') {
                return quoted_value(value.trim_start());
            }
        }
        rest = &rest[pos + 4..];
    }
}

fn quoted_value(v: &str) -> Option<&str> {
    if let Some(inner) = v.strip_prefix("``") {
        return inner.find("''").map(|e| &inner[..e]);
    }
    for q in ['"', '\''] {
        if let Some(inner) = v.strip_prefix(q) {
            return inner.find(q).map(|e| &inner[..e]);
        }
    }
    let end = v.find(|c: char| c.is_whitespace()).unwrap_or(v.len());
    (end > 0).then(|| &v[..end])
}

/// Writes `plain` back out with ENAMEX markup for `spans`, using double-quoted TYPE values.
///
/// Spans must be properly nested. Among spans with identical ranges, earlier ones are outer.
pub fn render_enamex(plain: &str, spans: &[CharSpan]) -> Result<String> {
    check_nesting(spans.iter().map(|s| (s.start, s.end)))?;
    let n_chars = plain.chars().count();
    for s in spans {
        if s.start >= s.end || s.end > n_chars {
            return Err(Error::SpanOutOfRange {
                span: (s.start, s.end),
                len: n_chars,
            });
        }
    }
    let mut order: Vec<&CharSpan> = spans.iter().collect();
    order.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));

    let mut out = String::with_capacity(plain.len() + spans.len() * 32);
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 0;
    for (pos, ch) in plain.chars().chain(std::iter::once('\0')).enumerate() {
        while stack.last() == Some(&pos) {
            stack.pop();
            out.push_str("</ENAMEX>");
        }
        while next < order.len() && order[next].start == pos {
            let s = order[next];
            out.push_str(&format!("<ENAMEX TYPE=\"{}\">", s.entity_type));
            stack.push(s.end);
            next += 1;
        }
        if pos < n_chars {
            out.push(ch);
        }
    }
    Ok(out)
}

fn check_nesting(ranges: impl Iterator<Item = (usize, usize)>) -> Result<()> {
    let ranges: Vec<_> = ranges.collect();
    for (i, &a) in ranges.iter().enumerate() {
        for &b in &ranges[i + 1..] {
            let crosses =
                (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1);
            if crosses {
                return Err(Error::CrossingSpans { a, b });
            }
        }
    }
    Ok(())
}

/// Assigns nesting levels: one more than the deepest entity strictly inside, capped at 3.
///
/// Spans with identical ranges do not contain each other and therefore share a level.
pub fn assign_entity_levels(spans: &[CharSpan]) -> Result<Vec<CharEntity>> {
    check_nesting(spans.iter().map(|s| (s.start, s.end)))?;
    let mut by_len: Vec<usize> = (0..spans.len()).collect();
    by_len.sort_by_key(|&i| spans[i].end - spans[i].start);

    let mut levels = vec![0u8; spans.len()];
    for &i in &by_len {
        let outer = &spans[i];
        let deepest = spans
            .iter()
            .zip(&levels)
            .filter(|(inner, _)| {
                outer.start <= inner.start
                    && inner.end <= outer.end
                    && (inner.start, inner.end) != (outer.start, outer.end)
            })
            .map(|(_, &lvl)| lvl)
            .max()
            .unwrap_or(0);
        levels[i] = (deepest + 1).min(MAX_LEVEL);
    }
    Ok(spans
        .iter()
        .zip(levels)
        .map(|(s, level)| CharEntity {
            entity_type: s.entity_type,
            char_start: s.start,
            char_end: s.end,
            level,
        })
        .collect())
}

/// Maps character entities onto token indices.
///
/// An entity survives only when both of its boundaries coincide with token boundaries;
/// the rest come back in the second list and leave their tokens untagged.
pub fn project_entities_to_tokens(
    tokens: &[Token],
    entities: &[CharEntity],
) -> (Vec<EntitySpan>, Vec<CharEntity>) {
    let starts: HashMap<usize, usize> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.char_start, i))
        .collect();
    let ends: HashMap<usize, usize> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.char_end, i))
        .collect();

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for e in entities {
        match (starts.get(&e.char_start), ends.get(&e.char_end)) {
            (Some(&s), Some(&t)) if s <= t => {
                kept.push(EntitySpan::new(e.entity_type, s, t + 1, e.level))
            }
            _ => dropped.push(*e),
        }
    }
    (kept, dropped)
}

/// One document of an ENAMEX file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    /// From `<doc id="...">`, absent when the file has no wrapper.
    pub id: Option<String>,
    pub body: String,
    /// Byte offset of `body` within the file.
    pub offset: usize,
}

/// Splits a file into its `<doc id="...">…</doc>` parts, or returns it whole.
pub fn split_doc_wrappers(text: &str) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    let mut i = 0;
    while let Some(found) = text[i..].find("<doc") {
        let open = i + found;
        let rest = &text[open..];
        if !is_tag_start(rest, "<doc") {
            i = open + 4;
            continue;
        }
        let gt = rest.find('>').ok_or_else(|| Error::Parse {
            offset: open,
            message: "unterminated <doc> tag".into(),
        })?;
        let id = attribute(&rest[4..gt], "id").map(str::to_string);
        let body_start = open + gt + 1;
        let body_len = text[body_start..].find("</doc>").ok_or(Error::Parse {
            offset: open,
            message: "missing </doc>".into(),
        })?;
        docs.push(RawDocument {
            id,
            body: text[body_start..body_start + body_len].to_string(),
            offset: body_start,
        });
        i = body_start + body_len + "</doc>".len();
    }
    if docs.is_empty() {
        docs.push(RawDocument {
            id: None,
            body: text.to_string(),
            offset: 0,
        });
    }
    Ok(docs)
}

/// Renders documents as `<doc id="...">` blocks of ENAMEX markup, one sentence per line when
/// `line_per_sentence`, otherwise one paragraph per document.
pub fn documents_to_enamex(docs: &[Document], line_per_sentence: bool) -> Result<String> {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&format!("<doc id=\"{}\">\n", doc.id));
        let mut body = String::new();
        let mut spans = Vec::new();
        let mut pos = 0;
        for (k, s) in doc.sentences.iter().enumerate() {
            if k > 0 {
                body.push(if line_per_sentence { '\n' } else { ' ' });
                pos += 1;
            }
            for e in &s.entities {
                spans.push(CharSpan::new(
                    e.entity_type,
                    pos + s.tokens[e.token_start].char_start,
                    pos + s.tokens[e.token_end - 1].char_end,
                ));
            }
            body.push_str(&s.raw_text);
            pos += s.raw_text.chars().count();
        }
        out.push_str(&render_enamex(&body, &spans)?);
        out.push_str("\n</doc>\n");
    }
    Ok(out)
}

fn attribute<'a>(attrs: &'a str, name: &str) -> Option<&'a str> {
    attrs.split_whitespace().find_map(|kv| {
        let (k, v) = kv.split_once('=')?;
        (k == name).then(|| v.trim_matches(|c| c == '"' || c == '\''))
    })
}
