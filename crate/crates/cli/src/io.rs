//! Reading corpora from ENAMEX or CoNLL files, and the conversion sidecar report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use nestner::corpus::conll::{detect_layout, read_conll, to_documents};
use nestner::corpus::{level_statistics, split_doc_wrappers, Document};
use nestner::preprocess::{build_document, segmenter_by_name, DropReason, DroppedEntity};

use crate::config::{OnOff, DEFAULT_SEGMENTER};

const CONLL_EXTENSIONS: [&str; 5] = ["conll", "tsv", "iob", "bio", "col"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// CoNLL for .conll/.tsv/.iob/.bio/.col files or `-DOCSTART-` content, ENAMEX otherwise.
    Auto,
    Conll,
    /// ENAMEX markup or plain text.
    Enamex,
}

/// How ENAMEX and plain text are cut into sentences and words.
#[derive(Debug, Clone, Default, Args)]
pub struct TextOptions {
    /// Split paragraphs into sentences [default: on]
    #[arg(long, value_enum)]
    pub sent_seg: Option<OnOff>,
    /// Word segmenter: presegmented (syllables joined by `_`) or whitespace [default: presegmented]
    #[arg(long)]
    pub segmenter: Option<String>,
}

impl TextOptions {
    fn sentence_split(&self) -> bool {
        self.sent_seg != Some(OnOff::Off)
    }

    fn segmenter(&self) -> &str {
        self.segmenter.as_deref().unwrap_or(DEFAULT_SEGMENTER)
    }
}

#[derive(Debug, Default)]
pub struct Corpus {
    pub docs: Vec<Document>,
    pub dropped: Vec<DroppedEntity>,
}

fn resolve_format(path: &Path, text: &str, format: InputFormat) -> InputFormat {
    if format != InputFormat::Auto {
        return format;
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if CONLL_EXTENSIONS.contains(&ext.as_str()) || first.starts_with("-DOCSTART-") {
        InputFormat::Conll
    } else {
        InputFormat::Enamex
    }
}

/// `line:column` (both 1-based) of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut offset = offset.min(text.len());
    while !text.is_char_boundary(offset) {
        offset -= 1;
    }
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
    (line, col)
}

fn locate(path: &Path, text: &str, base: usize, err: nestner::Error) -> anyhow::Error {
    use nestner::Error::*;
    let where_ = match &err {
        Parse { offset, .. } | UnbalancedTag { offset } => {
            let (line, col) = line_col(text, base + offset);
            format!("{}:{line}:{col}", path.display())
        }
        MalformedLine { line, .. } => format!("{}:{line}", path.display()),
        _ => path.display().to_string(),
    };
    anyhow::Error::new(err).context(where_)
}

pub fn load_corpus(path: &Path, format: InputFormat, options: &TextOptions) -> Result<Corpus> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match resolve_format(path, &text, format) {
        InputFormat::Conll => {
            let raw = read_conll(&text).map_err(|e| locate(path, &text, 0, e))?;
            let docs = to_documents(&raw, detect_layout(&raw), true)
                .map_err(|e| locate(path, &text, 0, e))?;
            Ok(Corpus {
                docs,
                dropped: Vec::new(),
            })
        }
        _ => load_enamex(path, &text, options),
    }
}

fn load_enamex(path: &Path, text: &str, options: &TextOptions) -> Result<Corpus> {
    let segmenter = segmenter_by_name(options.segmenter())?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("doc");
    let raw = split_doc_wrappers(text).map_err(|e| locate(path, text, 0, e))?;
    let single = raw.len() == 1;
    let mut corpus = Corpus::default();
    for (k, doc) in raw.iter().enumerate() {
        let id = match &doc.id {
            Some(id) => id.clone(),
            None if single => stem.to_string(),
            None => format!("{stem}-{}", k + 1),
        };
        let (d, dropped) =
            build_document(&id, &doc.body, options.sentence_split(), segmenter.as_ref())
                .map_err(|e| locate(path, text, doc.offset, e))?;
        corpus.docs.push(d);
        corpus.dropped.extend(dropped);
    }
    Ok(corpus)
}

/// Writes the sidecar report and returns a one-line summary.
pub fn write_conversion_report(path: &Path, input: &Path, corpus: &Corpus) -> Result<String> {
    let sentences: Vec<_> = corpus.docs.iter().flat_map(|d| &d.sentences).collect();
    let tokens: usize = sentences.iter().map(|s| s.tokens.len()).sum();
    let mut deep = Vec::new();
    for doc in &corpus.docs {
        for (i, s) in doc.sentences.iter().enumerate() {
            for e in s.entities.iter().filter(|e| e.level > 2) {
                let text = s.tokens[e.token_start..e.token_end]
                    .iter()
                    .map(|t| t.surface.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                deep.push(format!(
                    "{}\t{}\t{}\t{}\t{}\t{text}",
                    doc.id,
                    i + 1,
                    e.entity_type,
                    e.token_start,
                    e.token_end
                ));
            }
        }
    }

    let mut out = String::new();
    writeln!(out, "# conversion report for {}", input.display())?;
    writeln!(out, "documents={}", corpus.docs.len())?;
    writeln!(out, "sentences={}", sentences.len())?;
    writeln!(out, "tokens={tokens}")?;
    writeln!(out, "dropped={}", corpus.dropped.len())?;
    writeln!(out, "discarded_level3={}", deep.len())?;
    writeln!(out, "[levels]")?;
    for ((t, level), n) in level_statistics(sentences.iter().copied()) {
        writeln!(out, "{t}.{level}={n}")?;
    }
    writeln!(out, "[dropped]")?;
    writeln!(
        out,
        "# doc\treason\ttype\tlevel\tchar_start\tchar_end\ttext"
    )?;
    for d in &corpus.dropped {
        let reason = match d.reason {
            DropReason::BoundaryConflict => "boundary_conflict",
            DropReason::SentenceBoundary => "sentence_boundary",
        };
        writeln!(
            out,
            "{}\t{reason}\t{}\t{}\t{}\t{}\t{}",
            d.doc_id,
            d.entity.entity_type,
            d.entity.level,
            d.entity.char_start,
            d.entity.char_end,
            d.text
        )?;
    }
    writeln!(out, "[level3]")?;
    writeln!(out, "# doc\tsentence\ttype\ttoken_start\ttoken_end\ttext")?;
    for line in &deep {
        writeln!(out, "{line}")?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(format!(
        "converted {} documents, {} sentences, {tokens} tokens; {} entities dropped, {} level-3 entities discarded; report in {}",
        corpus.docs.len(),
        sentences.len(),
        corpus.dropped.len(),
        deep.len(),
        path.display()
    ))
}
