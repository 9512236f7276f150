//! Plain-text model files.
//!
//! ```text
//! [meta]
//! format=nestner-crf 1
//! template=<fingerprint>
//! label=<label>            (one line per label, in index order)
//! <key>=<value>            (training metadata)
//! [weights]
//! <feature><TAB><label><TAB><weight>
//! TRANS<TAB><prev><TAB><cur><TAB><weight>
//! ```
//!
//! Only nonzero weights are written, so features whose weights are all zero do not survive a
//! round trip; predictions do. Floats use the shortest representation that parses back to the
//! same value.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{CrfModel, FeatureAlphabet, LabelAlphabet};
use crate::{Error, Result};

const FORMAT: &str = "nestner-crf 1";
const RESERVED: [&str; 3] = ["format", "template", "label"];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

impl CrfModel {
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "[meta]")?;
        writeln!(out, "format={FORMAT}")?;
        writeln!(out, "template={}", escape(&self.template_fingerprint))?;
        for l in self.labels.labels() {
            writeln!(out, "label={}", escape(l))?;
        }
        for (k, v) in &self.metadata {
            if RESERVED.contains(&k.as_str()) {
                return Err(Error::Model(format!("metadata key `{k}` is reserved")));
            }
            writeln!(out, "{}={}", escape(k), escape(v))?;
        }
        writeln!(out, "[weights]")?;
        let l = self.labels.len();
        for f in 0..self.features.len() {
            let name = escape(self.features.name(f));
            for y in 0..l {
                let w = self.weights[self.emission_index(f, y)];
                if w != 0.0 {
                    writeln!(out, "{name}\t{}\t{w:?}", escape(self.labels.name(y)))?;
                }
            }
        }
        for p in 0..l {
            for y in 0..l {
                let w = self.weights[self.transition_index(p, y)];
                if w != 0.0 {
                    writeln!(
                        out,
                        "TRANS\t{}\t{}\t{w:?}",
                        escape(self.labels.name(p)),
                        escape(self.labels.name(y))
                    )?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let bad = |line: usize, message: &str| Error::MalformedLine {
            line,
            message: message.to_string(),
        };
        let mut in_weights = None;
        let mut format = None;
        let mut template = None;
        let mut metadata = BTreeMap::new();
        let mut labels = LabelAlphabet::new();
        let mut features = FeatureAlphabet::new();
        let mut emissions: Vec<(usize, String, f64, usize)> = Vec::new();
        let mut transitions: Vec<(String, String, f64, usize)> = Vec::new();

        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = n + 1;
            let line = line.trim_end_matches('\r');
            match line {
                "[meta]" => {
                    in_weights = Some(false);
                    continue;
                }
                "[weights]" => {
                    in_weights = Some(true);
                    continue;
                }
                "" => continue,
                _ => {}
            }
            match in_weights {
                None => return Err(bad(line_no, "content before the first section")),
                Some(false) => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| bad(line_no, "expected key=value"))?;
                    let v = unescape(v);
                    match k {
                        "format" => format = Some(v),
                        "template" => template = Some(v),
                        "label" => {
                            let before = labels.len();
                            if labels.intern(&v) != before {
                                return Err(bad(line_no, "duplicate label"));
                            }
                        }
                        _ => {
                            metadata.insert(unescape(k), v);
                        }
                    }
                }
                Some(true) => {
                    let fields: Vec<&str> = line.split('\t').collect();
                    let weight = |s: &str| {
                        s.parse::<f64>()
                            .ok()
                            .filter(|w| w.is_finite())
                            .ok_or_else(|| bad(line_no, "bad weight"))
                    };
                    match fields.as_slice() {
                        ["TRANS", prev, cur, w] => {
                            transitions.push((unescape(prev), unescape(cur), weight(w)?, line_no));
                        }
                        [feat, label, w] => {
                            let f = features.intern(&unescape(feat));
                            emissions.push((f, unescape(label), weight(w)?, line_no));
                        }
                        _ => return Err(bad(line_no, "expected feature<TAB>label<TAB>weight")),
                    }
                }
            }
        }

        match format.as_deref() {
            Some(FORMAT) => {}
            Some(other) => return Err(Error::Model(format!("unsupported model format `{other}`"))),
            None => return Err(Error::Model("not a model file (no format line)".into())),
        }
        let template = template
            .ok_or_else(|| Error::Model("model file has no template fingerprint".into()))?;
        if labels.is_empty() {
            return Err(Error::Model("model file has no labels".into()));
        }
        let mut model = CrfModel::zeros(labels, features, &template);
        model.metadata = metadata;
        let label = |model: &CrfModel, name: &str, line_no: usize| {
            model
                .labels
                .get(name)
                .ok_or_else(|| bad(line_no, &format!("unknown label `{name}`")))
        };
        for (f, y, w, line_no) in emissions {
            let y = label(&model, &y, line_no)?;
            let i = model.emission_index(f, y);
            model.weights[i] = w;
        }
        for (p, y, w, line_no) in transitions {
            let (p, y) = (label(&model, &p, line_no)?, label(&model, &y, line_no)?);
            let i = model.transition_index(p, y);
            model.weights[i] = w;
        }
        Ok(model)
    }

    pub fn save_to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save(BufWriter::new(File::create(path)?))
    }

    pub fn load_from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::load(BufReader::new(File::open(path)?))
    }
}
