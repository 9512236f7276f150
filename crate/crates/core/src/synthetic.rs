//! Seeded generator of small Vietnamese-like corpora with two-level nested entities.
//!
//! Sentences are drawn from a handful of frames: people introduced by a title ("ông", "bà"),
//! city committees wrapping a location ("UBND TP Hà Nội"), departments of a province, and
//! entity-free filler. With `context_dependent`, streets named after people or places are
//! added: "đường <PER>" is a level-2 LOC while "đường <LOC>" is not an entity at level 2, so
//! the outer entity depends only on the type of the inner one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, EntitySpan, EntityType, Sentence};

const FAMILY: &[&str] = &[
    "Nguyễn", "Trần", "Lê", "Phạm", "Hoàng", "Vũ", "Đặng", "Bùi", "Đỗ", "Hồ",
];
const MIDDLE: &[&str] = &["Văn", "Thị", "Minh", "Đức", "Thanh", "Ngọc", "Quang", "Hữu"];
const GIVEN: &[&str] = &[
    "An", "Bình", "Cường", "Dũng", "Giang", "Hải", "Hùng", "Lan", "Linh", "Mai", "Nam", "Phong",
    "Quân", "Sơn", "Tâm", "Thảo", "Trung", "Tuấn", "Vinh", "Yến",
];
const PLACES: &[&[&str]] = &[
    &["Hà", "Nội"],
    &["Đà", "Nẵng"],
    &["Hải", "Phòng"],
    &["Cần", "Thơ"],
    &["Huế"],
    &["Vinh"],
    &["Nha", "Trang"],
    &["Hạ", "Long"],
    &["Biên", "Hòa"],
    &["Thái", "Nguyên"],
    &["Nam", "Định"],
    &["Quy", "Nhơn"],
    &["Đà", "Lạt"],
    &["Buôn", "Ma", "Thuột"],
    &["Vũng", "Tàu"],
    &["Hồ", "Chí", "Minh"],
];
const DEPARTMENTS: &[&[&str]] = &[
    &["Sở", "Y", "tế"],
    &["Sở", "Giáo", "dục"],
    &["Sở", "Tài", "chính"],
    &["Công", "an"],
];
const VERBS: &[&[&str]] = &[
    &["làm", "việc", "tại"],
    &["đến", "thăm"],
    &["phát", "biểu", "tại"],
    &["gặp", "gỡ", "lãnh", "đạo"],
    &["gửi", "công", "văn", "cho"],
];
const FILLER: &[&[&str]] = &[
    &["hôm", "nay", "trời", "mưa", "to"],
    &["giá", "xăng", "tăng", "nhẹ", "trong", "tuần"],
    &["nhiều", "người", "dân", "đã", "tham", "gia"],
    &["cuộc", "họp", "kéo", "dài", "đến", "chiều"],
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub sentences: usize,
    pub seed: u64,
    pub context_dependent: bool,
    pub sentences_per_document: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            sentences: 500,
            seed: 2018,
            context_dependent: false,
            sentences_per_document: 5,
        }
    }
}

struct Builder {
    words: Vec<String>,
    entities: Vec<EntitySpan>,
}

impl Builder {
    fn push(&mut self, words: &[&str]) -> (usize, usize) {
        let start = self.words.len();
        self.words.extend(words.iter().map(|w| w.to_string()));
        (start, self.words.len())
    }

    fn entity(&mut self, t: EntityType, (start, end): (usize, usize), level: u8) {
        self.entities.push(EntitySpan::new(t, start, end, level));
    }
}

fn pick<'a, T: ?Sized>(rng: &mut ChaCha8Rng, items: &'a [&'a T]) -> &'a T {
    items[rng.random_range(0..items.len())]
}

fn person(rng: &mut ChaCha8Rng) -> Vec<&'static str> {
    let mut name = vec![FAMILY[rng.random_range(0..FAMILY.len())]];
    if rng.random_bool(0.7) {
        name.push(MIDDLE[rng.random_range(0..MIDDLE.len())]);
    }
    name.push(GIVEN[rng.random_range(0..GIVEN.len())]);
    name
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn sentence(rng: &mut ChaCha8Rng, context_dependent: bool) -> Sentence {
    use EntityType::*;
    let mut b = Builder {
        words: Vec::new(),
        entities: Vec::new(),
    };
    let frames = if context_dependent { 6 } else { 5 };
    match rng.random_range(0..frames) {
        0 => {
            // ông <PER> <verb> UBND TP <LOC>
            b.push(&[if rng.random_bool(0.5) { "ông" } else { "bà" }]);
            let p = b.push(&person(rng));
            b.entity(Per, p, 1);
            b.push(pick(rng, VERBS));
            let org_start = b.push(&["UBND", "TP"]).0;
            let l = b.push(pick(rng, PLACES));
            b.entity(Loc, l, 1);
            b.entity(Org, (org_start, l.1), 2);
        }
        1 => {
            // chủ tịch UBND TP <LOC> là ông <PER>
            b.push(&["chủ", "tịch"]);
            let org_start = b.push(&["UBND", "TP"]).0;
            let l = b.push(pick(rng, PLACES));
            b.entity(Loc, l, 1);
            b.entity(Org, (org_start, l.1), 2);
            b.push(&["là", "ông"]);
            let p = b.push(&person(rng));
            b.entity(Per, p, 1);
        }
        2 => {
            // <dept> <LOC> <verb> ...
            let org_start = b.push(pick(rng, DEPARTMENTS)).0;
            let l = b.push(pick(rng, PLACES));
            b.entity(Loc, l, 1);
            b.entity(Org, (org_start, l.1), 2);
            b.push(&["cho", "biết", "sẽ", "kiểm", "tra"]);
        }
        3 => {
            b.push(&["bà"]);
            let p = b.push(&person(rng));
            b.entity(Per, p, 1);
            b.push(&["về", "thăm", "quê", "ở"]);
            let l = b.push(pick(rng, PLACES));
            b.entity(Loc, l, 1);
        }
        4 => {
            b.push(pick(rng, FILLER));
        }
        _ => {
            // đường <PER> is a street (level-2 LOC), đường <LOC> only a place
            b.push(&["cửa", "hàng", "nằm", "trên"]);
            let street = b.push(&["đường"]).0;
            if rng.random_bool(0.5) {
                let p = b.push(&person(rng));
                b.entity(Per, p, 1);
                b.entity(Loc, (street, p.1), 2);
            } else {
                let l = b.push(pick(rng, PLACES));
                b.entity(Loc, l, 1);
            }
        }
    }
    b.push(&["."]);
    b.words[0] = capitalize(&b.words[0]);
    let mut s = Sentence::from_surfaces(&b.words);
    b.entities.sort();
    s.entities = b.entities;
    s
}

pub fn generate_sentences(config: &SyntheticConfig) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.sentences)
        .map(|_| sentence(&mut rng, config.context_dependent))
        .collect()
}

/// Groups generated sentences into documents with ids `synth-1`, `synth-2`, ...
pub fn generate_documents(config: &SyntheticConfig) -> Vec<Document> {
    let per_doc = config.sentences_per_document.max(1);
    generate_sentences(config)
        .chunks(per_doc)
        .enumerate()
        .map(|(i, chunk)| Document {
            id: format!("synth-{}", i + 1),
            sentences: chunk.to_vec(),
        })
        .collect()
}

/// First `ratio` of the items for training, the rest held out.
pub fn split<T: Clone>(items: &[T], ratio: f64) -> (Vec<T>, Vec<T>) {
    let cut = ((items.len() as f64) * ratio).round() as usize;
    let cut = cut.min(items.len());
    (items[..cut].to_vec(), items[cut..].to_vec())
}
