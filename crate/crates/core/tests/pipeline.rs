use nestner::corpus::conll::{
    read_conll, to_documents, write_joint, write_single, write_two_level, Layout,
};
use nestner::corpus::{documents_to_enamex, split_doc_wrappers};
use nestner::preprocess::{build_document, DropReason, PresegmentedSegmenter};
use nestner::synthetic::{generate_documents, SyntheticConfig};
use nestner::Error;

fn sorted(s: &nestner::corpus::Sentence) -> Vec<nestner::corpus::EntitySpan> {
    let mut e = s.entities.clone();
    e.sort();
    e
}

fn documents_from_enamex(text: &str, sent_seg: bool) -> Vec<nestner::corpus::Document> {
    split_doc_wrappers(text)
        .unwrap()
        .iter()
        .map(|raw| {
            build_document(
                raw.id.as_deref().unwrap_or("doc"),
                &raw.body,
                sent_seg,
                &PresegmentedSegmenter,
            )
            .unwrap()
            .0
        })
        .collect()
}

#[test]
fn enamex_to_conll_and_back() {
    let docs = generate_documents(&SyntheticConfig {
        sentences: 60,
        ..SyntheticConfig::default()
    });
    let text = documents_to_enamex(&docs, true).unwrap();
    let rebuilt = documents_from_enamex(&text, false);
    assert_eq!(rebuilt.len(), docs.len());
    for (a, b) in rebuilt.iter().zip(&docs) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.sentences.len(), b.sentences.len());
        for (x, y) in a.sentences.iter().zip(&b.sentences) {
            assert_eq!(x.surfaces(), y.surfaces());
            assert_eq!(sorted(x), sorted(y));
        }
    }

    let mut two = Vec::new();
    write_two_level(&mut two, &rebuilt).unwrap();
    let back = to_documents(
        &read_conll(&String::from_utf8(two).unwrap()).unwrap(),
        Layout::TwoLevel,
        false,
    )
    .unwrap();
    let mut joint = Vec::new();
    write_joint(&mut joint, &rebuilt).unwrap();
    let back_joint = to_documents(
        &read_conll(&String::from_utf8(joint).unwrap()).unwrap(),
        Layout::Joint,
        false,
    )
    .unwrap();
    for (x, y) in back.iter().zip(&back_joint) {
        assert_eq!(x.id, y.id);
        for (a, b) in x.sentences.iter().zip(&y.sentences) {
            assert_eq!(sorted(a), sorted(b));
        }
    }
    for (x, y) in back.iter().zip(&rebuilt) {
        for (a, b) in x.sentences.iter().zip(&y.sentences) {
            assert_eq!(sorted(a), sorted(b));
        }
    }
}

#[test]
fn sentence_splitting_on_paragraph_markup() {
    let docs = generate_documents(&SyntheticConfig {
        sentences: 20,
        ..SyntheticConfig::default()
    });
    let text = documents_to_enamex(&docs, false).unwrap();
    let rebuilt = documents_from_enamex(&text, true);
    for (a, b) in rebuilt.iter().zip(&docs) {
        assert_eq!(a.sentences.len(), b.sentences.len());
        for (x, y) in a.sentences.iter().zip(&b.sentences) {
            assert_eq!(sorted(x), sorted(y));
        }
    }
}

#[test]
fn single_column_reads_as_level_one() {
    let docs = documents_from_enamex(
        "<doc id=\"d\">\nông <ENAMEX TYPE=\"PER\">Lê_Lan</ENAMEX> ở <ENAMEX TYPE=\"ORG\">UBND <ENAMEX TYPE=\"LOC\">Huế</ENAMEX></ENAMEX>\n</doc>\n",
        false,
    );
    let mut out = Vec::new();
    write_single(&mut out, &docs, 1).unwrap();
    let back = to_documents(
        &read_conll(&String::from_utf8(out).unwrap()).unwrap(),
        Layout::Single,
        false,
    )
    .unwrap();
    assert_eq!(
        back[0].sentences[0].entities,
        docs[0].sentences[0].entities_at(1)
    );
}

#[test]
fn entity_inside_a_word_is_dropped() {
    let (doc, dropped) = build_document(
        "d",
        "Đại_học <ENAMEX TYPE=\"LOC\">Huế</ENAMEX>_mới",
        false,
        &PresegmentedSegmenter,
    )
    .unwrap();
    assert_eq!(dropped.len(), 1);
    assert_eq!(dropped[0].reason, DropReason::BoundaryConflict);
    assert!(doc.sentences[0].entities.is_empty());
}

#[test]
fn malformed_markup_reports_an_offset() {
    let err = build_document(
        "d",
        "a <ENAMEX TYPE=\"PER\">b",
        false,
        &PresegmentedSegmenter,
    )
    .unwrap_err();
    assert!(
        matches!(err, Error::UnbalancedTag { .. } | Error::Parse { .. }),
        "{err:?}"
    );
}
