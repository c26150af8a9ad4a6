//! Small annotated excerpts of the Dhānyavarga used by tests, examples and the
//! service's demo data.

use std::sync::Arc;

use crate::annotation::{AnnotationError, AnnotationStore, NewEntity, NewRelation};
use crate::corpus::{Corpus, LineId};
use crate::graph::Graph;
use crate::ontology::Ontology;

/// Verses 1 to 10, 21 lines, with sandhi-split text.
pub const OPENING_VERSES_JSONL: &str = include_str!("../data/fixtures/dhanyavarga_opening.jsonl");
/// Verses 31, 33, 39 and 50.
pub const ANNOTATED_LINES_JSONL: &str = include_str!("../data/fixtures/dhanyavarga_annotated.jsonl");
/// Ten names of one substance, all pointing at राजिका, plus one property.
pub const RAJIKA_GRAPH_JSON: &str = include_str!("../data/fixtures/rajika_graph.json");

pub const LINE_SLOKA_31: LineId = 256343;
pub const LINE_SLOKA_33_A: LineId = 256345;
pub const LINE_SLOKA_33_B: LineId = 256346;
pub const LINE_SLOKA_39_A: LineId = 256358;
pub const LINE_SLOKA_39_B: LineId = 256359;

pub const GODHUMA: &str = "गोधूम";
pub const SUMANA: &str = "सुमन";
pub const MADHURA: &str = "मधुर";
pub const SITA: &str = "शीत";
pub const GURU: &str = "गुरु";
pub const VATA: &str = "वात";
pub const PITTA: &str = "पित्त";
pub const KAPHA: &str = "कफ";

pub const RAJIKA: &str = "राजिका";
pub const KSAVA: &str = "क्षव";
pub const USNA: &str = "उष्ण";
pub const RAJIKA_NAMES: [&str; 10] = [
    "राजिका",
    "क्षव",
    "क्षुताभिजनक",
    "कृष्णिका",
    "कृष्णसर्षप",
    "राजी",
    "क्षुज्जनिका",
    "आसुरि",
    "तीक्ष्णगन्धा",
    "चीनाक",
];

/// Colour properties of the three unnamed mudga variants on the first line of
/// verse 39.
pub const MUDGA_COLOURS: [&str; 3] = ["श्याम", "हरित", "पीत"];

/// All fixture lines.
pub fn corpus() -> Corpus {
    let mut c = Corpus::new();
    c.import(OPENING_VERSES_JSONL).expect("fixture lines are valid");
    c.import(ANNOTATED_LINES_JSONL).expect("fixture lines are valid");
    c
}

pub fn store() -> AnnotationStore {
    AnnotationStore::new(Arc::new(Ontology::shipped()), corpus())
}

fn entity(store: &mut AnnotationStore, line_id: LineId, lemma: &str, entity_type: &str) -> Result<(), AnnotationError> {
    store.annotate_entity(NewEntity {
        line_id,
        lemma: Some(lemma.to_string()),
        unnamed_ordinal: None,
        entity_type: entity_type.to_string(),
        annotator: "a1".to_string(),
    })?;
    Ok(())
}

fn unnamed(store: &mut AnnotationStore, line_id: LineId, ordinal: u32) -> Result<(), AnnotationError> {
    store.annotate_entity(NewEntity {
        line_id,
        lemma: None,
        unnamed_ordinal: Some(ordinal),
        entity_type: "Substance".to_string(),
        annotator: "a1".to_string(),
    })?;
    Ok(())
}

fn relation(
    store: &mut AnnotationStore,
    line_id: LineId,
    src: &str,
    relation_type: &str,
    dst: &str,
    detail: Option<&str>,
) -> Result<(), AnnotationError> {
    store.annotate_relation(NewRelation {
        line_id,
        src: src.to_string(),
        relation_type: relation_type.to_string(),
        dst: dst.to_string(),
        detail: detail.map(str::to_string),
        annotator: "a1".to_string(),
    })?;
    Ok(())
}

/// Entities and relations of verses 31 and 33 (godhūma).
pub fn annotate_godhuma(store: &mut AnnotationStore) -> Result<(), AnnotationError> {
    entity(store, LINE_SLOKA_31, GODHUMA, "Substance")?;
    entity(store, LINE_SLOKA_31, SUMANA, "Substance")?;
    relation(store, LINE_SLOKA_31, SUMANA, "is Synonym of", GODHUMA, None)?;

    entity(store, LINE_SLOKA_33_A, GODHUMA, "Substance")?;
    for p in [MADHURA, SITA, GURU] {
        entity(store, LINE_SLOKA_33_A, p, "Property")?;
    }
    for d in [VATA, PITTA] {
        entity(store, LINE_SLOKA_33_A, d, "Tridoṣa")?;
    }
    relation(store, LINE_SLOKA_33_A, MADHURA, "is Property of", GODHUMA, Some("rasa"))?;
    relation(store, LINE_SLOKA_33_A, SITA, "is Property of", GODHUMA, None)?;
    relation(store, LINE_SLOKA_33_A, VATA, "is Decreased by", GODHUMA, None)?;
    relation(store, LINE_SLOKA_33_A, PITTA, "is Decreased by", GODHUMA, None)?;
    relation(store, LINE_SLOKA_33_A, GURU, "is Property of", GODHUMA, None)?;

    // the subject of this line is carried over from the previous one
    entity(store, LINE_SLOKA_33_B, KAPHA, "Tridoṣa")?;
    relation(store, LINE_SLOKA_33_B, KAPHA, "is Increased by", GODHUMA, None)?;
    Ok(())
}

/// The five unnamed mudga variants of verse 39: three coloured variants on
/// the first line, two more on the second, and the chain of "lighter than"
/// relations between them.
pub fn annotate_mudga(store: &mut AnnotationStore) -> Result<(), AnnotationError> {
    for n in 1..=3 {
        unnamed(store, LINE_SLOKA_39_A, n)?;
    }
    for colour in MUDGA_COLOURS {
        entity(store, LINE_SLOKA_39_A, colour, "Property")?;
    }
    for (n, colour) in MUDGA_COLOURS.iter().enumerate() {
        let variant = format!("X{}-{LINE_SLOKA_39_A}", n + 1);
        relation(store, LINE_SLOKA_39_A, colour, "is Property of", &variant, Some("varṇa"))?;
    }
    for n in 1..=2 {
        unnamed(store, LINE_SLOKA_39_B, n)?;
    }
    let chain = mudga_chain();
    for pair in chain.windows(2) {
        relation(store, LINE_SLOKA_39_B, &pair[0], "is Better than", &pair[1], Some("laghu"))?;
    }
    Ok(())
}

/// The five mudga variants from lightest to heaviest.
pub fn mudga_chain() -> Vec<String> {
    vec![
        format!("X1-{LINE_SLOKA_39_A}"),
        format!("X2-{LINE_SLOKA_39_A}"),
        format!("X3-{LINE_SLOKA_39_A}"),
        format!("X1-{LINE_SLOKA_39_B}"),
        format!("X2-{LINE_SLOKA_39_B}"),
    ]
}

pub fn rajika_graph(ontology: Arc<Ontology>) -> Graph {
    Graph::import_json(ontology, RAJIKA_GRAPH_JSON).expect("fixture graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        let mut s = store();
        assert_eq!(s.corpus().stats().lines, 27);
        annotate_godhuma(&mut s).unwrap();
        annotate_mudga(&mut s).unwrap();
        let (e, r) = s.list_annotations(LINE_SLOKA_39_A);
        assert_eq!((e.len(), r.len()), (6, 3));
        assert_eq!(s.graph().pending().count(), 0);
        let g = rajika_graph(Arc::new(Ontology::shipped()));
        assert_eq!(g.degree(g.node_id(RAJIKA).unwrap()).unwrap(), 10);
    }
}
