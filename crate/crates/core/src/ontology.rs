//! Closed vocabulary of entity and relation types.
//!
//! Every annotation, graph element and query label is validated against an
//! [`Ontology`]. Names are the human-readable English labels; each type also
//! has an UPPER_SNAKE identifier used by the query language
//! (`"is Increased by"` -> `IS_INCREASED_BY`, `"Tridoṣa"` -> `TRIDOSHA`).
//!
//! Labels written with slash alternatives (`"is Decreased/Reduced by"`) resolve
//! under every alternative reading (`"is Decreased by"`, `"is Reduced by"`), and
//! the identifier is built from the first alternative (`IS_DECREASED_BY`).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Ontology document shipped with the crate.
pub const DEFAULT_ONTOLOGY_JSON: &str = include_str!("../data/ontology.json");

/// The relation whose components are collapsed by synonym canonicalization.
pub const SYNONYM_RELATION: &str = "is Synonym of";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("malformed ontology document: {0}")]
    Parse(String),
    #[error("duplicate {kind} type name {name:?}")]
    DuplicateType { kind: TypeKind, name: String },
    #[error("ontology has no {0} types")]
    Empty(TypeKind),
    #[error("unknown {kind} type {name:?}{}", suggestion.as_ref().map(|s| format!(" (did you mean {s:?}?)")).unwrap_or_default())]
    UnknownType {
        kind: TypeKind,
        name: String,
        suggestion: Option<String>,
    },
    #[error("relation type {0:?} is symmetric but declares an inverse reading")]
    SymmetricWithInverse(String),
    #[error("inference default for {relation:?} names unknown entity type {entity_type:?}")]
    BadInference {
        relation: String,
        entity_type: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    Entity,
    Relation,
}

impl std::fmt::Display for TypeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TypeKind::Entity => "entity",
            TypeKind::Relation => "relation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityType {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

impl EntityType {
    pub fn identifier(&self) -> String {
        identifier(&self.name)
    }
}

/// Default entity types for the two endpoints of a relation, applied to
/// endpoints that were mentioned in a relation but never annotated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferencePair {
    #[serde(default)]
    pub src: Option<String>,
    #[serde(default)]
    pub dst: Option<String>,
}

impl InferencePair {
    fn is_empty(&self) -> bool {
        self.src.is_none() && self.dst.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationType {
    pub name: String,
    #[serde(default)]
    pub symmetric: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_reading: Option<String>,
    #[serde(default)]
    pub inference: InferencePair,
}

impl RelationType {
    pub fn identifier(&self) -> String {
        identifier(&self.name)
    }

    /// Every reading of the label: the label itself plus each slash alternative.
    pub fn readings(&self) -> Vec<String> {
        readings(&self.name)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct OntologyDocument {
    version: String,
    entity_types: Vec<EntityType>,
    relation_types: Vec<RelationType>,
}

/// A validated, immutable ontology.
#[derive(Debug, Clone)]
pub struct Ontology {
    version: String,
    entity_types: Vec<EntityType>,
    relation_types: Vec<RelationType>,
    entity_keys: HashMap<String, usize>,
    relation_keys: HashMap<String, usize>,
}

impl PartialEq for Ontology {
    fn eq(&self, other: &Self) -> bool {
        self.version == other.version
            && self.entity_types == other.entity_types
            && self.relation_types == other.relation_types
    }
}

impl Eq for Ontology {}

/// Parses and validates an ontology document.
pub fn load_ontology(source: &str) -> Result<Ontology, OntologyError> {
    let doc: OntologyDocument =
        serde_json::from_str(source).map_err(|e| OntologyError::Parse(e.to_string()))?;
    Ontology::new(doc.version, doc.entity_types, doc.relation_types)
}

impl Ontology {
    pub fn new(
        version: impl Into<String>,
        entity_types: Vec<EntityType>,
        relation_types: Vec<RelationType>,
    ) -> Result<Self, OntologyError> {
        if entity_types.is_empty() {
            return Err(OntologyError::Empty(TypeKind::Entity));
        }
        if relation_types.is_empty() {
            return Err(OntologyError::Empty(TypeKind::Relation));
        }

        let mut entity_keys = HashMap::new();
        for (i, et) in entity_types.iter().enumerate() {
            if et.name.trim().is_empty() {
                return Err(OntologyError::Parse("entity type with empty name".into()));
            }
            // a label must not collide with another label's name or identifier
            let mut keys = vec![et.name.to_lowercase(), et.identifier().to_lowercase()];
            for reading in readings(&et.name) {
                keys.push(reading.to_lowercase());
                keys.push(identifier(&reading).to_lowercase());
            }
            keys.sort();
            keys.dedup();
            for key in keys {
                if entity_keys.insert(key, i).is_some() {
                    return Err(OntologyError::DuplicateType {
                        kind: TypeKind::Entity,
                        name: et.name.clone(),
                    });
                }
            }
        }

        let mut relation_keys = HashMap::new();
        for (i, rt) in relation_types.iter().enumerate() {
            if rt.name.trim().is_empty() {
                return Err(OntologyError::Parse("relation type with empty name".into()));
            }
            if rt.symmetric && rt.inverse_reading.is_some() {
                return Err(OntologyError::SymmetricWithInverse(rt.name.clone()));
            }
            let mut keys = vec![rt.name.to_lowercase(), rt.identifier().to_lowercase()];
            for reading in rt.readings() {
                keys.push(reading.to_lowercase());
                keys.push(identifier(&reading).to_lowercase());
            }
            keys.sort();
            keys.dedup();
            for key in keys {
                if relation_keys.insert(key, i).is_some() {
                    return Err(OntologyError::DuplicateType {
                        kind: TypeKind::Relation,
                        name: rt.name.clone(),
                    });
                }
            }
        }

        let onto = Ontology {
            version: version.into(),
            entity_types,
            relation_types,
            entity_keys,
            relation_keys,
        };
        for rt in &onto.relation_types {
            for et in [&rt.inference.src, &rt.inference.dst].into_iter().flatten() {
                if onto.resolve_entity_type(et).is_err() {
                    return Err(OntologyError::BadInference {
                        relation: rt.name.clone(),
                        entity_type: et.clone(),
                    });
                }
            }
        }
        Ok(onto)
    }

    /// The ontology shipped in `data/ontology.json`.
    pub fn shipped() -> Self {
        load_ontology(DEFAULT_ONTOLOGY_JSON).expect("shipped ontology is valid")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn entity_types(&self) -> &[EntityType] {
        &self.entity_types
    }

    pub fn relation_types(&self) -> &[RelationType] {
        &self.relation_types
    }

    /// Case-insensitive lookup by name or query-language identifier.
    pub fn resolve_entity_type(&self, name: &str) -> Result<&EntityType, OntologyError> {
        match self.entity_keys.get(&name.trim().to_lowercase()) {
            Some(&i) => Ok(&self.entity_types[i]),
            None => Err(OntologyError::UnknownType {
                kind: TypeKind::Entity,
                name: name.to_string(),
                suggestion: nearest(
                    name,
                    self.entity_types.iter().map(|t| {
                        let mut keys = readings(&t.name);
                        keys.push(t.identifier());
                        (t.name.as_str(), keys)
                    }),
                ),
            }),
        }
    }

    /// Case-insensitive lookup by name, slash-alternative reading or identifier.
    pub fn resolve_relation_type(&self, name: &str) -> Result<&RelationType, OntologyError> {
        match self.relation_keys.get(&name.trim().to_lowercase()) {
            Some(&i) => Ok(&self.relation_types[i]),
            None => Err(OntologyError::UnknownType {
                kind: TypeKind::Relation,
                name: name.to_string(),
                suggestion: nearest(
                    name,
                    self.relation_types.iter().map(|t| {
                        let mut keys = t.readings();
                        keys.push(t.identifier());
                        (t.name.as_str(), keys)
                    }),
                ),
            }),
        }
    }

    pub fn synonym_relation(&self) -> Option<&RelationType> {
        self.resolve_relation_type(SYNONYM_RELATION).ok()
    }

    pub fn to_json(&self) -> String {
        let doc = OntologyDocument {
            version: self.version.clone(),
            entity_types: self.entity_types.clone(),
            relation_types: self.relation_types.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("ontology serializes")
    }

    /// Relation types that carry at least one inference default.
    pub fn inference_rules(&self) -> impl Iterator<Item = &RelationType> {
        self.relation_types.iter().filter(|r| !r.inference.is_empty())
    }
}

fn nearest<'a>(
    query: &str,
    candidates: impl Iterator<Item = (&'a str, Vec<String>)>,
) -> Option<String> {
    let q = query.trim().to_lowercase();
    let mut best: Option<(usize, &str)> = None;
    for (name, keys) in candidates {
        let d = keys
            .iter()
            .flat_map(|k| [k.to_lowercase(), fold_ascii(k).to_lowercase()])
            .map(|k| strsim::levenshtein(&q, &k))
            .min()
            .unwrap_or(usize::MAX);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, name));
        }
    }
    let limit = (q.chars().count() / 2).max(3);
    best.filter(|(d, _)| *d <= limit).map(|(_, n)| n.to_string())
}

/// Splits a label with a slash group into its alternative readings.
///
/// `"is Better/Larger/Greater than"` gives `["is Better than", "is Larger than",
/// "is Greater than"]`; labels without a slash give themselves.
pub fn readings(name: &str) -> Vec<String> {
    let parts: Vec<&str> = name.split('/').collect();
    if parts.len() < 2 {
        return vec![name.to_string()];
    }
    let first = parts[0];
    let last = parts[parts.len() - 1];
    let split_at_word_end = |s: &str| {
        let cut = s
            .char_indices()
            .rev()
            .find(|(_, c)| !c.is_alphanumeric())
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(0);
        (s[..cut].to_string(), s[cut..].to_string())
    };
    let split_at_word_start = |s: &str| {
        let cut = s
            .char_indices()
            .find(|(_, c)| !c.is_alphanumeric())
            .map(|(i, _)| i)
            .unwrap_or(s.len());
        (s[..cut].to_string(), s[cut..].to_string())
    };
    let (prefix, first_word) = split_at_word_end(first);
    let (last_word, suffix) = split_at_word_start(last);
    let mut alternatives = vec![first_word];
    alternatives.extend(parts[1..parts.len() - 1].iter().map(|s| s.to_string()));
    alternatives.push(last_word);
    alternatives
        .into_iter()
        .map(|alt| format!("{prefix}{alt}{suffix}"))
        .collect()
}

/// Query-language identifier for a label: first reading, diacritics folded,
/// upper-cased, non-alphanumeric runs collapsed to `_`.
pub fn identifier(name: &str) -> String {
    let reading = readings(name).swap_remove(0);
    let folded = fold_ascii(&reading);
    let mut out = String::with_capacity(folded.len());
    for c in folded.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_uppercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn fold_ascii(s: &str) -> String {
    let mut pre = String::with_capacity(s.len());
    for c in s.nfc() {
        match c {
            'ṣ' | 'ś' => pre.push_str("sh"),
            'Ṣ' | 'Ś' => pre.push_str("Sh"),
            'ṛ' => pre.push_str("ri"),
            'Ṛ' => pre.push_str("Ri"),
            _ => pre.push(c),
        }
    }
    pre.nfd().filter(|c| !is_combining_mark(*c)).collect()
}
