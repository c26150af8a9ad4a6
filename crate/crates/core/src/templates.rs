//! Bilingual question templates backed by query-language text.
//!
//! A template carries a Sanskrit and an English question and a query, all
//! sharing numbered placeholders `{0}`, `{1}`, ... whose kinds are listed in
//! `input_types`. Instantiating a template checks each argument, replaces
//! entity arguments by the canonical member of their synonym group and fills
//! the placeholders.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::ontology::{Ontology, OntologyError};
use crate::query::{self, quote, QueryError, ResultSet};
use crate::transliteration::TransliterationIndex;

pub const DEFAULT_TEMPLATES_JSON: &str = include_str!("../data/templates.json");

const DUMMY_ENTITY: &str = "dummy";
const DUMMY_TYPE: &str = "DUMMY_TYPE";
const DUMMY_RELATION: &str = "DUMMY_RELATION";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("malformed template file: {0}")]
    Parse(String),
    #[error("template {template_id}: {message}")]
    Validation { template_id: String, message: String },
    #[error("template {template_id}: {source}")]
    OntologyMismatch {
        template_id: String,
        source: OntologyError,
    },
    #[error("no template {0:?}")]
    NoSuchTemplate(String),
    #[error("template {template_id} takes {expected} argument(s), got {got}")]
    Arity {
        template_id: String,
        expected: usize,
        got: usize,
    },
    #[error("no entity {arg:?}{}", if candidates.is_empty() { String::new() } else { format!(" (ambiguous: {})", candidates.join(", ")) })]
    UnknownEntity { arg: String, candidates: Vec<String> },
    #[error(transparent)]
    UnknownType(#[from] OntologyError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputType {
    Entity,
    #[serde(alias = "Entity-Type")]
    EntityType,
    Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTemplate {
    pub template_id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_sanskrit: Option<String>,
    pub nl_sanskrit: String,
    pub nl_english: String,
    pub gql_template: String,
    pub input_types: Vec<InputType>,
    /// How the query reads the question, where that is a choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TemplateCatalog {
    pub templates: Vec<QueryTemplate>,
    /// In order of first appearance.
    pub categories: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Instantiated {
    pub template_id: String,
    pub nl_sanskrit: String,
    pub nl_english: String,
    pub gql: String,
    /// Arguments after entity resolution and canonicalization.
    pub resolved_args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateRun {
    #[serde(flatten)]
    pub question: Instantiated,
    pub result: ResultSet,
}

fn placeholders(text: &str) -> Result<BTreeSet<usize>, String> {
    let mut out = BTreeSet::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| format!("unclosed placeholder in {text:?}"))?;
        let n = after[..close]
            .parse()
            .map_err(|_| format!("bad placeholder {{{}}} in {text:?}", &after[..close]))?;
        out.insert(n);
        rest = &after[close + 1..];
    }
    Ok(out)
}

fn fill(text: &str, values: &[String]) -> String {
    let mut out = text.to_string();
    for (i, v) in values.iter().enumerate() {
        out = out.replace(&format!("{{{i}}}"), v);
    }
    out
}

/// Contents of a string literal, without the surrounding quotes.
fn literal_body(s: &str) -> String {
    let q = quote(s);
    q[1..q.len() - 1].to_string()
}

impl QueryTemplate {
    fn validate(&self, ontology: &Ontology) -> Result<(), TemplateError> {
        let invalid = |message: String| TemplateError::Validation {
            template_id: self.template_id.clone(),
            message,
        };
        let expected: BTreeSet<usize> = (0..self.input_types.len()).collect();
        for text in [&self.nl_sanskrit, &self.nl_english, &self.gql_template] {
            let found = placeholders(text).map_err(invalid)?;
            if found != expected {
                return Err(invalid(format!(
                    "placeholders {found:?} in {text:?} do not match {} input type(s)",
                    self.input_types.len()
                )));
            }
        }
        let dummies: Vec<String> = self
            .input_types
            .iter()
            .map(|t| match t {
                InputType::Entity => DUMMY_ENTITY,
                InputType::EntityType => DUMMY_TYPE,
                InputType::Relation => DUMMY_RELATION,
            })
            .map(str::to_string)
            .collect();
        let ast = query::parse(&fill(&self.gql_template, &dummies)).map_err(|e| invalid(e.to_string()))?;
        let mismatch = |source| TemplateError::OntologyMismatch {
            template_id: self.template_id.clone(),
            source,
        };
        for p in &ast.patterns {
            for label in p.nodes().filter_map(|n| n.label.as_deref()) {
                if label != DUMMY_TYPE {
                    ontology.resolve_entity_type(label).map_err(mismatch)?;
                }
            }
            for t in p.steps.iter().flat_map(|(e, _)| &e.types) {
                if t != DUMMY_RELATION {
                    ontology.resolve_relation_type(t).map_err(mismatch)?;
                }
            }
        }
        Ok(())
    }
}

/// Loads and validates a template file (a JSON array). An empty file gives an
/// empty catalog with a warning.
pub fn load_templates(source: &str, ontology: &Ontology) -> Result<TemplateCatalog, TemplateError> {
    if source.trim().is_empty() {
        return Ok(TemplateCatalog {
            warnings: vec!["template file is empty".into()],
            ..Default::default()
        });
    }
    let templates: Vec<QueryTemplate> =
        serde_json::from_str(source).map_err(|e| TemplateError::Parse(e.to_string()))?;
    let mut ids = BTreeSet::new();
    let mut categories: Vec<String> = Vec::new();
    for t in &templates {
        if !ids.insert(t.template_id.as_str()) {
            return Err(TemplateError::Validation {
                template_id: t.template_id.clone(),
                message: "duplicate template id".into(),
            });
        }
        t.validate(ontology)?;
        if !categories.contains(&t.category) {
            categories.push(t.category.clone());
        }
    }
    let mut warnings = Vec::new();
    if templates.is_empty() {
        warnings.push("template file has no templates".into());
    }
    Ok(TemplateCatalog {
        templates,
        categories,
        warnings,
    })
}

impl TemplateCatalog {
    pub fn shipped(ontology: &Ontology) -> Self {
        load_templates(DEFAULT_TEMPLATES_JSON, ontology).expect("shipped templates are valid")
    }

    pub fn get(&self, template_id: &str) -> Option<&QueryTemplate> {
        self.templates.iter().find(|t| t.template_id == template_id)
    }

    pub fn in_category<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a QueryTemplate> {
        self.templates.iter().filter(move |t| t.category == category)
    }

    /// Fills a template. Entity arguments may be any lemma in the graph, or
    /// any transliteration of one that identifies it uniquely; they are then
    /// replaced by their canonical synonym.
    pub fn instantiate(
        &self,
        template_id: &str,
        args: &[String],
        graph: &Graph,
        index: Option<&TransliterationIndex>,
    ) -> Result<Instantiated, TemplateError> {
        let t = self
            .get(template_id)
            .ok_or_else(|| TemplateError::NoSuchTemplate(template_id.to_string()))?;
        if args.len() != t.input_types.len() {
            return Err(TemplateError::Arity {
                template_id: template_id.to_string(),
                expected: t.input_types.len(),
                got: args.len(),
            });
        }
        let ontology = graph.ontology();
        let mut text_values = Vec::new();
        let mut gql_values = Vec::new();
        for (arg, kind) in args.iter().zip(&t.input_types) {
            match kind {
                InputType::Entity => {
                    let lemma = resolve_entity(graph, index, arg)?;
                    gql_values.push(literal_body(&lemma));
                    text_values.push(lemma);
                }
                InputType::EntityType => {
                    let et = ontology.resolve_entity_type(arg)?;
                    gql_values.push(et.identifier());
                    text_values.push(et.name.clone());
                }
                InputType::Relation => {
                    let rt = ontology.resolve_relation_type(arg)?;
                    gql_values.push(rt.identifier());
                    text_values.push(rt.name.clone());
                }
            }
        }
        Ok(Instantiated {
            template_id: t.template_id.clone(),
            nl_sanskrit: fill(&t.nl_sanskrit, &text_values),
            nl_english: fill(&t.nl_english, &text_values),
            gql: fill(&t.gql_template, &gql_values),
            resolved_args: text_values,
        })
    }

    pub fn run(
        &self,
        template_id: &str,
        args: &[String],
        graph: &Graph,
        index: Option<&TransliterationIndex>,
    ) -> Result<TemplateRun, TemplateError> {
        let question = self.instantiate(template_id, args, graph, index)?;
        let result = query::run(&question.gql, graph)?;
        Ok(TemplateRun { question, result })
    }
}

/// Finds the node an entity argument names and returns the lemma of its
/// canonical synonym.
pub fn resolve_entity(graph: &Graph, index: Option<&TransliterationIndex>, arg: &str) -> Result<String, TemplateError> {
    let arg = arg.trim();
    let node = match graph.node_by_lemma(arg) {
        Some(n) => n,
        None => {
            let candidates: Vec<String> = index
                .map(|i| i.lookup_exact(arg))
                .unwrap_or_default()
                .into_iter()
                .filter(|l| graph.node_id(l).is_some())
                .collect();
            match candidates.as_slice() {
                [one] => graph.node_by_lemma(one).expect("filtered to existing nodes"),
                _ => {
                    return Err(TemplateError::UnknownEntity {
                        arg: arg.to_string(),
                        candidates,
                    })
                }
            }
        }
    };
    let canonical = node.canonical_of.and_then(|c| graph.node(c)).unwrap_or(node);
    Ok(canonical.lemma.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn onto() -> Ontology {
        Ontology::shipped()
    }

    #[test]
    fn shipped_catalog_counts() {
        let c = TemplateCatalog::shipped(&onto());
        assert_eq!(c.templates.len(), 31);
        assert_eq!(c.categories.len(), 12);
        assert_eq!(c.in_category("Generic").count(), 3);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn arity_mismatch_in_text_is_rejected() {
        let src = r#"[{"template_id":"t","category":"C","nl_sanskrit":"{0} {1}","nl_english":"{0} {1}",
            "gql_template":"MATCH (a) WHERE a.lemma = \"{0}\" RETURN a","input_types":["Entity"]}]"#;
        assert!(matches!(load_templates(src, &onto()), Err(TemplateError::Validation { .. })));
    }

    #[test]
    fn unknown_relation_in_template_is_rejected() {
        let src = r#"[{"template_id":"t","category":"C","nl_sanskrit":"x","nl_english":"x",
            "gql_template":"MATCH (a)-[:IS_FOO_OF]->(b) RETURN a","input_types":[]}]"#;
        assert!(matches!(load_templates(src, &onto()), Err(TemplateError::OntologyMismatch { .. })));
    }

    #[test]
    fn empty_file_is_flagged() {
        let c = load_templates("", &onto()).unwrap();
        assert!(c.templates.is_empty());
        assert_eq!(c.warnings.len(), 1);
        assert!(matches!(load_templates("{", &onto()), Err(TemplateError::Parse(_))));
    }

    #[test]
    fn instantiation() {
        let o = Arc::new(onto());
        let mut g = Graph::new(o.clone());
        g.upsert_node("कफ", "Tridoṣa", 1, "a").unwrap();
        g.upsert_node("a\"b", "Substance", 1, "a").unwrap();
        let c = TemplateCatalog::shipped(&o);
        let q = c.instantiate("tridosha_increased_by", &["कफ".into()], &g, None).unwrap();
        assert!(q.gql.contains(r#"dosha.lemma = "कफ""#));
        assert_eq!(q.nl_english, "Which entities increase the dosha कफ?");
        let q = c.instantiate("entity_type_of", &["a\"b".into()], &g, None).unwrap();
        assert!(query::parse(&q.gql).is_ok());
        let q = c
            .instantiate("generic_type_relation_type", &["Tridoṣa".into(), "is Increased by".into(), "SUBSTANCE".into()], &g, None)
            .unwrap();
        assert_eq!(q.gql, "MATCH (a:TRIDOSHA)-[r:IS_INCREASED_BY]->(b:SUBSTANCE) RETURN a, r, b");
        assert!(matches!(
            c.instantiate("relation_between", &["कफ".into()], &g, None),
            Err(TemplateError::Arity { expected: 2, got: 1, .. })
        ));
        assert!(matches!(
            c.instantiate("properties_of", &["nope".into()], &g, None),
            Err(TemplateError::UnknownEntity { .. })
        ));
    }

    #[test]
    fn transliterated_entity_arguments() {
        let o = Arc::new(onto());
        let mut g = Graph::new(o.clone());
        g.upsert_node("कफ", "Tridoṣa", 1, "a").unwrap();
        let mut idx = TransliterationIndex::new();
        idx.index_lemma("कफ");
        let c = TemplateCatalog::shipped(&o);
        let q = c.instantiate("tridosha_increased_by", &["kapha".into()], &g, Some(&idx)).unwrap();
        assert_eq!(q.resolved_args, ["कफ"]);
    }
}
