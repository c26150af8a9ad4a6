//! Operations shared by the HTTP routes and the CLI.
//!
//! Every operation takes the calling [`Actor`], checks its role and returns a
//! JSON value. Mutations are written to the data directory before returning.

use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Value};

use glossgraph_core::annotation::{AnnotationError, NewEntity, NewRelation};
use glossgraph_core::curation::{detect_category_conflicts, CurationPass};
use glossgraph_core::graph::EdgeOutcome;
use glossgraph_core::query::{self, QueryError};
use glossgraph_core::templates::{load_templates, TemplateCatalog, TemplateError};
use glossgraph_core::{AnnotationStore, Corpus, CorpusError, Graph, GraphError, LineId};

use crate::auth::Role;
use crate::config::{read, Config, ConfigError};
use crate::storage::{DataDir, StorageError};

/// Who is making a call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Actor {
    pub name: String,
    pub role: Role,
}

impl Actor {
    pub fn new(name: impl Into<String>, role: Role) -> Self {
        Actor {
            name: name.into(),
            role,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("missing or unknown bearer token")]
    Unauthorized,
    #[error("role {role} may not {action}")]
    Forbidden { role: Role, action: &'static str },
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

fn graph_status(e: &GraphError) -> u16 {
    match e {
        GraphError::NoSuchNode(_) | GraphError::NoSuchEdge(_) => 404,
        _ => 400,
    }
}

impl ApiError {
    /// The HTTP status this error maps to.
    pub fn status(&self) -> u16 {
        match self {
            ApiError::Unauthorized => 401,
            ApiError::Forbidden { .. } => 403,
            ApiError::NotFound(_) => 404,
            ApiError::BadRequest(_) | ApiError::Query(_) | ApiError::Corpus(_) => 400,
            ApiError::Annotation(e) => match e {
                AnnotationError::NoSuchLine(_) | AnnotationError::NoSuchAnnotation(_) => 404,
                AnnotationError::Permission { .. } => 403,
                AnnotationError::DuplicateUnnamedOrdinal { .. } => 409,
                AnnotationError::Graph(g) => graph_status(g),
                _ => 400,
            },
            ApiError::Template(e) => match e {
                TemplateError::NoSuchTemplate(_) | TemplateError::UnknownEntity { .. } => 404,
                _ => 400,
            },
            ApiError::Graph(e) => graph_status(e),
            ApiError::Storage(_) => 500,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ApiError::Unauthorized => "unauthorized",
            ApiError::Forbidden { .. } | ApiError::Annotation(AnnotationError::Permission { .. }) => "forbidden",
            ApiError::NotFound(_) | ApiError::Template(TemplateError::NoSuchTemplate(_)) => "not_found",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Annotation(AnnotationError::UnknownType(_)) | ApiError::Template(TemplateError::UnknownType(_)) => {
                "unknown_type"
            }
            ApiError::Annotation(_) => "annotation",
            ApiError::Template(TemplateError::UnknownEntity { .. }) => "unknown_entity",
            ApiError::Template(TemplateError::Query(_)) | ApiError::Query(_) => "query",
            ApiError::Template(_) => "template",
            ApiError::Corpus(_) => "corpus",
            ApiError::Graph(_) => "graph",
            ApiError::Storage(_) => "storage",
        }
    }

    /// `{"error": {"kind": ..., "message": ...}}`
    pub fn to_json(&self) -> Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}})
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OpenError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// Body of `POST /api/query`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum QueryRequest {
    Template {
        template_id: String,
        #[serde(default)]
        args: Vec<String>,
    },
    Raw {
        raw: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
pub struct EntityRequest {
    pub line_id: LineId,
    #[serde(default)]
    pub lemma: Option<String>,
    #[serde(default)]
    pub unnamed_ordinal: Option<u32>,
    pub entity_type: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RelationRequest {
    pub line_id: LineId,
    pub src: String,
    pub relation_type: String,
    pub dst: String,
    #[serde(default)]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CurateRequest {
    pub pass: CurationPass,
    #[serde(default)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ResolveRequest {
    pub entity_type: String,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("API values serialize")
}

pub struct Service {
    store: AnnotationStore,
    catalog: TemplateCatalog,
    data: Option<DataDir>,
    fixture_corpus: bool,
}

impl Service {
    /// A service that keeps nothing on disk.
    pub fn in_memory(store: AnnotationStore) -> Self {
        let catalog = TemplateCatalog::shipped(store.ontology());
        Service {
            store,
            catalog,
            data: None,
            fixture_corpus: false,
        }
    }

    pub fn open(config: &Config) -> Result<Self, OpenError> {
        config.validate()?;
        let ontology = Arc::new(config.ontology()?);
        let catalog = match config.templates_path() {
            Some(path) => load_templates(&read(&path)?, &ontology).map_err(|e| ConfigError::invalid(&path, e))?,
            None => TemplateCatalog::shipped(&ontology),
        };
        let data = DataDir::new(&config.data_dir);
        let loaded = data.load(ontology)?;
        Ok(Service {
            store: loaded.store,
            catalog,
            data: Some(data),
            fixture_corpus: loaded.fixture_corpus,
        })
    }

    pub fn store(&self) -> &AnnotationStore {
        &self.store
    }

    pub fn catalog(&self) -> &TemplateCatalog {
        &self.catalog
    }

    /// Snapshot version of the graph; changes with every mutation.
    pub fn version(&self) -> u64 {
        self.store.version()
    }

    fn save_log(&self) -> Result<(), ApiError> {
        if let Some(d) = &self.data {
            d.save_log(&self.store)?;
        }
        Ok(())
    }

    fn require(actor: &Actor, allowed: bool, action: &'static str) -> Result<(), ApiError> {
        if allowed {
            Ok(())
        } else {
            Err(ApiError::Forbidden {
                role: actor.role,
                action,
            })
        }
    }

    pub fn corpus_lines(&self, chapter: &str, from: Option<u32>, to: Option<u32>) -> Result<Value, ApiError> {
        let corpus = self.store.corpus();
        if !corpus.lines().any(|l| l.chapter == chapter) {
            return Err(ApiError::NotFound(format!("no chapter {chapter:?}")));
        }
        let lines = corpus.get_lines(chapter, from.unwrap_or(0), to.unwrap_or(u32::MAX))?;
        let lines: Vec<Value> = lines
            .into_iter()
            .map(|l| {
                let (entities, relations) = self.store.list_annotations(l.line_id);
                let mut v = to_value(l);
                // log records leave out the generated lemma of unnamed entities
                let entities: Vec<Value> = entities
                    .iter()
                    .map(|a| {
                        let mut e = to_value(a);
                        e["lemma"] = json!(a.lemma);
                        e
                    })
                    .collect();
                v["entities"] = json!(entities);
                v["relations"] = to_value(&relations);
                v
            })
            .collect();
        Ok(json!({"chapter": chapter, "lines": lines}))
    }

    pub fn annotate_entity(&mut self, actor: &Actor, req: EntityRequest) -> Result<Value, ApiError> {
        Self::require(actor, actor.role.can_annotate(), "annotate")?;
        let (id, node) = self.store.annotate_entity(NewEntity {
            line_id: req.line_id,
            lemma: req.lemma,
            unnamed_ordinal: req.unnamed_ordinal,
            entity_type: req.entity_type,
            annotator: actor.name.clone(),
        })?;
        self.save_log()?;
        let lemma = self.store.graph().node(node).map(|n| n.lemma.clone());
        Ok(json!({"annotation_id": id, "node_id": node, "lemma": lemma}))
    }

    pub fn annotate_relation(&mut self, actor: &Actor, req: RelationRequest) -> Result<Value, ApiError> {
        Self::require(actor, actor.role.can_annotate(), "annotate")?;
        let (id, outcome) = self.store.annotate_relation(NewRelation {
            line_id: req.line_id,
            src: req.src,
            relation_type: req.relation_type,
            dst: req.dst,
            detail: req.detail,
            annotator: actor.name.clone(),
        })?;
        self.save_log()?;
        let mut out = json!({"annotation_id": id, "outcome": outcome});
        if matches!(outcome, EdgeOutcome::Pending(_)) {
            out["warning"] = json!(
                "an endpoint is not annotated as an entity yet; the relation is kept pending until it is, or until the inference pass types it"
            );
        }
        Ok(out)
    }

    pub fn delete_annotation(&mut self, actor: &Actor, id: u64) -> Result<Value, ApiError> {
        Self::require(actor, actor.role.can_annotate(), "delete annotations")?;
        self.store.delete_annotation(id, &actor.name, actor.role.can_curate())?;
        self.save_log()?;
        Ok(json!({"deleted": id}))
    }

    pub fn suggest(&self, prefix: &str) -> Value {
        json!({"query": prefix, "suggestions": self.store.index().suggest(prefix)})
    }

    pub fn templates(&self) -> Value {
        to_value(&self.catalog)
    }

    pub fn query(&self, req: &QueryRequest) -> Result<Value, ApiError> {
        match req {
            QueryRequest::Template { template_id, args } => {
                let run = self
                    .catalog
                    .run(template_id, args, self.store.graph(), Some(self.store.index()))?;
                Ok(to_value(&run))
            }
            QueryRequest::Raw { raw } => {
                let result = query::run(raw, self.store.graph())?;
                Ok(json!({"gql": raw, "result": result}))
            }
        }
    }

    pub fn curate(&mut self, actor: &Actor, req: &CurateRequest) -> Result<Value, ApiError> {
        Self::require(actor, actor.role.can_curate(), "run curation")?;
        let report = self.store.curate(req.pass, &actor.name, req.dry_run);
        if !req.dry_run {
            self.save_log()?;
        }
        Ok(to_value(&report))
    }

    pub fn export_graph(&self) -> Value {
        to_value(&self.store.graph().to_document())
    }

    pub fn stats(&self) -> Value {
        let g = self.store.graph();
        let mut v = to_value(&g.stats());
        v["pending"] = json!(g.pending().count());
        v["corpus"] = to_value(&self.store.corpus().stats());
        v["log_records"] = json!(self.store.log().len());
        v["ontology_version"] = json!(g.ontology().version());
        v
    }

    pub fn conflicts(&self) -> Value {
        json!({"conflicts": detect_category_conflicts(self.store.graph())})
    }

    pub fn resolve_conflict(&mut self, actor: &Actor, lemma: &str, req: &ResolveRequest) -> Result<Value, ApiError> {
        Self::require(actor, actor.role.can_curate(), "resolve conflicts")?;
        self.store.resolve_conflict(lemma, &req.entity_type, &actor.name)?;
        self.save_log()?;
        let resolved = self.store.graph().resolutions().get(lemma).cloned();
        Ok(json!({"lemma": lemma, "entity_type": resolved}))
    }

    pub fn ontology(&self) -> Value {
        serde_json::from_str(&self.store.ontology().to_json()).expect("ontology JSON is valid")
    }

    /// Adds corpus lines. The first import into a data directory that only
    /// has the fixture lines replaces them, as long as nothing is annotated.
    pub fn import_corpus(&mut self, actor: &Actor, source: &str) -> Result<Value, ApiError> {
        Self::require(actor, actor.role.can_import(), "import a corpus")?;
        let imported = if self.fixture_corpus && self.store.log().is_empty() {
            let mut corpus = Corpus::new();
            let stats = corpus.import(source)?;
            self.store = AnnotationStore::with_base(corpus, self.store.base().clone());
            stats
        } else {
            self.store.import_corpus(source)?
        };
        self.fixture_corpus = false;
        if let Some(d) = &self.data {
            d.save_corpus(self.store.corpus())?;
        }
        Ok(json!({"imported": imported, "corpus": self.store.corpus().stats()}))
    }

    /// Appends an annotation log in the JSON Lines form of `annotations.jsonl`.
    pub fn import_annotations(&mut self, actor: &Actor, source: &str) -> Result<Value, ApiError> {
        Self::require(actor, actor.role.can_import(), "import annotations")?;
        let n = self.store.import_log(source)?;
        self.save_log()?;
        Ok(json!({"imported": n, "stats": self.stats()}))
    }

    /// Replaces the base graph; the annotation log is replayed over it.
    pub fn import_graph(&mut self, actor: &Actor, source: &str) -> Result<Value, ApiError> {
        Self::require(actor, actor.role.can_import(), "import a graph")?;
        let base = Graph::import_json(self.store.ontology().clone(), source)?;
        self.store.replace_base(base)?;
        if let Some(d) = &self.data {
            d.save_base(self.store.base())?;
        }
        Ok(self.stats())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use glossgraph_core::fixtures;

    fn service() -> Service {
        let mut store = fixtures::store();
        fixtures::annotate_godhuma(&mut store).unwrap();
        Service::in_memory(store)
    }

    fn annotator() -> Actor {
        Actor::new("a1", Role::Annotator)
    }

    #[test]
    fn querier_cannot_annotate() {
        let mut s = service();
        let err = s
            .annotate_entity(
                &Actor::new("q", Role::Querier),
                EntityRequest {
                    line_id: fixtures::LINE_SLOKA_31,
                    lemma: Some("यव".into()),
                    unnamed_ordinal: None,
                    entity_type: "Substance".into(),
                },
            )
            .unwrap_err();
        assert_eq!(err.status(), 403);
        assert_eq!(err.to_json()["error"]["kind"], "forbidden");
    }

    #[test]
    fn unnamed_entity_gets_its_identifier() {
        let mut s = service();
        let v = s
            .annotate_entity(
                &annotator(),
                EntityRequest {
                    line_id: fixtures::LINE_SLOKA_39_A,
                    lemma: None,
                    unnamed_ordinal: Some(1),
                    entity_type: "Substance".into(),
                },
            )
            .unwrap();
        assert_eq!(v["lemma"], "X1-256358");
    }

    #[test]
    fn pending_relation_warns() {
        let mut s = service();
        let v = s
            .annotate_relation(
                &annotator(),
                RelationRequest {
                    line_id: fixtures::LINE_SLOKA_31,
                    src: "अज्ञात".into(),
                    relation_type: "is Property of".into(),
                    dst: fixtures::GODHUMA.into(),
                    detail: None,
                },
            )
            .unwrap();
        assert_eq!(v["outcome"]["status"], "pending");
        assert!(v["warning"].is_string());
    }

    #[test]
    fn query_by_template_and_raw() {
        let s = service();
        let v = s
            .query(&QueryRequest::Template {
                template_id: "tridosha_increased_by".into(),
                args: vec![fixtures::KAPHA.into()],
            })
            .unwrap();
        assert_eq!(v["result"]["rows"][0][0]["lemma"], fixtures::GODHUMA);
        let v = s
            .query(&QueryRequest::Raw {
                raw: "MATCH (s:SUBSTANCE) RETURN s.lemma".into(),
            })
            .unwrap();
        assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 2);
        let err = s.query(&QueryRequest::Raw { raw: "MATCH".into() }).unwrap_err();
        assert_eq!((err.status(), err.kind()), (400, "query"));
        let err = s
            .query(&QueryRequest::Template {
                template_id: "nope".into(),
                args: vec![],
            })
            .unwrap_err();
        assert_eq!(err.status(), 404);
    }

    #[test]
    fn query_request_shapes() {
        let t: QueryRequest = serde_json::from_str(r#"{"template_id":"t","args":["x"]}"#).unwrap();
        assert!(matches!(t, QueryRequest::Template { .. }));
        let r: QueryRequest = serde_json::from_str(r#"{"raw":"MATCH (a) RETURN a"}"#).unwrap();
        assert!(matches!(r, QueryRequest::Raw { .. }));
        assert!(serde_json::from_str::<QueryRequest>(r#"{"args":[]}"#).is_err());
    }

    #[test]
    fn only_authors_and_curators_delete() {
        let mut s = service();
        let id = s.store().log()[0].id();
        let err = s.delete_annotation(&Actor::new("a2", Role::Annotator), id).unwrap_err();
        assert_eq!(err.status(), 403);
        s.delete_annotation(&Actor::new("c", Role::Curator), id).unwrap();
        let err = s.delete_annotation(&annotator(), id).unwrap_err();
        assert_eq!(err.status(), 404);
    }

    #[test]
    fn stats_shape() {
        let v = service().stats();
        assert_eq!(v["nodes"], 8);
        assert_eq!(v["edges"], 7);
        assert_eq!(v["corpus"]["lines"], 27);
        assert_eq!(v["pending"], 0);
    }

    #[test]
    fn first_corpus_import_replaces_fixtures() {
        let mut s = Service::in_memory(fixtures::store());
        s.fixture_corpus = true;
        let admin = Actor::new("root", Role::Admin);
        let v = s.import_corpus(&admin, fixtures::ANNOTATED_LINES_JSONL).unwrap();
        assert_eq!(v["corpus"]["lines"], v["imported"]["lines"]);
        let err = s.import_corpus(&admin, fixtures::ANNOTATED_LINES_JSONL).unwrap_err();
        assert_eq!(err.kind(), "corpus");
    }
}
