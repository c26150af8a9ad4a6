//! Annotation log and its materialized graph.
//!
//! Every change (entity and relation annotations, deletions, curation actions)
//! is appended to a log; the graph is whatever replaying that log over the
//! base graph produces. Deleting an annotation appends a deletion and rebuilds,
//! so provenance is always exactly what the surviving annotations say.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LineId};
use crate::curation::{self, CurationPass, CurationReport};
use crate::graph::{unnamed_lemma, EdgeId, EdgeOutcome, Graph, GraphError, NodeId};
use crate::ontology::{Ontology, OntologyError, TypeKind};
use crate::transliteration::TransliterationIndex;

pub type AnnotationId = u64;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("no line {0} in the corpus")]
    NoSuchLine(LineId),
    #[error(transparent)]
    UnknownType(#[from] OntologyError),
    #[error("annotator {annotator:?} already used unnamed ordinal {ordinal} on line {line_id}")]
    DuplicateUnnamedOrdinal {
        line_id: LineId,
        annotator: String,
        ordinal: u32,
    },
    #[error("{lemma:?} cannot be related to itself")]
    SelfLoop { lemma: String },
    #[error("entity annotation needs a lemma or an unnamed ordinal")]
    MissingLemma,
    #[error("no annotation {0}")]
    NoSuchAnnotation(AnnotationId),
    #[error("{user:?} may not delete annotation {id}")]
    Permission { id: AnnotationId, user: String },
    #[error("annotation log record {index}: {message}")]
    Parse { index: usize, message: String },
    #[error(transparent)]
    Graph(GraphError),
}

impl From<GraphError> for AnnotationError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::UnknownType(o) => AnnotationError::UnknownType(o),
            GraphError::SelfLoop { lemma, .. } => AnnotationError::SelfLoop { lemma },
            other => AnnotationError::Graph(other),
        }
    }
}

/// Input for [`AnnotationStore::annotate_entity`]. With `unnamed_ordinal`
/// set, `lemma` is ignored and the identifier `X{n}-{line_id}` is used.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewEntity {
    pub line_id: LineId,
    #[serde(default)]
    pub lemma: Option<String>,
    #[serde(default)]
    pub unnamed_ordinal: Option<u32>,
    pub entity_type: String,
    #[serde(default)]
    pub annotator: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewRelation {
    pub line_id: LineId,
    pub src: String,
    pub relation_type: String,
    pub dst: String,
    #[serde(default)]
    pub detail: Option<String>,
    #[serde(default)]
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "EntityRecord", into = "EntityRecord")]
pub struct EntityAnnotation {
    pub id: AnnotationId,
    pub line_id: LineId,
    pub lemma: String,
    pub unnamed_ordinal: Option<u32>,
    pub entity_type: String,
    pub annotator: String,
    pub ts: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
struct EntityRecord {
    id: AnnotationId,
    line_id: LineId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unnamed_ordinal: Option<u32>,
    entity_type: String,
    annotator: String,
    ts: DateTime<Utc>,
}

impl TryFrom<EntityRecord> for EntityAnnotation {
    type Error = String;

    fn try_from(r: EntityRecord) -> Result<Self, String> {
        let lemma = match (r.unnamed_ordinal, r.lemma) {
            (Some(0), _) => return Err("unnamed_ordinal must be positive".into()),
            (Some(n), _) => unnamed_lemma(n, r.line_id),
            (None, Some(l)) if !l.is_empty() => l,
            _ => return Err("entity record needs lemma or unnamed_ordinal".into()),
        };
        Ok(EntityAnnotation {
            id: r.id,
            line_id: r.line_id,
            lemma,
            unnamed_ordinal: r.unnamed_ordinal,
            entity_type: r.entity_type,
            annotator: r.annotator,
            ts: r.ts,
        })
    }
}

impl From<EntityAnnotation> for EntityRecord {
    fn from(a: EntityAnnotation) -> Self {
        EntityRecord {
            id: a.id,
            line_id: a.line_id,
            lemma: a.unnamed_ordinal.is_none().then_some(a.lemma),
            unnamed_ordinal: a.unnamed_ordinal,
            entity_type: a.entity_type,
            annotator: a.annotator,
            ts: a.ts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationAnnotation {
    pub id: AnnotationId,
    pub line_id: LineId,
    pub src: String,
    pub relation_type: String,
    pub dst: String,
    pub detail: Option<String>,
    pub annotator: String,
    pub ts: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum CurationAction {
    Link { a: String, b: String },
    Infer,
    Canonicalize,
    Resolve { lemma: String, entity_type: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Entity(EntityAnnotation),
    Relation(RelationAnnotation),
    Delete {
        id: AnnotationId,
        target: AnnotationId,
        annotator: String,
        ts: DateTime<Utc>,
    },
    Curation {
        id: AnnotationId,
        #[serde(flatten)]
        action: CurationAction,
        curator: String,
        ts: DateTime<Utc>,
    },
}

impl LogRecord {
    pub fn id(&self) -> AnnotationId {
        match self {
            LogRecord::Entity(a) => a.id,
            LogRecord::Relation(r) => r.id,
            LogRecord::Delete { id, .. } | LogRecord::Curation { id, .. } => *id,
        }
    }
}

/// An annotation whose types no longer resolve under a candidate ontology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MigrationIssue {
    pub annotation_id: AnnotationId,
    pub kind: TypeKind,
    pub type_name: String,
    pub suggestion: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AnnotationStore {
    ontology: Arc<Ontology>,
    corpus: Corpus,
    base: Graph,
    log: Vec<LogRecord>,
    deleted: HashSet<AnnotationId>,
    graph: Graph,
    index: TransliterationIndex,
    next_id: AnnotationId,
    version: u64,
}

impl AnnotationStore {
    pub fn new(ontology: Arc<Ontology>, corpus: Corpus) -> Self {
        let base = Graph::new(ontology.clone());
        Self::with_base(corpus, base)
    }

    /// Starts from an imported graph; annotations are applied on top of it.
    pub fn with_base(corpus: Corpus, base: Graph) -> Self {
        let mut store = AnnotationStore {
            ontology: base.ontology().clone(),
            corpus,
            graph: base.clone(),
            base,
            log: Vec::new(),
            deleted: HashSet::new(),
            index: TransliterationIndex::new(),
            next_id: 1,
            version: 0,
        };
        store.reindex();
        store
    }

    pub fn ontology(&self) -> &Arc<Ontology> {
        &self.ontology
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn index(&self) -> &TransliterationIndex {
        &self.index
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    /// Bumped by every successful mutation.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn import_corpus(&mut self, source: &str) -> Result<crate::corpus::CorpusStats, crate::corpus::CorpusError> {
        let stats = self.corpus.import(source)?;
        self.version += 1;
        Ok(stats)
    }

    /// Replaces the base graph and replays the log over it.
    pub fn replace_base(&mut self, base: Graph) -> Result<(), AnnotationError> {
        let graph = replay(&base, &self.log)?;
        self.base = base;
        self.graph = graph;
        self.reindex();
        self.version += 1;
        Ok(())
    }

    fn take_id(&mut self) -> AnnotationId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn check_line(&self, line_id: LineId) -> Result<(), AnnotationError> {
        if self.corpus.contains(line_id) {
            Ok(())
        } else {
            Err(AnnotationError::NoSuchLine(line_id))
        }
    }

    fn live_entities(&self) -> impl Iterator<Item = &EntityAnnotation> {
        self.log.iter().filter_map(|r| match r {
            LogRecord::Entity(a) if !self.deleted.contains(&a.id) => Some(a),
            _ => None,
        })
    }

    fn live_relations(&self) -> impl Iterator<Item = &RelationAnnotation> {
        self.log.iter().filter_map(|r| match r {
            LogRecord::Relation(a) if !self.deleted.contains(&a.id) => Some(a),
            _ => None,
        })
    }

    pub fn annotate_entity(&mut self, input: NewEntity) -> Result<(AnnotationId, NodeId), AnnotationError> {
        self.check_line(input.line_id)?;
        let entity_type = self.ontology.resolve_entity_type(&input.entity_type)?.name.clone();
        let lemma = match input.unnamed_ordinal {
            Some(0) => return Err(AnnotationError::MissingLemma),
            Some(n) => {
                let taken = self.live_entities().any(|a| {
                    a.line_id == input.line_id && a.annotator == input.annotator && a.unnamed_ordinal == Some(n)
                });
                if taken {
                    return Err(AnnotationError::DuplicateUnnamedOrdinal {
                        line_id: input.line_id,
                        annotator: input.annotator,
                        ordinal: n,
                    });
                }
                unnamed_lemma(n, input.line_id)
            }
            None => match input.lemma.as_deref().map(str::trim) {
                Some(l) if !l.is_empty() => l.to_string(),
                _ => return Err(AnnotationError::MissingLemma),
            },
        };
        let record = EntityAnnotation {
            id: self.take_id(),
            line_id: input.line_id,
            lemma,
            unnamed_ordinal: input.unnamed_ordinal,
            entity_type,
            annotator: input.annotator,
            ts: Utc::now(),
        };
        let node = apply_entity(&mut self.graph, &record)?;
        self.index_node_lemmas();
        let id = record.id;
        self.log.push(LogRecord::Entity(record));
        self.version += 1;
        Ok((id, node))
    }

    pub fn annotate_relation(&mut self, input: NewRelation) -> Result<(AnnotationId, EdgeOutcome), AnnotationError> {
        self.check_line(input.line_id)?;
        let relation_type = self.ontology.resolve_relation_type(&input.relation_type)?.name.clone();
        let (src, dst) = (input.src.trim().to_string(), input.dst.trim().to_string());
        if src.is_empty() || dst.is_empty() {
            return Err(AnnotationError::MissingLemma);
        }
        if src == dst {
            return Err(AnnotationError::SelfLoop { lemma: src });
        }
        let record = RelationAnnotation {
            id: self.take_id(),
            line_id: input.line_id,
            src,
            relation_type,
            dst,
            detail: input.detail.map(|d| d.trim().to_string()).filter(|d| !d.is_empty()),
            annotator: input.annotator,
            ts: Utc::now(),
        };
        let outcome = apply_relation(&mut self.graph, &record)?;
        let id = record.id;
        self.log.push(LogRecord::Relation(record));
        self.version += 1;
        Ok((id, outcome))
    }

    /// Live annotations on a line, each list ordered by timestamp then id.
    pub fn list_annotations(&self, line_id: LineId) -> (Vec<&EntityAnnotation>, Vec<&RelationAnnotation>) {
        let mut entities: Vec<_> = self.live_entities().filter(|a| a.line_id == line_id).collect();
        entities.sort_by_key(|a| (a.ts, a.id));
        let mut relations: Vec<_> = self.live_relations().filter(|a| a.line_id == line_id).collect();
        relations.sort_by_key(|a| (a.ts, a.id));
        (entities, relations)
    }

    /// Removes an annotation. Only its author or a curator may do this.
    pub fn delete_annotation(&mut self, id: AnnotationId, user: &str, is_curator: bool) -> Result<(), AnnotationError> {
        let owner = self
            .live_entities()
            .find(|a| a.id == id)
            .map(|a| a.annotator.clone())
            .or_else(|| self.live_relations().find(|a| a.id == id).map(|a| a.annotator.clone()))
            .ok_or(AnnotationError::NoSuchAnnotation(id))?;
        if owner != user && !is_curator {
            return Err(AnnotationError::Permission {
                id,
                user: user.to_string(),
            });
        }
        let record = LogRecord::Delete {
            id: self.take_id(),
            target: id,
            annotator: user.to_string(),
            ts: Utc::now(),
        };
        self.log.push(record);
        self.deleted.insert(id);
        self.rebuild()
    }

    fn rebuild(&mut self) -> Result<(), AnnotationError> {
        self.graph = replay(&self.base, &self.log)?;
        self.reindex();
        self.version += 1;
        Ok(())
    }

    fn reindex(&mut self) {
        self.index = TransliterationIndex::new();
        self.index_node_lemmas();
    }

    fn index_node_lemmas(&mut self) {
        for n in self.graph.nodes().filter(|n| !n.unnamed) {
            self.index.index_lemma(&n.lemma);
        }
    }

    fn push_curation(&mut self, action: CurationAction, curator: &str) {
        let record = LogRecord::Curation {
            id: self.take_id(),
            action,
            curator: curator.to_string(),
            ts: Utc::now(),
        };
        self.log.push(record);
        self.index_node_lemmas();
        self.version += 1;
    }

    pub fn link_equivalent(&mut self, a: &str, b: &str, curator: &str) -> Result<EdgeId, AnnotationError> {
        let id = curation::link_equivalent(&mut self.graph, a, b, curator)?;
        self.push_curation(
            CurationAction::Link {
                a: a.to_string(),
                b: b.to_string(),
            },
            curator,
        );
        Ok(id)
    }

    pub fn resolve_conflict(&mut self, lemma: &str, entity_type: &str, curator: &str) -> Result<(), AnnotationError> {
        let entity_type = self.ontology.resolve_entity_type(entity_type)?.name.clone();
        self.graph.resolve_type(lemma, &entity_type)?;
        self.push_curation(
            CurationAction::Resolve {
                lemma: lemma.to_string(),
                entity_type,
            },
            curator,
        );
        Ok(())
    }

    /// Runs curation passes. A dry run reports without touching the graph or
    /// the log.
    pub fn curate(&mut self, pass: CurationPass, curator: &str, dry_run: bool) -> CurationReport {
        let report = curation::run_curation(&mut self.graph, pass, curator, dry_run);
        if !dry_run {
            if matches!(pass, CurationPass::Infer | CurationPass::All) {
                self.push_curation(CurationAction::Infer, curator);
            }
            if matches!(pass, CurationPass::Canonicalize | CurationPass::All) {
                self.push_curation(CurationAction::Canonicalize, curator);
            }
        }
        report
    }

    /// The log as JSON Lines.
    pub fn export_log(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Appends a JSON Lines log (as written by [`export_log`](Self::export_log))
    /// and replays it. All records are validated first; on error nothing changes.
    /// Record ids are kept when they are free and renumbered otherwise.
    pub fn import_log(&mut self, source: &str) -> Result<usize, AnnotationError> {
        let mut records = Vec::new();
        for (index, raw) in source.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let record: LogRecord = serde_json::from_str(raw).map_err(|e| AnnotationError::Parse {
                index,
                message: e.to_string(),
            })?;
            records.push((index, record));
        }
        let mut staged = self.clone();
        let mut renumber = std::collections::HashMap::new();
        let used: BTreeSet<AnnotationId> = self.log.iter().map(LogRecord::id).collect();
        let mut count = 0;
        for (index, mut record) in records {
            let old = record.id();
            let new = if used.contains(&old) || old < staged.next_id { staged.take_id() } else { old };
            staged.next_id = staged.next_id.max(new + 1);
            renumber.insert(old, new);
            let parse = |message: String| AnnotationError::Parse { index, message };
            match &mut record {
                LogRecord::Entity(a) => {
                    a.id = new;
                    staged.check_line(a.line_id)?;
                    a.entity_type = staged.ontology.resolve_entity_type(&a.entity_type)?.name.clone();
                    apply_entity(&mut staged.graph, a)?;
                }
                LogRecord::Relation(r) => {
                    r.id = new;
                    staged.check_line(r.line_id)?;
                    r.relation_type = staged.ontology.resolve_relation_type(&r.relation_type)?.name.clone();
                    apply_relation(&mut staged.graph, r)?;
                }
                LogRecord::Delete { id, target, .. } => {
                    *id = new;
                    *target = *renumber
                        .get(target)
                        .ok_or_else(|| parse(format!("delete of unknown record {target}")))?;
                    staged.deleted.insert(*target);
                }
                LogRecord::Curation { id, action, curator, .. } => {
                    *id = new;
                    apply_curation(&mut staged.graph, action, curator);
                }
            }
            staged.log.push(record);
            count += 1;
        }
        staged.graph = replay(&staged.base, &staged.log)?;
        staged.reindex();
        staged.version += 1;
        *self = staged;
        Ok(count)
    }

    /// Lists live annotations whose types do not resolve in `candidate`.
    pub fn migration_report(&self, candidate: &Ontology) -> Vec<MigrationIssue> {
        let issue = |id, e: OntologyError| match e {
            OntologyError::UnknownType { kind, name, suggestion } => Some(MigrationIssue {
                annotation_id: id,
                kind,
                type_name: name,
                suggestion,
            }),
            _ => None,
        };
        let mut out: Vec<MigrationIssue> = self
            .live_entities()
            .filter_map(|a| candidate.resolve_entity_type(&a.entity_type).err().and_then(|e| issue(a.id, e)))
            .collect();
        out.extend(
            self.live_relations()
                .filter_map(|r| candidate.resolve_relation_type(&r.relation_type).err().and_then(|e| issue(r.id, e))),
        );
        out.sort_by_key(|i| i.annotation_id);
        out
    }
}

fn apply_entity(graph: &mut Graph, a: &EntityAnnotation) -> Result<NodeId, GraphError> {
    graph.upsert_node(&a.lemma, &a.entity_type, a.line_id, &a.annotator)
}

fn apply_relation(graph: &mut Graph, r: &RelationAnnotation) -> Result<EdgeOutcome, GraphError> {
    graph.upsert_edge(&r.src, &r.relation_type, &r.dst, r.detail.as_deref(), r.line_id, &r.annotator)
}

/// Curation actions are replayed best-effort: a link whose endpoints no longer
/// exist (because an annotation was deleted) does nothing.
fn apply_curation(graph: &mut Graph, action: &CurationAction, curator: &str) {
    match action {
        CurationAction::Link { a, b } => {
            let _ = curation::link_equivalent(graph, a, b, curator);
        }
        CurationAction::Infer => {
            curation::apply_inference_rules(graph, curator);
        }
        CurationAction::Canonicalize => {
            curation::canonicalize_synonyms(graph);
        }
        CurationAction::Resolve { lemma, entity_type } => {
            let _ = graph.resolve_type(lemma, entity_type);
        }
    }
}

/// Materializes `log` over `base`, skipping deleted annotations.
pub fn replay(base: &Graph, log: &[LogRecord]) -> Result<Graph, AnnotationError> {
    let deleted: HashSet<AnnotationId> = log
        .iter()
        .filter_map(|r| match r {
            LogRecord::Delete { target, .. } => Some(*target),
            _ => None,
        })
        .collect();
    let mut graph = base.clone();
    for record in log {
        if deleted.contains(&record.id()) {
            continue;
        }
        match record {
            LogRecord::Entity(a) => {
                apply_entity(&mut graph, a)?;
            }
            LogRecord::Relation(r) => {
                apply_relation(&mut graph, r)?;
            }
            LogRecord::Delete { .. } => {}
            LogRecord::Curation { action, curator, .. } => apply_curation(&mut graph, action, curator),
        }
    }
    Ok(graph)
}
