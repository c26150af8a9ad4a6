//! In-memory property graph: one node per lemma, typed directed edges that are
//! unique per (src, dst, relation type, detail), and provenance sets on both.
//!
//! Two side tables live next to the graph proper. Conflict claims keep every
//! entity type a lemma was annotated with, so disagreements reach curation
//! instead of being overwritten. Pending edges hold relations whose endpoints
//! have no node yet; they become real edges once both endpoints exist.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::LineId;
use crate::ontology::{Ontology, OntologyError};

pub type NodeId = u64;
pub type EdgeId = u64;
pub type PendingId = u64;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error(transparent)]
    UnknownType(#[from] OntologyError),
    #[error("{lemma:?} cannot be related to itself by {relation_type:?}")]
    SelfLoop { lemma: String, relation_type: String },
    #[error("no node {0}")]
    NoSuchNode(String),
    #[error("no edge {0}")]
    NoSuchEdge(EdgeId),
    #[error("malformed graph document: {0}")]
    Parse(String),
    #[error("graph document does not match the ontology: {0}")]
    OntologyMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityNode {
    pub node_id: NodeId,
    pub lemma: String,
    pub entity_type: String,
    pub unnamed: bool,
    pub line_ids: BTreeSet<LineId>,
    pub annotators: BTreeSet<String>,
    pub canonical_of: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub edge_id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub relation_type: String,
    pub detail: Option<String>,
    pub line_ids: BTreeSet<LineId>,
    pub annotators: BTreeSet<String>,
}

/// A relation waiting for one or both endpoint nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingEdge {
    pub id: PendingId,
    pub src: String,
    pub dst: String,
    pub relation_type: String,
    pub detail: Option<String>,
    pub line_ids: BTreeSet<LineId>,
    pub annotators: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub annotators: BTreeSet<String>,
    pub line_ids: BTreeSet<LineId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub by_entity_type: BTreeMap<String, usize>,
    pub by_relation_type: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
    Both,
}

/// Result of [`Graph::upsert_edge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "id", rename_all = "snake_case")]
pub enum EdgeOutcome {
    Edge(EdgeId),
    Pending(PendingId),
}

type EdgeKey = (NodeId, NodeId, String, Option<String>);
type PendingKey = (String, String, String, Option<String>);

/// Serialized form of a graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<EntityNode>,
    pub edges: Vec<RelationEdge>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pending: Vec<PendingEdge>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub conflicts: BTreeMap<String, BTreeMap<String, Claim>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub resolutions: BTreeMap<String, String>,
}

/// `X{n}-{line_id}`.
pub fn unnamed_lemma(ordinal: u32, line_id: LineId) -> String {
    format!("X{ordinal}-{line_id}")
}

/// Parses an unnamed-entity identifier into `(ordinal, line_id)`.
pub fn parse_unnamed(lemma: &str) -> Option<(u32, LineId)> {
    let rest = lemma.strip_prefix('X')?;
    let (n, line) = rest.split_once('-')?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(n) || !digits(line) || n.starts_with('0') {
        return None;
    }
    Some((n.parse().ok()?, line.parse().ok()?))
}

#[derive(Debug, Clone)]
pub struct Graph {
    ontology: Arc<Ontology>,
    nodes: BTreeMap<NodeId, EntityNode>,
    by_lemma: HashMap<String, NodeId>,
    edges: BTreeMap<EdgeId, RelationEdge>,
    edge_keys: HashMap<EdgeKey, EdgeId>,
    out_adj: HashMap<NodeId, BTreeSet<EdgeId>>,
    in_adj: HashMap<NodeId, BTreeSet<EdgeId>>,
    pending: BTreeMap<PendingId, PendingEdge>,
    pending_keys: HashMap<PendingKey, PendingId>,
    claims: BTreeMap<String, BTreeMap<String, Claim>>,
    resolutions: BTreeMap<String, String>,
    next_node: NodeId,
    next_edge: EdgeId,
    next_pending: PendingId,
}

/// Graphs are equal when their contents are; lookup indexes and the id
/// counters are not compared.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.ontology == other.ontology
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.pending == other.pending
            && self.claims == other.claims
            && self.resolutions == other.resolutions
    }
}

impl Graph {
    pub fn new(ontology: Arc<Ontology>) -> Self {
        Graph {
            ontology,
            nodes: BTreeMap::new(),
            by_lemma: HashMap::new(),
            edges: BTreeMap::new(),
            edge_keys: HashMap::new(),
            out_adj: HashMap::new(),
            in_adj: HashMap::new(),
            pending: BTreeMap::new(),
            pending_keys: HashMap::new(),
            claims: BTreeMap::new(),
            resolutions: BTreeMap::new(),
            next_node: 1,
            next_edge: 1,
            next_pending: 1,
        }
    }

    pub fn ontology(&self) -> &Arc<Ontology> {
        &self.ontology
    }

    /// Creates the node for `lemma` or adds provenance to it. A type that
    /// differs from the node's is recorded as a competing claim, not applied.
    pub fn upsert_node(
        &mut self,
        lemma: &str,
        entity_type: &str,
        line_id: LineId,
        annotator: &str,
    ) -> Result<NodeId, GraphError> {
        let entity_type = self.ontology.resolve_entity_type(entity_type)?.name.clone();
        if lemma.is_empty() {
            return Err(GraphError::NoSuchNode(String::new()));
        }
        let claim = self
            .claims
            .entry(lemma.to_string())
            .or_default()
            .entry(entity_type.clone())
            .or_default();
        claim.annotators.insert(annotator.to_string());
        claim.line_ids.insert(line_id);

        if let Some(&id) = self.by_lemma.get(lemma) {
            let node = self.nodes.get_mut(&id).expect("indexed node exists");
            node.line_ids.insert(line_id);
            node.annotators.insert(annotator.to_string());
            return Ok(id);
        }
        let id = self.next_node;
        self.next_node += 1;
        self.nodes.insert(
            id,
            EntityNode {
                node_id: id,
                lemma: lemma.to_string(),
                entity_type,
                unnamed: parse_unnamed(lemma).is_some(),
                line_ids: BTreeSet::from([line_id]),
                annotators: BTreeSet::from([annotator.to_string()]),
                canonical_of: None,
            },
        );
        self.by_lemma.insert(lemma.to_string(), id);
        self.materialize_pending(lemma);
        Ok(id)
    }

    /// Adds a relation between two lemmas. When either lemma has no node the
    /// relation is parked as pending and materialized later.
    pub fn upsert_edge(
        &mut self,
        src_lemma: &str,
        relation_type: &str,
        dst_lemma: &str,
        detail: Option<&str>,
        line_id: LineId,
        annotator: &str,
    ) -> Result<EdgeOutcome, GraphError> {
        let relation_type = self.ontology.resolve_relation_type(relation_type)?.name.clone();
        if src_lemma == dst_lemma {
            return Err(GraphError::SelfLoop {
                lemma: src_lemma.to_string(),
                relation_type,
            });
        }
        let detail = normalize_detail(detail);
        let line_ids = BTreeSet::from([line_id]);
        let annotators = BTreeSet::from([annotator.to_string()]);
        match (self.node_id(src_lemma), self.node_id(dst_lemma)) {
            (Some(src), Some(dst)) => Ok(EdgeOutcome::Edge(self.merge_edge(
                src,
                dst,
                &relation_type,
                detail,
                &line_ids,
                &annotators,
            ))),
            _ => {
                let key = (
                    src_lemma.to_string(),
                    dst_lemma.to_string(),
                    relation_type.clone(),
                    detail.clone(),
                );
                let id = match self.pending_keys.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = self.next_pending;
                        self.next_pending += 1;
                        self.pending_keys.insert(key, id);
                        self.pending.insert(
                            id,
                            PendingEdge {
                                id,
                                src: src_lemma.to_string(),
                                dst: dst_lemma.to_string(),
                                relation_type,
                                detail,
                                line_ids: BTreeSet::new(),
                                annotators: BTreeSet::new(),
                            },
                        );
                        id
                    }
                };
                let p = self.pending.get_mut(&id).expect("pending exists");
                p.line_ids.insert(line_id);
                p.annotators.insert(annotator.to_string());
                Ok(EdgeOutcome::Pending(id))
            }
        }
    }

    fn materialize_pending(&mut self, lemma: &str) {
        let ready: Vec<PendingId> = self
            .pending
            .values()
            .filter(|p| p.src == lemma || p.dst == lemma)
            .filter(|p| self.by_lemma.contains_key(&p.src) && self.by_lemma.contains_key(&p.dst))
            .map(|p| p.id)
            .collect();
        for id in ready {
            let p = self.pending.remove(&id).expect("pending exists");
            self.pending_keys.remove(&(
                p.src.clone(),
                p.dst.clone(),
                p.relation_type.clone(),
                p.detail.clone(),
            ));
            let (src, dst) = (self.by_lemma[&p.src], self.by_lemma[&p.dst]);
            self.merge_edge(src, dst, &p.relation_type, p.detail, &p.line_ids, &p.annotators);
        }
    }

    /// Creates the edge or unions provenance into the existing one with the
    /// same key. `relation_type` must already be a canonical label.
    pub(crate) fn merge_edge(
        &mut self,
        src: NodeId,
        dst: NodeId,
        relation_type: &str,
        detail: Option<String>,
        line_ids: &BTreeSet<LineId>,
        annotators: &BTreeSet<String>,
    ) -> EdgeId {
        let key = (src, dst, relation_type.to_string(), detail);
        if let Some(&id) = self.edge_keys.get(&key) {
            let e = self.edges.get_mut(&id).expect("indexed edge exists");
            e.line_ids.extend(line_ids.iter().copied());
            e.annotators.extend(annotators.iter().cloned());
            return id;
        }
        let id = self.next_edge;
        self.attach_edge(RelationEdge {
            edge_id: id,
            src,
            dst,
            relation_type: key.2,
            detail: key.3,
            line_ids: line_ids.clone(),
            annotators: annotators.clone(),
        });
        id
    }

    /// Inserts a fully formed edge, keeping its id. The caller guarantees the
    /// key and id are free.
    pub(crate) fn attach_edge(&mut self, edge: RelationEdge) {
        let key = (edge.src, edge.dst, edge.relation_type.clone(), edge.detail.clone());
        debug_assert!(!self.edge_keys.contains_key(&key));
        self.edge_keys.insert(key, edge.edge_id);
        self.out_adj.entry(edge.src).or_default().insert(edge.edge_id);
        self.in_adj.entry(edge.dst).or_default().insert(edge.edge_id);
        self.next_edge = self.next_edge.max(edge.edge_id + 1);
        self.edges.insert(edge.edge_id, edge);
    }

    pub(crate) fn remove_edge(&mut self, id: EdgeId) -> Result<RelationEdge, GraphError> {
        let edge = self.edges.remove(&id).ok_or(GraphError::NoSuchEdge(id))?;
        self.edge_keys.remove(&(
            edge.src,
            edge.dst,
            edge.relation_type.clone(),
            edge.detail.clone(),
        ));
        for (adj, node) in [(&mut self.out_adj, edge.src), (&mut self.in_adj, edge.dst)] {
            if let Some(s) = adj.get_mut(&node) {
                s.remove(&id);
                if s.is_empty() {
                    adj.remove(&node);
                }
            }
        }
        Ok(edge)
    }

    pub(crate) fn set_canonical_of(&mut self, node: NodeId, canonical: Option<NodeId>) {
        if let Some(n) = self.nodes.get_mut(&node) {
            n.canonical_of = canonical;
        }
    }

    pub fn find_edge(
        &self,
        src: NodeId,
        dst: NodeId,
        relation_type: &str,
        detail: Option<&str>,
    ) -> Option<EdgeId> {
        self.edge_keys
            .get(&(src, dst, relation_type.to_string(), detail.map(str::to_string)))
            .copied()
    }

    pub fn node(&self, id: NodeId) -> Option<&EntityNode> {
        self.nodes.get(&id)
    }

    pub fn node_id(&self, lemma: &str) -> Option<NodeId> {
        self.by_lemma.get(lemma).copied()
    }

    pub fn node_by_lemma(&self, lemma: &str) -> Option<&EntityNode> {
        self.node_id(lemma).and_then(|id| self.nodes.get(&id))
    }

    pub fn edge(&self, id: EdgeId) -> Option<&RelationEdge> {
        self.edges.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &EntityNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &RelationEdge> {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingEdge> {
        self.pending.values()
    }

    /// Every entity type each lemma was annotated with.
    pub fn claims(&self) -> &BTreeMap<String, BTreeMap<String, Claim>> {
        &self.claims
    }

    pub fn resolutions(&self) -> &BTreeMap<String, String> {
        &self.resolutions
    }

    /// Records the curators' decision for a lemma's type and retypes its node.
    pub fn resolve_type(&mut self, lemma: &str, entity_type: &str) -> Result<(), GraphError> {
        let entity_type = self.ontology.resolve_entity_type(entity_type)?.name.clone();
        let id = self
            .node_id(lemma)
            .ok_or_else(|| GraphError::NoSuchNode(lemma.to_string()))?;
        self.nodes.get_mut(&id).expect("node exists").entity_type = entity_type.clone();
        self.resolutions.insert(lemma.to_string(), entity_type);
        Ok(())
    }

    pub fn out_edges(&self, node: NodeId) -> impl Iterator<Item = &RelationEdge> {
        self.out_adj
            .get(&node)
            .into_iter()
            .flatten()
            .map(|id| &self.edges[id])
    }

    pub fn in_edges(&self, node: NodeId) -> impl Iterator<Item = &RelationEdge> {
        self.in_adj
            .get(&node)
            .into_iter()
            .flatten()
            .map(|id| &self.edges[id])
    }

    /// Incident edges with the node at the other end, ordered by relation
    /// type, neighbor lemma, then edge id.
    pub fn neighbors(
        &self,
        node: NodeId,
        relation_type: Option<&str>,
        direction: Direction,
    ) -> Result<Vec<(&RelationEdge, &EntityNode)>, GraphError> {
        if !self.nodes.contains_key(&node) {
            return Err(GraphError::NoSuchNode(node.to_string()));
        }
        let relation_type = match relation_type {
            Some(r) => Some(self.ontology.resolve_relation_type(r)?.name.as_str()),
            None => None,
        };
        let mut out: Vec<(&RelationEdge, &EntityNode)> = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            out.extend(self.out_edges(node).map(|e| (e, &self.nodes[&e.dst])));
        }
        if matches!(direction, Direction::In | Direction::Both) {
            out.extend(self.in_edges(node).map(|e| (e, &self.nodes[&e.src])));
        }
        out.retain(|(e, _)| relation_type.is_none_or(|r| e.relation_type == r));
        out.sort_by(|(ea, na), (eb, nb)| {
            (&ea.relation_type, &na.lemma, ea.edge_id).cmp(&(&eb.relation_type, &nb.lemma, eb.edge_id))
        });
        Ok(out)
    }

    pub fn degree(&self, node: NodeId) -> Result<usize, GraphError> {
        if !self.nodes.contains_key(&node) {
            return Err(GraphError::NoSuchNode(node.to_string()));
        }
        let count = |adj: &HashMap<NodeId, BTreeSet<EdgeId>>| adj.get(&node).map_or(0, |s| s.len());
        Ok(count(&self.out_adj) + count(&self.in_adj))
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats {
            nodes: self.nodes.len(),
            edges: self.edges.len(),
            ..Default::default()
        };
        for n in self.nodes.values() {
            *stats.by_entity_type.entry(n.entity_type.clone()).or_default() += 1;
        }
        for e in self.edges.values() {
            *stats.by_relation_type.entry(e.relation_type.clone()).or_default() += 1;
        }
        stats
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.values().cloned().collect(),
            pending: self.pending.values().cloned().collect(),
            conflicts: self.claims.clone(),
            resolutions: self.resolutions.clone(),
        }
    }

    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph serializes")
    }

    pub fn import_json(ontology: Arc<Ontology>, source: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument =
            serde_json::from_str(source).map_err(|e| GraphError::Parse(e.to_string()))?;
        Self::from_document(ontology, doc)
    }

    /// Rebuilds a graph with the document's ids. Types must be known to the
    /// ontology; structure must satisfy the graph invariants.
    pub fn from_document(ontology: Arc<Ontology>, doc: GraphDocument) -> Result<Self, GraphError> {
        let mut g = Graph::new(ontology);
        let mismatch = |e: OntologyError| GraphError::OntologyMismatch(e.to_string());
        let parse = |m: String| GraphError::Parse(m);
        for mut n in doc.nodes {
            n.entity_type = g.ontology.resolve_entity_type(&n.entity_type).map_err(mismatch)?.name.clone();
            if n.lemma.is_empty() {
                return Err(parse(format!("node {} has an empty lemma", n.node_id)));
            }
            if n.unnamed != parse_unnamed(&n.lemma).is_some() {
                return Err(parse(format!("node {} has a wrong unnamed flag", n.node_id)));
            }
            if g.nodes.contains_key(&n.node_id) {
                return Err(parse(format!("duplicate node id {}", n.node_id)));
            }
            if g.by_lemma.insert(n.lemma.clone(), n.node_id).is_some() {
                return Err(parse(format!("duplicate lemma {:?}", n.lemma)));
            }
            g.next_node = g.next_node.max(n.node_id + 1);
            g.nodes.insert(n.node_id, n);
        }
        if let Some(n) = g.nodes.values().find(|n| n.canonical_of.is_some_and(|c| !g.nodes.contains_key(&c))) {
            return Err(parse(format!("node {} points to a missing canonical node", n.node_id)));
        }
        for mut e in doc.edges {
            e.relation_type = g.ontology.resolve_relation_type(&e.relation_type).map_err(mismatch)?.name.clone();
            e.detail = normalize_detail(e.detail.as_deref());
            if !g.nodes.contains_key(&e.src) || !g.nodes.contains_key(&e.dst) {
                return Err(parse(format!("edge {} has a missing endpoint", e.edge_id)));
            }
            if e.src == e.dst {
                return Err(parse(format!("edge {} is a self-loop", e.edge_id)));
            }
            if g.edges.contains_key(&e.edge_id) {
                return Err(parse(format!("duplicate edge id {}", e.edge_id)));
            }
            if g.find_edge(e.src, e.dst, &e.relation_type, e.detail.as_deref()).is_some() {
                return Err(parse(format!("edge {} duplicates another edge", e.edge_id)));
            }
            g.attach_edge(e);
        }
        for mut p in doc.pending {
            p.relation_type = g.ontology.resolve_relation_type(&p.relation_type).map_err(mismatch)?.name.clone();
            let key = (p.src.clone(), p.dst.clone(), p.relation_type.clone(), p.detail.clone());
            if g.pending.contains_key(&p.id) || g.pending_keys.insert(key, p.id).is_some() {
                return Err(parse(format!("duplicate pending edge {}", p.id)));
            }
            g.next_pending = g.next_pending.max(p.id + 1);
            g.pending.insert(p.id, p);
        }
        for (lemma, by_type) in doc.conflicts {
            let entry = g.claims.entry(lemma).or_default();
            for (t, claim) in by_type {
                let t = g.ontology.resolve_entity_type(&t).map_err(mismatch)?.name.clone();
                entry.insert(t, claim);
            }
        }
        for (lemma, t) in doc.resolutions {
            let t = g.ontology.resolve_entity_type(&t).map_err(mismatch)?.name.clone();
            g.resolutions.insert(lemma, t);
        }
        Ok(g)
    }
}

fn normalize_detail(detail: Option<&str>) -> Option<String> {
    detail.map(str::trim).filter(|d| !d.is_empty()).map(str::to_string)
}
