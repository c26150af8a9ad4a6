//! Backtracking pattern matcher.
//!
//! Node terms map to slots (one per named variable, one per anonymous term).
//! Each pattern is matched from a seed slot, preferring one that is already
//! bound, then one pinned by a lemma filter, then the rarest label, and then
//! extended along its edge terms in both directions.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::ast::*;
use super::QueryError;
use crate::graph::{EdgeId, EntityNode, Graph, NodeId, RelationEdge};

pub const DEFAULT_ROW_LIMIT: usize = 1000;
pub const DEFAULT_MATCH_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Rows returned after deduplication and sorting.
    pub max_rows: usize,
    /// Complete matches enumerated before the search gives up.
    pub max_matches: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_rows: DEFAULT_ROW_LIMIT,
            max_matches: DEFAULT_MATCH_BUDGET,
        }
    }
}

impl Limits {
    pub fn unbounded() -> Self {
        Limits {
            max_rows: usize::MAX,
            max_matches: usize::MAX,
        }
    }
}

/// One value in a result row. Field order gives the row ordering: nodes sort
/// by lemma, edges by source lemma, type and target lemma, paths by the lemmas
/// along them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cell {
    Node {
        lemma: String,
        entity_type: String,
        node_id: NodeId,
    },
    Edge {
        src_lemma: String,
        relation_type: String,
        dst_lemma: String,
        detail: Option<String>,
        edge_id: EdgeId,
        src: NodeId,
        dst: NodeId,
    },
    Path {
        lemmas: Vec<String>,
        nodes: Vec<NodeId>,
        edges: Vec<EdgeId>,
    },
    Text {
        value: String,
    },
    Null,
}

impl Cell {
    pub fn node(n: &EntityNode) -> Cell {
        Cell::Node {
            lemma: n.lemma.clone(),
            entity_type: n.entity_type.clone(),
            node_id: n.node_id,
        }
    }

    pub fn edge(graph: &Graph, e: &RelationEdge) -> Cell {
        let lemma = |id| graph.node(id).map(|n| n.lemma.clone()).unwrap_or_default();
        Cell::Edge {
            src_lemma: lemma(e.src),
            relation_type: e.relation_type.clone(),
            dst_lemma: lemma(e.dst),
            detail: e.detail.clone(),
            edge_id: e.edge_id,
            src: e.src,
            dst: e.dst,
        }
    }

    pub fn path(graph: &Graph, nodes: &[NodeId], edges: &[EdgeId]) -> Cell {
        Cell::Path {
            lemmas: nodes
                .iter()
                .map(|&id| graph.node(id).map(|n| n.lemma.clone()).unwrap_or_default())
                .collect(),
            nodes: nodes.to_vec(),
            edges: edges.to_vec(),
        }
    }

    pub fn text(s: &str) -> Cell {
        Cell::Text { value: s.to_string() }
    }

    /// Lemma of a node cell, text of a text cell.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Node { lemma, .. } => Some(lemma),
            Cell::Text { value } => Some(value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Subgraph {
    pub nodes: Vec<EntityNode>,
    pub edges: Vec<RelationEdge>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Nodes and edges appearing in the rows, including the endpoints of
    /// returned edges and everything along returned paths.
    pub subgraph: Subgraph,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
struct NodeSlot {
    labels: Vec<String>,
    lemma: Vec<String>,
    entity_type: Vec<String>,
    var: Option<String>,
}

#[derive(Debug, Clone)]
struct EdgeSlot {
    types: Option<BTreeSet<String>>,
    direction: EdgeDirection,
    hops: Option<HopRange>,
    relation_type: Vec<String>,
    detail: Vec<String>,
    var: Option<String>,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Seed(usize),
    Expand {
        edge: usize,
        from: usize,
        to: usize,
        /// true when walking the pattern right to left
        reversed: bool,
    },
}

#[derive(Debug, Clone)]
enum EdgeBinding {
    Edge(EdgeId),
    Path { nodes: Vec<NodeId>, edges: Vec<EdgeId> },
}

struct Plan {
    nodes: Vec<NodeSlot>,
    edges: Vec<EdgeSlot>,
    steps: Vec<Step>,
}

/// Written label and relation identifiers mapped to type names.
type TypeNames = HashMap<String, String>;

fn resolve_types(graph: &Graph, q: &Query) -> Result<(TypeNames, TypeNames), QueryError> {
    let onto = graph.ontology();
    let mut labels = HashMap::new();
    let mut rels = HashMap::new();
    for p in &q.patterns {
        for n in p.nodes() {
            if let Some(l) = &n.label {
                labels.insert(l.clone(), onto.resolve_entity_type(l)?.name.clone());
            }
        }
        for (e, _) in &p.steps {
            for t in &e.types {
                rels.insert(t.clone(), onto.resolve_relation_type(t)?.name.clone());
            }
        }
    }
    Ok((labels, rels))
}

fn plan(graph: &Graph, q: &Query) -> Result<Plan, QueryError> {
    super::parser::variable_kinds(q)?;
    let (labels, rels) = resolve_types(graph, q)?;
    let mut nodes: Vec<NodeSlot> = Vec::new();
    let mut edges: Vec<EdgeSlot> = Vec::new();
    let mut named: HashMap<String, usize> = HashMap::new();
    // per pattern: node slots and edge slots in order
    let mut shapes: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();

    let mut node_slot = |term: &NodeTerm, nodes: &mut Vec<NodeSlot>| -> usize {
        let idx = match &term.var {
            Some(v) => *named.entry(v.clone()).or_insert_with(|| {
                nodes.push(NodeSlot {
                    labels: Vec::new(),
                    lemma: Vec::new(),
                    entity_type: Vec::new(),
                    var: Some(v.clone()),
                });
                nodes.len() - 1
            }),
            None => {
                nodes.push(NodeSlot {
                    labels: Vec::new(),
                    lemma: Vec::new(),
                    entity_type: Vec::new(),
                    var: None,
                });
                nodes.len() - 1
            }
        };
        if let Some(l) = &term.label {
            nodes[idx].labels.push(labels[l].clone());
        }
        idx
    };
    for p in &q.patterns {
        let mut ns = vec![node_slot(&p.start, &mut nodes)];
        let mut es = Vec::new();
        for (e, n) in &p.steps {
            edges.push(EdgeSlot {
                types: (!e.types.is_empty()).then(|| e.types.iter().map(|t| rels[t].clone()).collect()),
                direction: e.direction,
                hops: e.hops,
                relation_type: Vec::new(),
                detail: Vec::new(),
                var: e.var.clone(),
            });
            es.push(edges.len() - 1);
            ns.push(node_slot(n, &mut nodes));
        }
        shapes.push((ns, es));
    }
    for f in &q.filters {
        match f.field {
            Field::Lemma | Field::EntityType => {
                let slot = &mut nodes[named[&f.var]];
                let list = if f.field == Field::Lemma { &mut slot.lemma } else { &mut slot.entity_type };
                list.push(f.value.clone());
            }
            Field::RelationType | Field::Detail => {
                let slot = edges
                    .iter_mut()
                    .find(|e| e.var.as_deref() == Some(f.var.as_str()))
                    .expect("validated edge variable");
                let list = if f.field == Field::RelationType { &mut slot.relation_type } else { &mut slot.detail };
                list.push(f.value.clone());
            }
        }
    }

    // order the patterns and pick seeds
    let label_count = graph.stats().by_entity_type;
    let cost = |slot: &NodeSlot, bound: bool| -> usize {
        if bound {
            0
        } else if !slot.lemma.is_empty() {
            1
        } else if let Some(l) = slot.labels.first() {
            2 + label_count.get(l).copied().unwrap_or(0)
        } else {
            3 + graph.node_count()
        }
    };
    let mut bound = vec![false; nodes.len()];
    let mut remaining: Vec<usize> = (0..shapes.len()).collect();
    let mut steps = Vec::new();
    while !remaining.is_empty() {
        let (pos, seed_at) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &pi)| {
                let (ns, _) = &shapes[pi];
                let (at, c) = ns
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| (i, cost(&nodes[s], bound[s])))
                    .min_by_key(|&(i, c)| (c, i))
                    .expect("patterns have a node");
                (pos, at, c)
            })
            .min_by_key(|&(pos, _, c)| (c, pos))
            .map(|(pos, at, _)| (pos, at))
            .expect("non-empty");
        let (ns, es) = &shapes[remaining.remove(pos)];
        steps.push(Step::Seed(ns[seed_at]));
        bound[ns[seed_at]] = true;
        for i in seed_at..es.len() {
            steps.push(Step::Expand {
                edge: es[i],
                from: ns[i],
                to: ns[i + 1],
                reversed: false,
            });
            bound[ns[i + 1]] = true;
        }
        for i in (0..seed_at).rev() {
            steps.push(Step::Expand {
                edge: es[i],
                from: ns[i + 1],
                to: ns[i],
                reversed: true,
            });
            bound[ns[i]] = true;
        }
    }
    Ok(Plan { nodes, edges, steps })
}

struct Search<'g> {
    graph: &'g Graph,
    plan: Plan,
    node_binding: Vec<Option<NodeId>>,
    edge_binding: Vec<Option<EdgeBinding>>,
    returns: Vec<(Target, Option<Field>)>,
    rows: BTreeSet<Vec<Cell>>,
    matches: usize,
    budget: usize,
    exhausted: bool,
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Node(usize),
    Edge(usize),
}

impl<'g> Search<'g> {
    fn node_ok(&self, slot: usize, id: NodeId) -> bool {
        if let Some(b) = self.node_binding[slot] {
            return b == id;
        }
        let Some(n) = self.graph.node(id) else { return false };
        let s = &self.plan.nodes[slot];
        s.labels.iter().all(|l| *l == n.entity_type)
            && s.lemma.iter().all(|l| *l == n.lemma)
            && s.entity_type.iter().all(|t| *t == n.entity_type)
    }

    fn edge_type_ok(&self, slot: &EdgeSlot, e: &RelationEdge) -> bool {
        slot.types.as_ref().is_none_or(|t| t.contains(&e.relation_type))
    }

    fn single_edge_ok(&self, slot: &EdgeSlot, e: &RelationEdge) -> bool {
        self.edge_type_ok(slot, e)
            && slot.relation_type.iter().all(|t| *t == e.relation_type)
            && slot.detail.iter().all(|d| Some(d) == e.detail.as_ref())
    }

    /// Edges leaving `from` when walking the term in the given sense, with the
    /// node at the far end.
    fn incident(&self, from: NodeId, direction: EdgeDirection, reversed: bool) -> Vec<(&'g RelationEdge, NodeId)> {
        let graph = self.graph;
        let effective = match (direction, reversed) {
            (EdgeDirection::Undirected, _) => EdgeDirection::Undirected,
            (EdgeDirection::Forward, false) | (EdgeDirection::Backward, true) => EdgeDirection::Forward,
            _ => EdgeDirection::Backward,
        };
        let mut out = Vec::new();
        if matches!(effective, EdgeDirection::Forward | EdgeDirection::Undirected) {
            out.extend(graph.out_edges(from).map(|e| (e, e.dst)));
        }
        if matches!(effective, EdgeDirection::Backward | EdgeDirection::Undirected) {
            out.extend(graph.in_edges(from).map(|e| (e, e.src)));
        }
        out
    }

    fn paths(&self, slot: &EdgeSlot, from: NodeId, range: HopRange, reversed: bool) -> Vec<(Vec<NodeId>, Vec<EdgeId>)> {
        let mut out = Vec::new();
        let mut nodes = vec![from];
        let mut edges = Vec::new();
        self.walk(slot, range, reversed, &mut nodes, &mut edges, &mut out);
        out
    }

    fn walk(
        &self,
        slot: &EdgeSlot,
        range: HopRange,
        reversed: bool,
        nodes: &mut Vec<NodeId>,
        edges: &mut Vec<EdgeId>,
        out: &mut Vec<(Vec<NodeId>, Vec<EdgeId>)>,
    ) {
        if edges.len() >= range.min as usize {
            out.push((nodes.clone(), edges.clone()));
        }
        if edges.len() == range.max as usize {
            return;
        }
        let here = *nodes.last().expect("path has a start");
        for (e, next) in self.incident(here, slot.direction, reversed) {
            if !self.edge_type_ok(slot, e) || nodes.contains(&next) {
                continue;
            }
            nodes.push(next);
            edges.push(e.edge_id);
            self.walk(slot, range, reversed, nodes, edges, out);
            nodes.pop();
            edges.pop();
        }
    }

    fn run(&mut self, step: usize) {
        if self.exhausted {
            return;
        }
        if step == self.plan.steps.len() {
            self.matches += 1;
            if self.matches > self.budget {
                self.exhausted = true;
                return;
            }
            let row = self.project();
            self.rows.insert(row);
            return;
        }
        match self.plan.steps[step] {
            Step::Seed(slot) => {
                if self.node_binding[slot].is_some() {
                    self.run(step + 1);
                    return;
                }
                let candidates: Vec<NodeId> = match self.plan.nodes[slot].lemma.first() {
                    Some(l) => self.graph.node_id(l).into_iter().collect(),
                    None => self.graph.nodes().map(|n| n.node_id).collect(),
                };
                for id in candidates {
                    if self.node_ok(slot, id) {
                        self.node_binding[slot] = Some(id);
                        self.run(step + 1);
                        self.node_binding[slot] = None;
                    }
                }
            }
            Step::Expand {
                edge,
                from,
                to,
                reversed,
            } => {
                let start = self.node_binding[from].expect("expansion starts from a bound node");
                let slot = self.plan.edges[edge].clone();
                let was_bound = self.node_binding[to].is_some();
                match slot.hops {
                    None => {
                        for (e, next) in self.incident(start, slot.direction, reversed) {
                            if !self.single_edge_ok(&slot, e) || !self.node_ok(to, next) {
                                continue;
                            }
                            self.node_binding[to] = Some(next);
                            self.edge_binding[edge] = Some(EdgeBinding::Edge(e.edge_id));
                            self.run(step + 1);
                            self.edge_binding[edge] = None;
                            if !was_bound {
                                self.node_binding[to] = None;
                            }
                        }
                    }
                    Some(range) => {
                        for (mut nodes, mut edges) in self.paths(&slot, start, range, reversed) {
                            let end = *nodes.last().expect("non-empty");
                            if !self.node_ok(to, end) {
                                continue;
                            }
                            if reversed {
                                nodes.reverse();
                                edges.reverse();
                            }
                            self.node_binding[to] = Some(end);
                            self.edge_binding[edge] = Some(EdgeBinding::Path { nodes, edges });
                            self.run(step + 1);
                            self.edge_binding[edge] = None;
                            if !was_bound {
                                self.node_binding[to] = None;
                            }
                        }
                    }
                }
            }
        }
    }

    fn project(&self) -> Vec<Cell> {
        self.returns
            .iter()
            .map(|&(target, field)| match target {
                Target::Node(slot) => {
                    let n = self.graph.node(self.node_binding[slot].expect("all slots bound")).expect("node exists");
                    match field {
                        None => Cell::node(n),
                        Some(Field::Lemma) => Cell::text(&n.lemma),
                        Some(_) => Cell::text(&n.entity_type),
                    }
                }
                Target::Edge(slot) => match self.edge_binding[slot].as_ref().expect("all edges bound") {
                    EdgeBinding::Edge(id) => {
                        let e = self.graph.edge(*id).expect("edge exists");
                        match field {
                            None => Cell::edge(self.graph, e),
                            Some(Field::RelationType) => Cell::text(&e.relation_type),
                            Some(_) => e.detail.as_deref().map(Cell::text).unwrap_or(Cell::Null),
                        }
                    }
                    EdgeBinding::Path { nodes, edges } => Cell::path(self.graph, nodes, edges),
                },
            })
            .collect()
    }
}

/// Evaluates with the default row cap and match budget.
pub fn evaluate(query: &Query, graph: &Graph) -> Result<ResultSet, QueryError> {
    evaluate_with(query, graph, Limits::default())
}

pub fn evaluate_with(query: &Query, graph: &Graph, limits: Limits) -> Result<ResultSet, QueryError> {
    let plan = plan(graph, query)?;
    let node_var: HashMap<&str, usize> = plan
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.var.as_deref().map(|v| (v, i)))
        .collect();
    let edge_var: HashMap<&str, usize> = plan
        .edges
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.var.as_deref().map(|v| (v, i)))
        .collect();
    let returns = query
        .returns
        .iter()
        .map(|r| {
            let target = match node_var.get(r.var.as_str()) {
                Some(&i) => Target::Node(i),
                None => Target::Edge(edge_var[r.var.as_str()]),
            };
            (target, r.field)
        })
        .collect();
    let (n_nodes, n_edges) = (plan.nodes.len(), plan.edges.len());
    let mut search = Search {
        graph,
        plan,
        node_binding: vec![None; n_nodes],
        edge_binding: vec![None; n_edges],
        returns,
        rows: BTreeSet::new(),
        matches: 0,
        budget: limits.max_matches,
        exhausted: false,
    };
    search.run(0);

    let mut truncated = search.exhausted;
    let mut rows: Vec<Vec<Cell>> = search.rows.into_iter().collect();
    if rows.len() > limits.max_rows {
        rows.truncate(limits.max_rows);
        truncated = true;
    }
    Ok(ResultSet {
        columns: query.returns.iter().map(ReturnItem::column_name).collect(),
        subgraph: subgraph(graph, &rows),
        rows,
        truncated,
    })
}

fn subgraph(graph: &Graph, rows: &[Vec<Cell>]) -> Subgraph {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for cell in rows.iter().flatten() {
        match cell {
            Cell::Node { node_id, .. } => {
                nodes.insert(*node_id);
            }
            Cell::Edge { edge_id, src, dst, .. } => {
                edges.insert(*edge_id);
                nodes.insert(*src);
                nodes.insert(*dst);
            }
            Cell::Path {
                nodes: ns, edges: es, ..
            } => {
                nodes.extend(ns.iter().copied());
                edges.extend(es.iter().copied());
            }
            Cell::Text { .. } | Cell::Null => {}
        }
    }
    Subgraph {
        nodes: nodes.iter().filter_map(|id| graph.node(*id).cloned()).collect(),
        edges: edges.iter().filter_map(|id| graph.edge(*id).cloned()).collect(),
    }
}
