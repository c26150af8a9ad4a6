//! Curation passes run after annotation: type-conflict reporting, entity
//! inference for relation endpoints nobody annotated, equivalence linking and
//! the synonym canonicalization rewrite.
//!
//! Canonicalization turns every connected group of synonyms into a star: all
//! non-synonym edges move to one canonical member and each other member gets a
//! single synonym edge pointing at it, so any member is at most one synonym
//! hop from the facts about the group.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::corpus::LineId;
use crate::graph::{EdgeId, Graph, GraphError, GraphStats, NodeId, RelationEdge};
use crate::ontology::SYNONYM_RELATION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimedType {
    pub entity_type: String,
    pub annotators: BTreeSet<String>,
    pub line_ids: BTreeSet<LineId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryConflict {
    pub lemma: String,
    pub claimed_types: Vec<ClaimedType>,
    pub resolution: Option<String>,
}

/// Lemmas that were annotated with two or more entity types.
pub fn detect_category_conflicts(graph: &Graph) -> Vec<CategoryConflict> {
    graph
        .claims()
        .iter()
        .filter(|(_, by_type)| by_type.len() >= 2)
        .map(|(lemma, by_type)| CategoryConflict {
            lemma: lemma.clone(),
            claimed_types: by_type
                .iter()
                .map(|(t, c)| ClaimedType {
                    entity_type: t.clone(),
                    annotators: c.annotators.clone(),
                    line_ids: c.line_ids.clone(),
                })
                .collect(),
            resolution: graph.resolutions().get(lemma).cloned(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Src,
    Dst,
}

/// The pending relation an inference or failure refers to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViaEdge {
    pub src: String,
    pub relation_type: String,
    pub dst: String,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InferredEntity {
    pub lemma: String,
    pub entity_type: String,
    pub via_edge: ViaEdge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnresolvedEndpoint {
    pub lemma: String,
    pub role: Role,
    pub via_edge: ViaEdge,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InferenceReport {
    pub inferred: Vec<InferredEntity>,
    pub unresolved: Vec<UnresolvedEndpoint>,
}

/// Gives a node to each missing relation endpoint whose relation type names a
/// default entity type for that role. Endpoints without a default are reported.
pub fn apply_inference_rules(graph: &mut Graph, curator: &str) -> InferenceReport {
    let mut report = InferenceReport::default();
    let pending: Vec<_> = graph.pending().cloned().collect();
    for p in &pending {
        let rule = graph
            .ontology()
            .resolve_relation_type(&p.relation_type)
            .map(|r| r.inference.clone())
            .unwrap_or_default();
        let via = ViaEdge {
            src: p.src.clone(),
            relation_type: p.relation_type.clone(),
            dst: p.dst.clone(),
            detail: p.detail.clone(),
        };
        for (role, lemma, default) in [(Role::Src, &p.src, &rule.src), (Role::Dst, &p.dst, &rule.dst)] {
            if graph.node_id(lemma).is_some() {
                continue;
            }
            match default {
                Some(t) => {
                    for &line in &p.line_ids {
                        graph
                            .upsert_node(lemma, t, line, curator)
                            .expect("inference defaults are validated by the ontology");
                    }
                    report.inferred.push(InferredEntity {
                        lemma: lemma.clone(),
                        entity_type: t.clone(),
                        via_edge: via.clone(),
                    });
                }
                None => report.unresolved.push(UnresolvedEndpoint {
                    lemma: lemma.clone(),
                    role,
                    via_edge: via.clone(),
                }),
            }
        }
    }
    // an endpoint inferred later in the pass may have settled an earlier report
    report.unresolved.retain(|u| graph.node_id(&u.lemma).is_none());
    report
}

/// Records that two existing entities name the same thing.
pub fn link_equivalent(
    graph: &mut Graph,
    lemma_a: &str,
    lemma_b: &str,
    curator: &str,
) -> Result<EdgeId, GraphError> {
    let a = graph
        .node_id(lemma_a)
        .ok_or_else(|| GraphError::NoSuchNode(lemma_a.to_string()))?;
    let b = graph
        .node_id(lemma_b)
        .ok_or_else(|| GraphError::NoSuchNode(lemma_b.to_string()))?;
    let relation = graph.ontology().resolve_relation_type(SYNONYM_RELATION)?.name.clone();
    if a == b {
        return Err(GraphError::SelfLoop {
            lemma: lemma_a.to_string(),
            relation_type: relation,
        });
    }
    Ok(graph.merge_edge(
        a,
        b,
        &relation,
        None,
        &BTreeSet::new(),
        &BTreeSet::from([curator.to_string()]),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SynonymComponent {
    pub members: Vec<NodeId>,
    pub member_lemmas: Vec<String>,
    pub canonical: NodeId,
    pub canonical_lemma: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedSelfLoop {
    pub edge_id: EdgeId,
    pub lemma: String,
    pub relation_type: String,
    pub detail: Option<String>,
    pub line_ids: BTreeSet<LineId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CurationReport {
    pub dry_run: bool,
    pub conflicts: Vec<CategoryConflict>,
    pub inferred_entities: Vec<InferredEntity>,
    pub unresolved_endpoints: Vec<UnresolvedEndpoint>,
    pub components: Vec<SynonymComponent>,
    pub edges_rewired: usize,
    pub edges_merged: usize,
    pub self_loops_dropped: Vec<DroppedSelfLoop>,
    pub synonym_edges_removed: usize,
    pub star_edges_added: usize,
    /// Star edges carry the union of the provenance of the synonym edges
    /// they replace.
    pub star_provenance: String,
    pub stats_before: GraphStats,
    pub stats_after: GraphStats,
}

/// Connected components (two or more members) of the undirected synonym
/// graph, each sorted by node id, in order of their smallest member.
pub fn synonym_components(graph: &Graph) -> Vec<Vec<NodeId>> {
    let Ok(syn) = graph.ontology().resolve_relation_type(SYNONYM_RELATION) else {
        return Vec::new();
    };
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for e in graph.edges().filter(|e| e.relation_type == syn.name) {
        adj.entry(e.src).or_default().insert(e.dst);
        adj.entry(e.dst).or_default().insert(e.src);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            for &m in &adj[&n] {
                if seen.insert(m) {
                    comp.push(m);
                    stack.push(m);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Picks the member with the highest degree. Named members beat unnamed ones;
/// ties go to the smallest lemma by code point, then the smallest node id.
pub fn choose_canonical(graph: &Graph, members: &[NodeId], degrees: &HashMap<NodeId, usize>) -> NodeId {
    *members
        .iter()
        .max_by_key(|&&id| {
            let n = graph.node(id).expect("member exists");
            (!n.unnamed, degrees[&id], Reverse(n.lemma.as_str()), Reverse(id))
        })
        .expect("components are non-empty")
}

/// Collapses each synonym component onto its canonical member.
pub fn canonicalize_synonyms(graph: &mut Graph) -> CurationReport {
    let mut report = CurationReport {
        stats_before: graph.stats(),
        star_provenance: "union".to_string(),
        ..Default::default()
    };
    let components = synonym_components(graph);
    if components.is_empty() {
        report.stats_after = graph.stats();
        return report;
    }
    let syn = graph.ontology().resolve_relation_type(SYNONYM_RELATION).expect("checked").name.clone();

    let degrees: HashMap<NodeId, usize> = components
        .iter()
        .flatten()
        .map(|&id| (id, graph.degree(id).expect("member exists")))
        .collect();
    let mut canon_of: HashMap<NodeId, NodeId> = HashMap::new();
    let mut canonicals = Vec::new();
    for members in &components {
        let k = choose_canonical(graph, members, &degrees);
        canonicals.push(k);
        for &m in members {
            canon_of.insert(m, k);
        }
        let lemma = |id: NodeId| graph.node(id).expect("member exists").lemma.clone();
        report.components.push(SynonymComponent {
            members: members.clone(),
            member_lemmas: members.iter().map(|&m| lemma(m)).collect(),
            canonical: k,
            canonical_lemma: lemma(k),
        });
    }

    // Synonym edges: every one of them lies inside a single component.
    let syn_edges: Vec<EdgeId> = graph
        .edges()
        .filter(|e| e.relation_type == syn)
        .map(|e| e.edge_id)
        .collect();
    let mut provenance: HashMap<NodeId, (BTreeSet<LineId>, BTreeSet<String>)> = HashMap::new();
    let mut reusable: HashMap<NodeId, EdgeId> = HashMap::new();
    for id in syn_edges {
        let e = graph.remove_edge(id).expect("edge exists");
        let k = canon_of[&e.src];
        if e.dst == k && e.detail.is_none() {
            reusable.insert(e.src, e.edge_id);
        }
        let (lines, annotators) = provenance.entry(k).or_default();
        lines.extend(e.line_ids);
        annotators.extend(e.annotators);
        report.synonym_edges_removed += 1;
    }

    // Move every other edge off non-canonical members.
    let to_move: Vec<EdgeId> = graph
        .edges()
        .filter(|e| {
            canon_of.get(&e.src).is_some_and(|&k| k != e.src)
                || canon_of.get(&e.dst).is_some_and(|&k| k != e.dst)
        })
        .map(|e| e.edge_id)
        .collect();
    for id in to_move {
        let e = graph.remove_edge(id).expect("edge exists");
        let src = canon_of.get(&e.src).copied().unwrap_or(e.src);
        let dst = canon_of.get(&e.dst).copied().unwrap_or(e.dst);
        if src == dst {
            report.self_loops_dropped.push(DroppedSelfLoop {
                edge_id: e.edge_id,
                lemma: graph.node(src).expect("node exists").lemma.clone(),
                relation_type: e.relation_type,
                detail: e.detail,
                line_ids: e.line_ids,
            });
            continue;
        }
        if graph.find_edge(src, dst, &e.relation_type, e.detail.as_deref()).is_some() {
            graph.merge_edge(src, dst, &e.relation_type, e.detail, &e.line_ids, &e.annotators);
            report.edges_merged += 1;
        } else {
            graph.attach_edge(RelationEdge { src, dst, ..e });
            report.edges_rewired += 1;
        }
    }

    // Star edges.
    for (members, &k) in components.iter().zip(&canonicals) {
        let (lines, annotators) = provenance.remove(&k).unwrap_or_default();
        for &m in members {
            if m == k {
                graph.set_canonical_of(m, None);
                continue;
            }
            match reusable.get(&m) {
                Some(&id) => graph.attach_edge(RelationEdge {
                    edge_id: id,
                    src: m,
                    dst: k,
                    relation_type: syn.clone(),
                    detail: None,
                    line_ids: lines.clone(),
                    annotators: annotators.clone(),
                }),
                None => {
                    graph.merge_edge(m, k, &syn, None, &lines, &annotators);
                }
            }
            graph.set_canonical_of(m, Some(k));
            report.star_edges_added += 1;
        }
    }
    report.stats_after = graph.stats();
    report
}

/// Which passes [`run_curation`] performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurationPass {
    Conflicts,
    Infer,
    Canonicalize,
    All,
}

impl std::str::FromStr for CurationPass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "conflicts" => Ok(CurationPass::Conflicts),
            "infer" | "inference" => Ok(CurationPass::Infer),
            "canonicalize" | "synonyms" => Ok(CurationPass::Canonicalize),
            "all" => Ok(CurationPass::All),
            other => Err(format!("unknown curation pass {other:?}")),
        }
    }
}

/// Runs the selected passes on `graph`, or on a copy when `dry_run` is set.
pub fn run_curation(graph: &mut Graph, pass: CurationPass, curator: &str, dry_run: bool) -> CurationReport {
    let mut scratch;
    let target = if dry_run {
        scratch = graph.clone();
        &mut scratch
    } else {
        graph
    };
    let before = target.stats();
    let mut report = CurationReport::default();
    if matches!(pass, CurationPass::Infer | CurationPass::All) {
        let inference = apply_inference_rules(target, curator);
        report.inferred_entities = inference.inferred;
        report.unresolved_endpoints = inference.unresolved;
    }
    if matches!(pass, CurationPass::Canonicalize | CurationPass::All) {
        let canon = canonicalize_synonyms(target);
        report = CurationReport {
            inferred_entities: report.inferred_entities,
            unresolved_endpoints: report.unresolved_endpoints,
            ..canon
        };
    }
    report.conflicts = detect_category_conflicts(target);
    report.dry_run = dry_run;
    report.stats_before = before;
    report.stats_after = target.stats();
    report
}
