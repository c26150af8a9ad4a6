//! Shared oracles and random generators for the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use glossgraph_core::graph::{EdgeId, Graph, NodeId, RelationEdge};
use glossgraph_core::ontology::Ontology;
use glossgraph_core::query::{
    Cell, EdgeDirection, EdgeTerm, Field, Filter, HopRange, NodeTerm, PathPattern, Query, ReturnItem,
};
use glossgraph_core::transliteration::{convert, is_ambiguous_pair, phoneme_inventory, Scheme};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn ontology() -> Arc<Ontology> {
    Arc::new(Ontology::shipped())
}

pub const ENTITY_TYPES: [&str; 3] = ["Substance", "Property", "Tridoṣa"];
pub const RELATION_TYPES: [&str; 3] = ["is Synonym of", "is Property of", "is Increased by"];
pub const DETAILS: [&str; 2] = ["rasa", "varṇa"];

// ---------------------------------------------------------------------------
// brute-force query oracle

struct OracleEdge {
    left: usize,
    right: usize,
    types: Option<BTreeSet<String>>,
    direction: EdgeDirection,
    hops: Option<HopRange>,
    relation_type: Vec<String>,
    detail: Vec<String>,
}

#[derive(Clone)]
enum Bound {
    Edge(EdgeId),
    Path(Vec<NodeId>, Vec<EdgeId>),
}

struct Oracle<'g> {
    graph: &'g Graph,
    all_nodes: Vec<NodeId>,
    all_edges: Vec<&'g RelationEdge>,
    labels: Vec<Vec<String>>,
    lemma: Vec<Vec<String>>,
    entity_type: Vec<Vec<String>>,
    edges: Vec<OracleEdge>,
    /// Edge terms to check once the given slot is assigned.
    check_at: Vec<Vec<usize>>,
    returns: Vec<(Result<usize, usize>, Option<Field>)>,
    rows: BTreeSet<Vec<Cell>>,
}

impl<'g> Oracle<'g> {
    fn node_ok(&self, slot: usize, id: NodeId) -> bool {
        let n = self.graph.node(id).unwrap();
        self.labels[slot].iter().all(|l| *l == n.entity_type)
            && self.lemma[slot].iter().all(|l| *l == n.lemma)
            && self.entity_type[slot].iter().all(|t| *t == n.entity_type)
    }

    fn type_ok(term: &OracleEdge, e: &RelationEdge) -> bool {
        term.types.as_ref().is_none_or(|t| t.contains(&e.relation_type))
    }

    /// The node reached by walking `e` left to right from `at`, if the term's
    /// direction allows it.
    fn step(direction: EdgeDirection, e: &RelationEdge, at: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let forward = e.src == at;
        let backward = e.dst == at;
        match direction {
            EdgeDirection::Forward if forward => out.push(e.dst),
            EdgeDirection::Backward if backward => out.push(e.src),
            EdgeDirection::Undirected => {
                if forward {
                    out.push(e.dst);
                }
                if backward {
                    out.push(e.src);
                }
            }
            _ => {}
        }
        out
    }

    fn bindings(&self, term: &OracleEdge, a: NodeId, b: NodeId) -> Vec<Bound> {
        match term.hops {
            None => self
                .all_edges
                .iter()
                .filter(|e| Self::type_ok(term, e))
                .filter(|e| term.relation_type.iter().all(|t| *t == e.relation_type))
                .filter(|e| term.detail.iter().all(|d| Some(d) == e.detail.as_ref()))
                .filter(|e| Self::step(term.direction, e, a).contains(&b))
                .map(|e| Bound::Edge(e.edge_id))
                .collect(),
            Some(range) => {
                let mut out = Vec::new();
                let mut stack: Vec<(Vec<NodeId>, Vec<EdgeId>)> = vec![(vec![a], Vec::new())];
                while let Some((nodes, edges)) = stack.pop() {
                    let here = *nodes.last().unwrap();
                    if edges.len() >= range.min as usize && here == b {
                        out.push(Bound::Path(nodes.clone(), edges.clone()));
                    }
                    if edges.len() == range.max as usize {
                        continue;
                    }
                    for e in &self.all_edges {
                        if !Self::type_ok(term, e) {
                            continue;
                        }
                        for next in Self::step(term.direction, e, here) {
                            if nodes.contains(&next) {
                                continue;
                            }
                            let mut n2 = nodes.clone();
                            n2.push(next);
                            let mut e2 = edges.clone();
                            e2.push(e.edge_id);
                            stack.push((n2, e2));
                        }
                    }
                }
                out
            }
        }
    }

    fn assign(&mut self, slot: usize, assignment: &mut Vec<NodeId>) {
        if slot == self.labels.len() {
            self.emit(assignment);
            return;
        }
        for i in 0..self.all_nodes.len() {
            let id = self.all_nodes[i];
            if !self.node_ok(slot, id) {
                continue;
            }
            assignment.push(id);
            let feasible = self.check_at[slot].iter().all(|&t| {
                let term = &self.edges[t];
                !self.bindings(term, assignment[term.left], assignment[term.right]).is_empty()
            });
            if feasible {
                self.assign(slot + 1, assignment);
            }
            assignment.pop();
        }
    }

    fn emit(&mut self, assignment: &[NodeId]) {
        let per_term: Vec<Vec<Bound>> = self
            .edges
            .iter()
            .map(|t| self.bindings(t, assignment[t.left], assignment[t.right]))
            .collect();
        let mut choice = vec![0usize; per_term.len()];
        loop {
            let row = self
                .returns
                .iter()
                .map(|&(target, field)| self.project(target, field, assignment, &per_term, &choice))
                .collect();
            self.rows.insert(row);
            // odometer over the edge bindings
            let mut k = 0;
            loop {
                if k == choice.len() {
                    return;
                }
                choice[k] += 1;
                if choice[k] < per_term[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }

    fn project(
        &self,
        target: Result<usize, usize>,
        field: Option<Field>,
        assignment: &[NodeId],
        per_term: &[Vec<Bound>],
        choice: &[usize],
    ) -> Cell {
        match target {
            Ok(slot) => {
                let n = self.graph.node(assignment[slot]).unwrap();
                match field {
                    None => Cell::node(n),
                    Some(Field::Lemma) => Cell::text(&n.lemma),
                    Some(_) => Cell::text(&n.entity_type),
                }
            }
            Err(term) => match &per_term[term][choice[term]] {
                Bound::Edge(id) => {
                    let e = self.graph.edge(*id).unwrap();
                    match field {
                        None => Cell::edge(self.graph, e),
                        Some(Field::RelationType) => Cell::text(&e.relation_type),
                        Some(_) => e.detail.as_deref().map(Cell::text).unwrap_or(Cell::Null),
                    }
                }
                Bound::Path(nodes, edges) => Cell::path(self.graph, nodes, edges),
            },
        }
    }
}

/// Every row of `query` over `graph`, found by trying all node assignments
/// and scanning the full edge list for each edge term. Returns `None` when the
/// query names a type outside the ontology.
pub fn oracle_rows(query: &Query, graph: &Graph) -> Option<BTreeSet<Vec<Cell>>> {
    let onto = graph.ontology();
    let mut slot_of: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<Vec<String>> = Vec::new();
    let mut edges = Vec::new();
    let mut edge_var: HashMap<String, usize> = HashMap::new();

    let mut slot = |term: &NodeTerm, labels: &mut Vec<Vec<String>>| -> Option<usize> {
        let idx = match &term.var {
            Some(v) if slot_of.contains_key(v) => slot_of[v],
            other => {
                labels.push(Vec::new());
                if let Some(v) = other {
                    slot_of.insert(v.clone(), labels.len() - 1);
                }
                labels.len() - 1
            }
        };
        if let Some(l) = &term.label {
            labels[idx].push(onto.resolve_entity_type(l).ok()?.name.clone());
        }
        Some(idx)
    };
    for p in &query.patterns {
        let mut left = slot(&p.start, &mut labels)?;
        for (e, n) in &p.steps {
            let right = slot(n, &mut labels)?;
            let types = if e.types.is_empty() {
                None
            } else {
                let mut set = BTreeSet::new();
                for t in &e.types {
                    set.insert(onto.resolve_relation_type(t).ok()?.name.clone());
                }
                Some(set)
            };
            if let Some(v) = &e.var {
                edge_var.insert(v.clone(), edges.len());
            }
            edges.push(OracleEdge {
                left,
                right,
                types,
                direction: e.direction,
                hops: e.hops,
                relation_type: Vec::new(),
                detail: Vec::new(),
            });
            left = right;
        }
    }
    let n = labels.len();
    let mut lemma = vec![Vec::new(); n];
    let mut entity_type = vec![Vec::new(); n];
    for f in &query.filters {
        match f.field {
            Field::Lemma => lemma[slot_of[&f.var]].push(f.value.clone()),
            Field::EntityType => entity_type[slot_of[&f.var]].push(f.value.clone()),
            Field::RelationType => edges[edge_var[&f.var]].relation_type.push(f.value.clone()),
            Field::Detail => edges[edge_var[&f.var]].detail.push(f.value.clone()),
        }
    }
    let mut check_at = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        check_at[e.left.max(e.right)].push(i);
    }
    let returns = query
        .returns
        .iter()
        .map(|r| {
            let target = match slot_of.get(&r.var) {
                Some(&s) => Ok(s),
                None => Err(edge_var[&r.var]),
            };
            (target, r.field)
        })
        .collect();
    let mut all_nodes: Vec<NodeId> = graph.nodes().map(|n| n.node_id).collect();
    all_nodes.sort_unstable();
    let mut oracle = Oracle {
        graph,
        all_nodes,
        all_edges: graph.edges().collect(),
        labels,
        lemma,
        entity_type,
        edges,
        check_at,
        returns,
        rows: BTreeSet::new(),
    };
    oracle.assign(0, &mut Vec::new());
    Some(oracle.rows)
}

// ---------------------------------------------------------------------------
// random graphs and queries

pub fn lemma_for(i: usize) -> String {
    format!("n{i:02}")
}

/// A random graph over the three entity types and three relation types, with
/// `1..=max_nodes` nodes.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> Graph {
    let mut g = Graph::new(ontology());
    let n = rng.gen_range(max_nodes.min(4)..=max_nodes);
    for i in 0..n {
        let t = ENTITY_TYPES[rng.gen_range(0..ENTITY_TYPES.len())];
        g.upsert_node(&lemma_for(i), t, rng.gen_range(1..=40), "gen").unwrap();
    }
    if n > 1 {
        let m = rng.gen_range(n / 2..=3 * n);
        for _ in 0..m {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let rel = RELATION_TYPES[rng.gen_range(0..RELATION_TYPES.len())];
            let detail = if rng.gen_bool(0.3) {
                Some(DETAILS[rng.gen_range(0..DETAILS.len())])
            } else {
                None
            };
            g.upsert_edge(&lemma_for(a), rel, &lemma_for(b), detail, rng.gen_range(1..=40), "gen")
                .unwrap();
        }
    }
    g
}

const NODE_VARS: [&str; 4] = ["a", "b", "c", "d"];

/// A random, well-formed query over the vocabulary of [`random_graph`].
pub fn random_query<R: Rng>(rng: &mut R, graph: &Graph) -> Query {
    let onto = graph.ontology();
    let label_ids: Vec<String> = ENTITY_TYPES
        .iter()
        .map(|t| onto.resolve_entity_type(t).unwrap().identifier())
        .collect();
    let rel_ids: Vec<String> = RELATION_TYPES
        .iter()
        .map(|t| onto.resolve_relation_type(t).unwrap().identifier())
        .collect();

    let mut used_nodes: Vec<String> = Vec::new();
    let mut single_edges: Vec<String> = Vec::new();
    let mut path_edges: Vec<String> = Vec::new();
    let mut next_edge = 0;
    // `previous` is the variable of the neighbouring node term; repeating it
    // would ask for a self-loop, which the graph never has
    let node_term = |rng: &mut R, used: &mut Vec<String>, connect: bool, previous: Option<&String>| -> NodeTerm {
        let fresh: Vec<&str> = NODE_VARS.iter().copied().filter(|v| Some(*v) != previous.map(String::as_str)).collect();
        let var = if connect && !used.is_empty() {
            Some(used.choose(rng).unwrap().clone())
        } else if rng.gen_bool(0.6) {
            Some(fresh.choose(rng).unwrap().to_string())
        } else {
            None
        };
        if let Some(v) = &var {
            if !used.contains(v) {
                used.push(v.clone());
            }
        }
        let label = rng.gen_bool(0.2).then(|| label_ids.choose(rng).unwrap().clone());
        NodeTerm { var, label }
    };

    let n_patterns = rng.gen_range(1..=3);
    let mut patterns = Vec::new();
    for p in 0..n_patterns {
        // later patterns usually share a variable with earlier ones
        let connect = p > 0 && rng.gen_bool(0.75);
        let start = node_term(rng, &mut used_nodes, connect, None);
        let mut last = start.var.clone();
        let mut steps = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let hops = rng.gen_bool(0.35).then(|| {
                let min = rng.gen_range(0..=3u8);
                let max = rng.gen_range(min.max(1)..=3u8);
                HopRange { min, max }
            });
            let var = rng.gen_bool(0.5).then(|| {
                next_edge += 1;
                let v = format!("r{next_edge}");
                if hops.is_some() {
                    path_edges.push(v.clone());
                } else {
                    single_edges.push(v.clone());
                }
                v
            });
            let mut types: Vec<String> = Vec::new();
            for _ in 0..[0, 0, 1, 2][rng.gen_range(0..4)] {
                let t = rel_ids.choose(rng).unwrap().clone();
                if !types.contains(&t) {
                    types.push(t);
                }
            }
            let direction = *[EdgeDirection::Forward, EdgeDirection::Backward, EdgeDirection::Undirected]
                .choose(rng)
                .unwrap();
            let edge = EdgeTerm {
                var,
                types,
                direction,
                hops,
            };
            let next = node_term(rng, &mut used_nodes, false, last.as_ref());
            last = next.var.clone();
            steps.push((edge, next));
        }
        patterns.push(PathPattern { start, steps });
    }
    if used_nodes.is_empty() {
        patterns[0].start.var = Some("a".into());
        used_nodes.push("a".into());
    }

    let lemmas: Vec<String> = graph.nodes().map(|n| n.lemma.clone()).collect();
    let mut filters = Vec::new();
    for _ in 0..[0, 0, 1, 1, 2][rng.gen_range(0..5)] {
        if !single_edges.is_empty() && rng.gen_bool(0.3) {
            let var = single_edges.choose(rng).unwrap().clone();
            let (field, value) = if rng.gen_bool(0.5) {
                (Field::RelationType, RELATION_TYPES.choose(rng).unwrap().to_string())
            } else {
                (Field::Detail, DETAILS.choose(rng).unwrap().to_string())
            };
            filters.push(Filter { var, field, value });
        } else {
            let var = used_nodes.choose(rng).unwrap().clone();
            let (field, value) = if rng.gen_bool(0.7) && !lemmas.is_empty() {
                (Field::Lemma, lemmas.choose(rng).unwrap().clone())
            } else if rng.gen_bool(0.8) {
                (Field::EntityType, ENTITY_TYPES.choose(rng).unwrap().to_string())
            } else {
                (Field::Lemma, "absent".to_string())
            };
            filters.push(Filter { var, field, value });
        }
    }

    let mut returns = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let pick = rng.gen_range(0..3);
        let item = if pick == 1 && !single_edges.is_empty() {
            let var = single_edges.choose(rng).unwrap().clone();
            let field = *[None, Some(Field::RelationType), Some(Field::Detail)].choose(rng).unwrap();
            ReturnItem { var, field }
        } else if (pick == 2 || rng.gen_bool(0.3)) && !path_edges.is_empty() {
            ReturnItem {
                var: path_edges.choose(rng).unwrap().clone(),
                field: None,
            }
        } else {
            let var = used_nodes.choose(rng).unwrap().clone();
            let field = *[None, Some(Field::Lemma), Some(Field::EntityType)].choose(rng).unwrap();
            ReturnItem { var, field }
        };
        returns.push(item);
    }
    Query {
        patterns,
        filters,
        returns,
    }
}

// ---------------------------------------------------------------------------
// synonym-heavy graphs for canonicalization

/// Substances grouped into synonym clusters (random trees plus the odd extra
/// edge), with properties, doṣa effects and comparisons attached to random
/// members. Some cluster members are unnamed.
pub fn random_synonym_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> Graph {
    let mut g = Graph::new(ontology());
    let n = rng.gen_range(2..=max_nodes);
    let n_sub = (n * 3 / 5).max(1);
    let mut substances = Vec::new();
    let mut others = Vec::new();
    for i in 0..n {
        if i < n_sub {
            let lemma = if rng.gen_bool(0.15) {
                format!("X{}-{}", rng.gen_range(1..=3), 100 + i)
            } else {
                lemma_for(i)
            };
            g.upsert_node(&lemma, "Substance", rng.gen_range(1..=50), "gen").unwrap();
            substances.push(lemma);
        } else {
            let t = if rng.gen_bool(0.7) { "Property" } else { "Tridoṣa" };
            g.upsert_node(&lemma_for(i), t, rng.gen_range(1..=50), "gen").unwrap();
            others.push((lemma_for(i), t));
        }
    }
    let mut pool = substances.clone();
    pool.shuffle(rng);
    let mut rest: &[String] = &pool;
    while !rest.is_empty() {
        let size = rng.gen_range(1..=5).min(rest.len());
        let (group, tail) = rest.split_at(size);
        rest = tail;
        for i in 1..group.len() {
            let j = rng.gen_range(0..i);
            let (a, b) = if rng.gen_bool(0.7) { (i, j) } else { (j, i) };
            add_edge(&mut g, rng, &group[a], "is Synonym of", &group[b], None);
        }
        if group.len() > 2 && rng.gen_bool(0.3) {
            let a = rng.gen_range(0..group.len());
            let b = rng.gen_range(0..group.len());
            if a != b {
                add_edge(&mut g, rng, &group[a], "is Synonym of", &group[b], None);
            }
        }
    }
    for (lemma, t) in &others {
        for _ in 0..rng.gen_range(0..=3) {
            let target = substances.choose(rng).unwrap();
            if *t == "Property" {
                let detail = rng.gen_bool(0.3).then_some("rasa");
                add_edge(&mut g, rng, lemma, "is Property of", target, detail);
            } else {
                add_edge(&mut g, rng, lemma, "is Increased by", target, None);
            }
        }
    }
    for _ in 0..rng.gen_range(0..=n / 3) {
        let a = substances.choose(rng).unwrap();
        let b = substances.choose(rng).unwrap();
        if a != b {
            add_edge(&mut g, rng, a, "is Better than", b, Some("laghu"));
        }
    }
    g
}

fn add_edge<R: Rng>(g: &mut Graph, rng: &mut R, src: &str, rel: &str, dst: &str, detail: Option<&str>) {
    // one or two independent attestations
    for _ in 0..rng.gen_range(1..=2) {
        let annotator = if rng.gen_bool(0.5) { "a1" } else { "a2" };
        g.upsert_edge(src, rel, dst, detail, rng.gen_range(1..=50), annotator).unwrap();
    }
}

/// Components of the synonym graph and the member each should collapse onto,
/// recomputed from scratch: union-find over synonym edges, degrees counted by
/// scanning every edge.
pub fn expected_canonicals(g: &Graph) -> BTreeMap<NodeId, NodeId> {
    let mut parent: BTreeMap<NodeId, NodeId> = g.nodes().map(|n| (n.node_id, n.node_id)).collect();
    fn find(parent: &mut BTreeMap<NodeId, NodeId>, x: NodeId) -> NodeId {
        let p = parent[&x];
        if p == x {
            return x;
        }
        let r = find(parent, p);
        parent.insert(x, r);
        r
    }
    let mut in_component = BTreeSet::new();
    for e in g.edges().filter(|e| e.relation_type == "is Synonym of") {
        let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.dst));
        parent.insert(a, b);
        in_component.insert(e.src);
        in_component.insert(e.dst);
    }
    let mut degree: HashMap<NodeId, usize> = HashMap::new();
    for e in g.edges() {
        *degree.entry(e.src).or_default() += 1;
        *degree.entry(e.dst).or_default() += 1;
    }
    let mut groups: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &m in &in_component {
        let r = find(&mut parent, m);
        groups.entry(r).or_default().push(m);
    }
    let mut out = BTreeMap::new();
    for members in groups.values() {
        let best = *members
            .iter()
            .max_by(|&&x, &&y| {
                let nx = g.node(x).unwrap();
                let ny = g.node(y).unwrap();
                (!nx.unnamed)
                    .cmp(&!ny.unnamed)
                    .then(degree.get(&x).unwrap_or(&0).cmp(degree.get(&y).unwrap_or(&0)))
                    .then(ny.lemma.cmp(&nx.lemma))
                    .then(y.cmp(&x))
            })
            .unwrap();
        for &m in members {
            out.insert(m, best);
        }
    }
    out
}

/// Lemmas of everything that "is Property of" any member of the synonym
/// component of `lemma`, each replaced by its own component's canonical
/// lemma. Relations within one component are left out.
pub fn properties_via_synonyms(g: &Graph, canon: &BTreeMap<NodeId, NodeId>, lemma: &str) -> BTreeSet<String> {
    let Some(v) = g.node_id(lemma) else {
        return BTreeSet::new();
    };
    let c = |id: NodeId| canon.get(&id).copied().unwrap_or(id);
    let me = c(v);
    g.edges()
        .filter(|e| e.relation_type == "is Property of" && c(e.dst) == me && c(e.src) != me)
        .map(|e| g.node(c(e.src)).unwrap().lemma.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// lexicon

/// Distinct random words, returned in Devanagari, built from the covered
/// phoneme inventory with no ambiguous adjacent pair.
pub fn lexicon<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    let (vowels, consonants, marks) = phoneme_inventory();
    let mut words = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let len = rng.gen_range(2..=8);
        let mut w: Vec<char> = Vec::new();
        while w.len() < len {
            let last = w.last().copied();
            let next = match last {
                None => {
                    if rng.gen_bool(0.25) {
                        *vowels.choose(rng).unwrap()
                    } else {
                        *consonants.choose(rng).unwrap()
                    }
                }
                Some(c) if consonants.contains(&c) => {
                    if rng.gen_bool(0.65) {
                        *vowels.choose(rng).unwrap()
                    } else {
                        *consonants.choose(rng).unwrap()
                    }
                }
                Some(c) if vowels.contains(&c) => {
                    if rng.gen_bool(0.2) && !marks.is_empty() {
                        *marks.choose(rng).unwrap()
                    } else {
                        *consonants.choose(rng).unwrap()
                    }
                }
                Some(_) => *consonants.choose(rng).unwrap(),
            };
            if let Some(prev) = last {
                if is_ambiguous_pair(prev, next) {
                    continue;
                }
            }
            w.push(next);
        }
        let slp1: String = w.into_iter().collect();
        let dev = convert(&slp1, Scheme::Slp1, Scheme::Devanagari);
        if words.insert(dev.clone()) {
            out.push(dev);
        }
    }
    out
}
