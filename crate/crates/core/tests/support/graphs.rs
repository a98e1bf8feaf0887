//! Random graphs and a traversal oracle for subgraph extraction.

use std::collections::{BTreeSet, VecDeque};

use intentmfg_core::decimal::Decimal;
use intentmfg_core::graph::{Edge, EdgeKind, KnowledgeGraph, Node, NodeKind, PropValue, Properties};
use rand::seq::SliceRandom;
use rand::Rng;

const AWKWARD: [&str; 8] = ["plain", "with \"quotes\"", "back\\slash", "new\nline", "tab\tbed", "ünïcödé", "`tick`", ""];

fn random_text<R: Rng>(rng: &mut R) -> String {
    let base = *AWKWARD.choose(rng).unwrap();
    format!("{base}{}", rng.gen_range(0..1000))
}

fn random_decimal<R: Rng>(rng: &mut R) -> Decimal {
    Decimal::from_parts(rng.gen_range(0..u64::MAX / 2), rng.gen_range(0..=12))
}

pub fn random_props<R: Rng>(rng: &mut R) -> Properties {
    let keys = ["op", "value", "unit", "weird key", "cpuValue", "flag", "note"];
    let mut p = Properties::new();
    for _ in 0..rng.gen_range(0..4) {
        let k = keys.choose(rng).unwrap().to_string();
        let v = match rng.gen_range(0..3) {
            0 => PropValue::Text(random_text(rng)),
            1 => PropValue::Number(random_decimal(rng)),
            _ => PropValue::Bool(rng.gen()),
        };
        p.insert(k, v);
    }
    p
}

/// A graph of at most `max_nodes` nodes with random REQUIRES and
/// CONSTRAINED_BY edges from process nodes.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> KnowledgeGraph {
    let n = rng.gen_range(1..=max_nodes);
    let n_mp = rng.gen_range(1..=n.min(6));
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let kind = if i < n_mp {
            NodeKind::ManufacturingProcess
        } else if rng.gen_bool(0.5) {
            NodeKind::ManufacturingResource
        } else {
            NodeKind::ProcessConstraint
        };
        let (id, name) = match kind {
            NodeKind::ManufacturingProcess => (format!("mp:P{i}"), format!("P{i}")),
            _ => (format!("n{i}:{}", random_text(rng).replace('\n', "")), random_text(rng)),
        };
        nodes.push(Node { id, kind, name, properties: random_props(rng) });
    }
    let mut edges = Vec::new();
    let mut triples = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=n * 2) {
        let from = &nodes[rng.gen_range(0..n_mp)];
        let to = &nodes[rng.gen_range(0..n)];
        let kind = match to.kind {
            NodeKind::ManufacturingResource => EdgeKind::Requires,
            NodeKind::ProcessConstraint => EdgeKind::ConstrainedBy,
            NodeKind::ManufacturingProcess => continue,
        };
        if !triples.insert((from.id.clone(), to.id.clone())) {
            continue;
        }
        edges.push(Edge {
            id: format!("e{}", edges.len()),
            kind,
            from: from.id.clone(),
            to: to.id.clone(),
            properties: random_props(rng),
        });
    }
    KnowledgeGraph::from_parts(nodes, edges).expect("generator respects invariants")
}

/// Breadth-first traversal to depth one over REQUIRES / CONSTRAINED_BY,
/// working from the raw edge list.
pub fn bfs_one_hop(graph: &KnowledgeGraph, goal: &str) -> Option<(BTreeSet<String>, BTreeSet<String>)> {
    let start = graph
        .nodes()
        .find(|n| n.kind == NodeKind::ManufacturingProcess && n.name == goal)?
        .id
        .clone();
    let mut nodes = BTreeSet::from([start.clone()]);
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((at, depth)) = queue.pop_front() {
        if depth == 1 {
            continue;
        }
        for e in graph.edges() {
            let allowed = matches!(e.kind, EdgeKind::Requires | EdgeKind::ConstrainedBy);
            if allowed && e.from == at {
                edges.insert(e.id.clone());
                if nodes.insert(e.to.clone()) {
                    queue.push_back((e.to.clone(), depth + 1));
                }
            }
        }
    }
    Some((nodes, edges))
}
