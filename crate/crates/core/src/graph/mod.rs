//! Typed property graph of manufacturing processes (MP), resources (MR) and
//! process constraints (PC).
//!
//! Constraint values live on `CONSTRAINED_BY` edges so several processes can
//! share one constraint definition node.
//!
//! The file format is `{"nodes": [...], "edges": [...]}` with both arrays
//! sorted by id, properties sorted by name, two-space indentation and a
//! trailing newline. Numbers are written with their exact decimal digits.

mod apply;
mod cypher;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::decimal::Decimal;
use crate::model::{ConstraintKey, Identifier};

pub use apply::{apply_requirement, constraint_setting, ApplyMode, Setting, UpdateEntry, UpdateReport};
pub use cypher::export_cypher;
pub use store::GraphStore;

const DEFAULT_ONTOLOGY: &str = include_str!("../../data/ontology.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    ManufacturingProcess,
    ManufacturingResource,
    ProcessConstraint,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::ManufacturingProcess => "ManufacturingProcess",
            NodeKind::ManufacturingResource => "ManufacturingResource",
            NodeKind::ProcessConstraint => "ProcessConstraint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeKind {
    /// MP → MR
    Requires,
    /// MP → PC
    ConstrainedBy,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Requires => "REQUIRES",
            EdgeKind::ConstrainedBy => "CONSTRAINED_BY",
        }
    }

    pub fn endpoints(self) -> (NodeKind, NodeKind) {
        match self {
            EdgeKind::Requires => (NodeKind::ManufacturingProcess, NodeKind::ManufacturingResource),
            EdgeKind::ConstrainedBy => (NodeKind::ManufacturingProcess, NodeKind::ProcessConstraint),
        }
    }
}

/// Scalar property value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropValue {
    Text(String),
    Number(Decimal),
    Bool(bool),
}

impl fmt::Display for PropValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropValue::Text(s) => f.write_str(s),
            PropValue::Number(d) => write!(f, "{d}"),
            PropValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<&str> for PropValue {
    fn from(s: &str) -> Self {
        PropValue::Text(s.to_string())
    }
}

impl From<String> for PropValue {
    fn from(s: String) -> Self {
        PropValue::Text(s)
    }
}

impl From<Decimal> for PropValue {
    fn from(d: Decimal) -> Self {
        PropValue::Number(d)
    }
}

impl From<bool> for PropValue {
    fn from(b: bool) -> Self {
        PropValue::Bool(b)
    }
}

impl Serialize for PropValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PropValue::Text(t) => s.serialize_str(t),
            PropValue::Bool(b) => s.serialize_bool(*b),
            PropValue::Number(d) => RawValue::from_string(d.to_string())
                .map_err(serde::ser::Error::custom)?
                .serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for PropValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Box<RawValue> = Deserialize::deserialize(d)?;
        let text = raw.get().trim();
        match text {
            "true" => Ok(PropValue::Bool(true)),
            "false" => Ok(PropValue::Bool(false)),
            t if t.starts_with('"') => serde_json::from_str(t).map(PropValue::Text).map_err(D::Error::custom),
            t => t
                .parse::<Decimal>()
                .map(PropValue::Number)
                .map_err(|e| D::Error::custom(format!("property number `{t}`: {e}"))),
        }
    }
}

pub type Properties = BTreeMap<String, PropValue>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub name: String,
    #[serde(default)]
    pub properties: Properties,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub kind: EdgeKind,
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub properties: Properties,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum IntegrityViolation {
    DuplicateId { id: String },
    DanglingEdge { edge: String, missing: String },
    KindMismatch { edge: String, detail: String },
    DuplicateTriple { edge: String, existing: String },
    InvalidProcessName { node: String, name: String },
}

impl fmt::Display for IntegrityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrityViolation::DuplicateId { id } => write!(f, "duplicate id {id}"),
            IntegrityViolation::DanglingEdge { edge, missing } => {
                write!(f, "edge {edge} points at missing node {missing}")
            }
            IntegrityViolation::KindMismatch { edge, detail } => write!(f, "edge {edge}: {detail}"),
            IntegrityViolation::DuplicateTriple { edge, existing } => {
                write!(f, "edge {edge} duplicates {existing}")
            }
            IntegrityViolation::InvalidProcessName { node, name } => {
                write!(f, "process node {node} has invalid goal name {name:?}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed graph file: {0}")]
    Malformed(String),
    #[error("integrity violation: {0}")]
    Integrity(IntegrityViolation),
    #[error("unknown goal {0}")]
    UnknownGoal(String),
    #[error("process {goal} has no constraint {key}")]
    UnknownConstraint { goal: String, key: String },
    #[error("constraint {key} holds {expected} values, got {found}")]
    ValueKindMismatch { key: String, expected: String, found: String },
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

/// Graph with referential integrity. Node and edge maps are keyed by id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<String, Edge>,
    out_edges: BTreeMap<String, BTreeSet<String>>,
    processes: BTreeMap<String, String>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph, failing on the first integrity violation.
    pub fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut g = Self::new();
        for n in nodes {
            g.insert_node(n)?;
        }
        for e in edges {
            g.insert_edge(e)?;
        }
        Ok(g)
    }

    /// Default ontology: the three catalog processes, their resources and a
    /// constraint node for every catalog key.
    pub fn default_ontology() -> Self {
        Self::from_json(DEFAULT_ONTOLOGY).expect("embedded ontology is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
        Self::from_parts(file.nodes, file.edges)
    }

    /// Canonical pretty JSON.
    pub fn to_json(&self) -> String {
        let file = GraphFile {
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.values().cloned().collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("graph serializes");
        s.push('\n');
        s
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    /// The process node named `goal`.
    pub fn process(&self, goal: &str) -> Option<&Node> {
        self.processes.get(goal).and_then(|id| self.nodes.get(id))
    }

    pub fn outgoing(&self, node_id: &str) -> impl Iterator<Item = &Edge> {
        self.out_edges
            .get(node_id)
            .into_iter()
            .flatten()
            .filter_map(|id| self.edges.get(id))
    }

    pub fn insert_node(&mut self, node: Node) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) || self.edges.contains_key(&node.id) {
            return Err(GraphError::Integrity(IntegrityViolation::DuplicateId { id: node.id }));
        }
        if node.kind == NodeKind::ManufacturingProcess {
            if Identifier::new(node.name.clone()).is_err() {
                return Err(GraphError::Integrity(IntegrityViolation::InvalidProcessName {
                    node: node.id,
                    name: node.name,
                }));
            }
            if let Some(existing) = self.processes.get(&node.name) {
                return Err(GraphError::Integrity(IntegrityViolation::DuplicateId {
                    id: format!("{} (process name shared with {existing})", node.name),
                }));
            }
            self.processes.insert(node.name.clone(), node.id.clone());
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn insert_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        let fail = |v| Err(GraphError::Integrity(v));
        if self.edges.contains_key(&edge.id) || self.nodes.contains_key(&edge.id) {
            return fail(IntegrityViolation::DuplicateId { id: edge.id });
        }
        let (want_from, want_to) = edge.kind.endpoints();
        for (end, want) in [(&edge.from, want_from), (&edge.to, want_to)] {
            match self.nodes.get(end) {
                None => {
                    return fail(IntegrityViolation::DanglingEdge { edge: edge.id.clone(), missing: end.clone() })
                }
                Some(n) if n.kind != want => {
                    return fail(IntegrityViolation::KindMismatch {
                        edge: edge.id.clone(),
                        detail: format!(
                            "{} expects {} at {end}, found {}",
                            edge.kind.as_str(),
                            want.as_str(),
                            n.kind.as_str()
                        ),
                    })
                }
                Some(_) => {}
            }
        }
        if let Some(existing) = self.outgoing(&edge.from).find(|e| e.to == edge.to && e.kind == edge.kind) {
            return fail(IntegrityViolation::DuplicateTriple { edge: edge.id, existing: existing.id.clone() });
        }
        self.out_edges.entry(edge.from.clone()).or_default().insert(edge.id.clone());
        self.edges.insert(edge.id.clone(), edge);
        Ok(())
    }

    pub(crate) fn edge_mut(&mut self, id: &str) -> Option<&mut Edge> {
        self.edges.get_mut(id)
    }

    /// The `CONSTRAINED_BY` edge from `process_id` to the constraint node for `key`.
    pub fn constraint_edge(&self, process_id: &str, key: &str) -> Option<(&Edge, &Node)> {
        self.outgoing(process_id)
            .filter(|e| e.kind == EdgeKind::ConstrainedBy)
            .filter_map(|e| self.nodes.get(&e.to).map(|n| (e, n)))
            .find(|(_, n)| constraint_key_of(n).as_deref() == Some(key))
    }

    /// Re-checks every invariant from scratch.
    pub fn check_integrity(&self) -> Result<(), IntegrityViolation> {
        match Self::from_parts(self.nodes.values().cloned().collect(), self.edges.values().cloned().collect()) {
            Ok(_) => Ok(()),
            Err(GraphError::Integrity(v)) => Err(v),
            Err(other) => unreachable!("from_parts only reports integrity errors: {other}"),
        }
    }
}

/// The constraint key a PC node stands for: its `key` property, else the
/// name with a lowercased first letter.
pub fn constraint_key_of(node: &Node) -> Option<String> {
    if node.kind != NodeKind::ProcessConstraint {
        return None;
    }
    match node.properties.get("key") {
        Some(PropValue::Text(k)) => Some(k.clone()),
        _ => {
            let mut chars = node.name.chars();
            let first = chars.next()?;
            Some(first.to_lowercase().chain(chars).collect())
        }
    }
}

/// PC display name for a constraint key (`timeLimit` → `TimeLimit`).
pub fn constraint_node_name(key: &ConstraintKey) -> String {
    let mut chars = key.as_str().chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<KnowledgeGraph, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    KnowledgeGraph::from_json(&text)
}

pub fn save_graph(graph: &KnowledgeGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let path = path.as_ref();
    std::fs::write(path, graph.to_json()).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// The goal's process node plus everything one `REQUIRES` or
/// `CONSTRAINED_BY` edge away, with those edges.
pub fn extract_subgraph(graph: &KnowledgeGraph, goal: &str) -> Result<KnowledgeGraph, GraphError> {
    let mp = graph.process(goal).ok_or_else(|| GraphError::UnknownGoal(goal.to_string()))?;
    let mut sub = KnowledgeGraph::new();
    sub.insert_node(mp.clone())?;
    let edges: Vec<&Edge> = graph.outgoing(&mp.id).collect();
    let targets: BTreeSet<&str> = edges.iter().map(|e| e.to.as_str()).collect();
    for id in targets {
        sub.insert_node(graph.nodes[id].clone())?;
    }
    for e in edges {
        sub.insert_edge(e.clone())?;
    }
    Ok(sub)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "change", rename_all = "kebab-case")]
pub enum GraphChange {
    NodeAdded { id: String },
    NodeRemoved { id: String },
    NodeChanged { id: String, property: String, before: Option<PropValue>, after: Option<PropValue> },
    EdgeAdded { id: String },
    EdgeRemoved { id: String },
    EdgeChanged { id: String, property: String, before: Option<PropValue>, after: Option<PropValue> },
}

impl GraphChange {
    pub fn id(&self) -> &str {
        match self {
            GraphChange::NodeAdded { id }
            | GraphChange::NodeRemoved { id }
            | GraphChange::NodeChanged { id, .. }
            | GraphChange::EdgeAdded { id }
            | GraphChange::EdgeRemoved { id }
            | GraphChange::EdgeChanged { id, .. } => id,
        }
    }
}

/// Changes turning `a` into `b`: nodes first, then edges, each by id.
/// Kind, name and endpoint changes show up as the pseudo-properties
/// `kind`, `name`, `from` and `to`.
pub fn graph_diff(a: &KnowledgeGraph, b: &KnowledgeGraph) -> Vec<GraphChange> {
    let mut out = Vec::new();
    let node_ids: BTreeSet<&String> = a.nodes.keys().chain(b.nodes.keys()).collect();
    for id in node_ids {
        match (a.nodes.get(id), b.nodes.get(id)) {
            (None, Some(_)) => out.push(GraphChange::NodeAdded { id: id.clone() }),
            (Some(_), None) => out.push(GraphChange::NodeRemoved { id: id.clone() }),
            (Some(x), Some(y)) => {
                for (property, before, after) in property_changes(node_view(x), node_view(y)) {
                    out.push(GraphChange::NodeChanged { id: id.clone(), property, before, after });
                }
            }
            (None, None) => unreachable!(),
        }
    }
    let edge_ids: BTreeSet<&String> = a.edges.keys().chain(b.edges.keys()).collect();
    for id in edge_ids {
        match (a.edges.get(id), b.edges.get(id)) {
            (None, Some(_)) => out.push(GraphChange::EdgeAdded { id: id.clone() }),
            (Some(_), None) => out.push(GraphChange::EdgeRemoved { id: id.clone() }),
            (Some(x), Some(y)) => {
                for (property, before, after) in property_changes(edge_view(x), edge_view(y)) {
                    out.push(GraphChange::EdgeChanged { id: id.clone(), property, before, after });
                }
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

fn node_view(n: &Node) -> Properties {
    let mut p = n.properties.clone();
    p.insert("kind".into(), n.kind.as_str().into());
    p.insert("name".into(), n.name.clone().into());
    p
}

fn edge_view(e: &Edge) -> Properties {
    let mut p = e.properties.clone();
    p.insert("kind".into(), e.kind.as_str().into());
    p.insert("from".into(), e.from.clone().into());
    p.insert("to".into(), e.to.clone().into());
    p
}

type PropertyChange = (String, Option<PropValue>, Option<PropValue>);

fn property_changes(a: Properties, b: Properties) -> Vec<PropertyChange> {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .filter_map(|k| {
            let (x, y) = (a.get(k), b.get(k));
            (x != y).then(|| (k.clone(), x.cloned(), y.cloned()))
        })
        .collect()
}
