use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{constraint_key_of, constraint_node_name, Edge, EdgeKind, GraphError, KnowledgeGraph, Node, NodeKind, PropValue};
use crate::decimal::Decimal;
use crate::model::{ComparisonOp, ConstraintKey, ConstraintValue, RequirementModel};

/// Edge properties written for one constraint, without `updatedAt`.
pub type Setting = BTreeMap<String, PropValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApplyMode {
    /// Unknown constraints are errors and the graph is left untouched.
    #[default]
    Strict,
    /// Missing constraint nodes and edges are created.
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateEntry {
    pub key: String,
    pub edge_id: String,
    pub before: Option<Setting>,
    pub after: Setting,
}

impl UpdateEntry {
    pub fn changed(&self) -> bool {
        self.before.as_ref() != Some(&self.after)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateReport {
    pub goal: String,
    pub entries: Vec<UpdateEntry>,
    /// Node and edge ids created in permissive mode.
    pub created: Vec<String>,
    pub timestamp: String,
}

fn resource_prefix(name: &str) -> String {
    match name {
        "CPU" => "cpu".into(),
        "Memory" => "mem".into(),
        other => other.to_ascii_lowercase(),
    }
}

/// Edge properties encoding a constraint value. Durations are upper bounds.
pub fn constraint_setting(value: &ConstraintValue) -> Setting {
    let mut s = Setting::new();
    let mut put = |k: &str, v: PropValue| {
        s.insert(k.to_string(), v);
    };
    match value {
        ConstraintValue::Duration { magnitude, unit } => {
            put("op", ComparisonOp::AtMost.name().into());
            put("value", (*magnitude).into());
            put("unit", unit.plural().into());
        }
        ConstraintValue::Percent(b) => {
            put("op", b.op.name().into());
            put("value", b.value.into());
            put("unit", "%".into());
        }
        ConstraintValue::Count { op, value, unit } => {
            put("op", op.name().into());
            put("value", Decimal::from_u64(*value).into());
            put("unit", unit.as_str().into());
        }
        ConstraintValue::Level(level) => {
            put("op", ComparisonOp::Exactly.name().into());
            put("value", level.as_str().into());
            put("unit", "level".into());
        }
        ConstraintValue::Resources(map) => {
            for (name, b) in map {
                let p = resource_prefix(name.as_str());
                put(&format!("{p}Op"), b.op.name().into());
                put(&format!("{p}Value"), b.value.into());
            }
            put("unit", "%".into());
        }
    }
    s
}

enum Target {
    Existing { edge_id: String },
    Create { pc: Option<Node>, edge: Edge },
}

/// Writes every constraint of `model` onto the goal's `CONSTRAINED_BY` edges.
/// `updatedAt` moves to `at` only on edges whose values change. All checks
/// run before the first write, so a failed call leaves `graph` unchanged.
pub fn apply_requirement(
    graph: &mut KnowledgeGraph,
    model: &RequirementModel,
    mode: ApplyMode,
    at: DateTime<Utc>,
) -> Result<UpdateReport, GraphError> {
    let goal = model.goal.as_str();
    let mp = graph.process(goal).ok_or_else(|| GraphError::UnknownGoal(goal.to_string()))?.clone();

    let mut keys: Vec<(&ConstraintKey, &ConstraintValue)> = model.action.constraint.iter().collect();
    keys.sort_by(|a, b| a.0.cmp(b.0));

    let mut plan = Vec::with_capacity(keys.len());
    let mut reserved: Vec<String> = Vec::new();
    for (key, value) in keys {
        let target = match graph.constraint_edge(&mp.id, key.as_str()) {
            Some((edge, pc)) => {
                check_kind(pc, key, value)?;
                Target::Existing { edge_id: edge.id.clone() }
            }
            None if mode == ApplyMode::Strict => {
                return Err(GraphError::UnknownConstraint { goal: goal.to_string(), key: key.to_string() })
            }
            None => {
                let shared = graph
                    .nodes_of_kind(NodeKind::ProcessConstraint)
                    .find(|n| constraint_key_of(n).as_deref() == Some(key.as_str()));
                let (pc, pc_id) = match shared {
                    Some(n) => {
                        check_kind(n, key, value)?;
                        (None, n.id.clone())
                    }
                    None => {
                        let id = fresh_id(graph, &reserved, &format!("pc:{key}"));
                        reserved.push(id.clone());
                        let mut props = super::Properties::new();
                        props.insert("key".into(), key.as_str().into());
                        props.insert("valueKind".into(), value.kind().as_str().into());
                        let node = Node {
                            id: id.clone(),
                            kind: NodeKind::ProcessConstraint,
                            name: constraint_node_name(key),
                            properties: props,
                        };
                        (Some(node), id)
                    }
                };
                let edge_id = fresh_id(graph, &reserved, &format!("cb:{goal}:{key}"));
                reserved.push(edge_id.clone());
                let edge = Edge {
                    id: edge_id,
                    kind: EdgeKind::ConstrainedBy,
                    from: mp.id.clone(),
                    to: pc_id,
                    properties: super::Properties::new(),
                };
                Target::Create { pc, edge }
            }
        };
        plan.push((key, constraint_setting(value), target));
    }

    let timestamp = at.to_rfc3339_opts(SecondsFormat::Secs, true);
    let mut created = Vec::new();
    let mut entries = Vec::with_capacity(plan.len());
    for (key, after, target) in plan {
        let edge_id = match target {
            Target::Existing { edge_id } => edge_id,
            Target::Create { pc, edge } => {
                if let Some(node) = pc {
                    created.push(node.id.clone());
                    graph.insert_node(node).expect("fresh constraint node");
                }
                created.push(edge.id.clone());
                let id = edge.id.clone();
                graph.insert_edge(edge).expect("fresh constraint edge");
                id
            }
        };
        let edge = graph.edge_mut(&edge_id).expect("planned edge exists");
        let before: Setting = after
            .keys()
            .filter_map(|k| edge.properties.get(k).map(|v| (k.clone(), v.clone())))
            .collect();
        let before = (!before.is_empty()).then_some(before);
        let entry = UpdateEntry { key: key.to_string(), edge_id, before, after };
        if entry.changed() {
            edge.properties.extend(entry.after.clone());
            edge.properties.insert("updatedAt".into(), timestamp.clone().into());
        }
        entries.push(entry);
    }

    Ok(UpdateReport { goal: goal.to_string(), entries, created, timestamp })
}

fn check_kind(pc: &Node, key: &ConstraintKey, value: &ConstraintValue) -> Result<(), GraphError> {
    match pc.properties.get("valueKind") {
        Some(PropValue::Text(expected)) if expected != value.kind().as_str() => Err(GraphError::ValueKindMismatch {
            key: key.to_string(),
            expected: expected.clone(),
            found: value.kind().as_str().to_string(),
        }),
        _ => Ok(()),
    }
}

fn fresh_id(graph: &KnowledgeGraph, reserved: &[String], base: &str) -> String {
    let taken = |id: &str| graph.node(id).is_some() || graph.edge(id).is_some() || reserved.iter().any(|r| r == id);
    if !taken(base) {
        return base.to_string();
    }
    (2..).map(|n| format!("{base}#{n}")).find(|id| !taken(id)).expect("unbounded")
}
