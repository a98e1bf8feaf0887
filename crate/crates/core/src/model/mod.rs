//! The JSON requirement model exchanged by every stage of the pipeline.
//!
//! A requirement model has exactly four top-level fields:
//!
//! ```json
//! {
//!   "goal": "UpdateInternalFleetSchedule",
//!   "mode": "automated",
//!   "trigger": { "condition": "FleetChangeDetected" },
//!   "action": {
//!     "type": "ApplyScheduleUpdate",
//!     "constraint": { "timeLimit": "5 seconds", "accuracy": ">=99.9%" }
//!   }
//! }
//! ```
//!
//! Parsing is strict (unknown fields are rejected) and numbers are held as
//! exact decimals. The constraint map keeps input order, but equality between
//! models ignores it; [`canonicalize`] fixes the order for byte comparison.

mod validate;
mod value;

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

pub use validate::{validate, ValidationReport, Violation, ViolationCode};
pub use value::{ComparisonOp, ConstraintValue, Level, PercentBound, TimeUnit, ValueKind};

/// A PascalCase identifier (`[A-Z][A-Za-z0-9]*`): goals, trigger conditions,
/// action types and resource names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Identifier(String);

impl Identifier {
    pub fn new(s: impl Into<String>) -> Result<Self, String> {
        let s = s.into();
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_uppercase() => {}
            _ => return Err(format!("`{s}` is not a PascalCase identifier")),
        }
        if !chars.all(|c| c.is_ascii_alphanumeric()) {
            return Err(format!("`{s}` is not a PascalCase identifier"));
        }
        Ok(Self(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A camelCase constraint name (`[a-z][A-Za-z0-9]*`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintKey(String);

impl ConstraintKey {
    pub fn new(s: impl Into<String>) -> Result<Self, String> {
        let s = s.into();
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_lowercase() => {}
            _ => return Err(format!("`{s}` is not a camelCase constraint key")),
        }
        if !chars.all(|c| c.is_ascii_alphanumeric()) {
            return Err(format!("`{s}` is not a camelCase constraint key"));
        }
        Ok(Self(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConstraintKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.0)
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                <$ty>::new(String::deserialize(d)?).map_err(serde::de::Error::custom)
            }
        }
    };
}
string_serde!(Identifier);
string_serde!(ConstraintKey);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Automated,
    Manual,
    SemiAutomated,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Automated, Mode::Manual, Mode::SemiAutomated];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Automated => "automated",
            Mode::Manual => "manual",
            Mode::SemiAutomated => "semi-automated",
        }
    }

    pub fn from_str_opt(s: &str) -> Option<Self> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger {
    pub condition: Identifier,
}

/// Ordered constraint map. `IndexMap` equality ignores order.
pub type ConstraintMap = IndexMap<ConstraintKey, ConstraintValue>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub action_type: Identifier,
    pub constraint: ConstraintMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequirementModel {
    pub goal: Identifier,
    pub mode: Mode,
    pub trigger: Trigger,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed JSON: {message}")]
    MalformedJson { message: String },
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("value violation at {path}: {message}")]
    ValueViolation { path: String, message: String },
}

impl ParseError {
    /// JSON pointer of the first offending location (empty for malformed JSON).
    pub fn path(&self) -> &str {
        match self {
            ParseError::MalformedJson { .. } => "",
            ParseError::SchemaViolation { path, .. } | ParseError::ValueViolation { path, .. } => {
                path
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::MalformedJson { .. } => "MalformedJson",
            ParseError::SchemaViolation { .. } => "SchemaViolation",
            ParseError::ValueViolation { .. } => "ValueViolation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JsonFormat {
    /// Two-space indentation, LF line endings.
    #[default]
    Pretty,
    /// Single line, no insignificant whitespace.
    Compact,
}

/// Appends one RFC 6901 reference token to a JSON pointer.
pub fn pointer_push(base: &str, token: &str) -> String {
    format!("{base}/{}", token.replace('~', "~0").replace('/', "~1"))
}

pub fn parse_requirement_model(text: &str) -> Result<RequirementModel, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::MalformedJson {
        message: e.to_string(),
    })?;
    RequirementModel::from_json(&value)
}

pub fn parse_constraint_value(
    key: &ConstraintKey,
    text: &str,
) -> Result<ConstraintValue, ParseError> {
    ConstraintValue::parse_str(text).map_err(|message| ParseError::ValueViolation {
        path: pointer_push("/action/constraint", key.as_str()),
        message,
    })
}

/// Sorts constraint keys lexicographically. Values are already normalized
/// by construction, so this is the only reordering needed.
pub fn canonicalize(model: &RequirementModel) -> RequirementModel {
    let mut out = model.clone();
    out.action.constraint.sort_keys();
    out
}

/// Serializes in the model's own constraint order.
pub fn serialize(model: &RequirementModel, format: JsonFormat) -> String {
    let value = model.to_json();
    match format {
        JsonFormat::Pretty => serde_json::to_string_pretty(&value),
        JsonFormat::Compact => serde_json::to_string(&value),
    }
    .expect("serializing a JSON value cannot fail")
}

/// Compact serialization of the canonical form; byte equality of this string
/// is exact-match equality.
pub fn canonical_string(model: &RequirementModel) -> String {
    serialize(&canonicalize(model), JsonFormat::Compact)
}

fn object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ParseError> {
    value.as_object().ok_or_else(|| ParseError::SchemaViolation {
        path: path.to_string(),
        message: "expected an object".into(),
    })
}

/// Rejects fields outside `allowed`, then checks that every allowed field is
/// present. Reports the first problem in document order.
fn check_fields(map: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), ParseError> {
    if let Some(extra) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ParseError::SchemaViolation {
            path: pointer_push(path, extra),
            message: format!("unexpected field `{extra}`"),
        });
    }
    if let Some(missing) = allowed.iter().find(|k| !map.contains_key(**k)) {
        return Err(ParseError::SchemaViolation {
            path: pointer_push(path, missing),
            message: format!("missing field `{missing}`"),
        });
    }
    Ok(())
}

fn identifier_field(map: &Map<String, Value>, field: &str, base: &str) -> Result<Identifier, ParseError> {
    let path = pointer_push(base, field);
    let s = map[field].as_str().ok_or_else(|| ParseError::SchemaViolation {
        path: path.clone(),
        message: "expected a string".into(),
    })?;
    Identifier::new(s).map_err(|message| ParseError::SchemaViolation { path, message })
}

impl RequirementModel {
    pub fn from_json(value: &Value) -> Result<Self, ParseError> {
        let root = object(value, "")?;
        check_fields(root, &["goal", "mode", "trigger", "action"], "")?;

        let goal = identifier_field(root, "goal", "")?;
        let mode = match root["mode"].as_str() {
            Some(s) => Mode::from_str_opt(s).ok_or_else(|| ParseError::SchemaViolation {
                path: "/mode".into(),
                message: format!("unknown mode `{s}`"),
            })?,
            None => {
                return Err(ParseError::SchemaViolation {
                    path: "/mode".into(),
                    message: "expected a string".into(),
                })
            }
        };

        let trigger = object(&root["trigger"], "/trigger")?;
        check_fields(trigger, &["condition"], "/trigger")?;
        let condition = identifier_field(trigger, "condition", "/trigger")?;

        let action = object(&root["action"], "/action")?;
        check_fields(action, &["type", "constraint"], "/action")?;
        let action_type = identifier_field(action, "type", "/action")?;
        let raw_constraints = object(&action["constraint"], "/action/constraint")?;
        let mut constraint = ConstraintMap::with_capacity(raw_constraints.len());
        for (name, raw) in raw_constraints {
            let path = pointer_push("/action/constraint", name);
            let key = ConstraintKey::new(name.as_str())
                .map_err(|message| ParseError::SchemaViolation { path: path.clone(), message })?;
            let value = ConstraintValue::from_json(raw, &path)?;
            constraint.insert(key, value);
        }

        Ok(RequirementModel {
            goal,
            mode,
            trigger: Trigger { condition },
            action: Action { action_type, constraint },
        })
    }

    pub fn to_json(&self) -> Value {
        let constraint: Map<String, Value> = self
            .action
            .constraint
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_json()))
            .collect();
        let mut trigger = Map::new();
        trigger.insert("condition".into(), Value::String(self.trigger.condition.to_string()));
        let mut action = Map::new();
        action.insert("type".into(), Value::String(self.action.action_type.to_string()));
        action.insert("constraint".into(), Value::Object(constraint));
        let mut root = Map::new();
        root.insert("goal".into(), Value::String(self.goal.to_string()));
        root.insert("mode".into(), Value::String(self.mode.as_str().into()));
        root.insert("trigger".into(), Value::Object(trigger));
        root.insert("action".into(), Value::Object(action));
        Value::Object(root)
    }
}

impl Serialize for RequirementModel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RequirementModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(d)?;
        RequirementModel::from_json(&value).map_err(serde::de::Error::custom)
    }
}
