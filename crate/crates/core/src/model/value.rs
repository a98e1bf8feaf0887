use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Identifier, ParseError};
use crate::decimal::Decimal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonOp {
    AtLeast,
    AtMost,
    Exactly,
}

impl ComparisonOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ComparisonOp::AtLeast => ">=",
            ComparisonOp::AtMost => "<=",
            ComparisonOp::Exactly => "==",
        }
    }

    /// Kebab-case name, as used in graph properties.
    pub fn name(self) -> &'static str {
        match self {
            ComparisonOp::AtLeast => "at-least",
            ComparisonOp::AtMost => "at-most",
            ComparisonOp::Exactly => "exactly",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            ">=" => Some(ComparisonOp::AtLeast),
            "<=" => Some(ComparisonOp::AtMost),
            "==" | "=" => Some(ComparisonOp::Exactly),
            _ => None,
        }
    }

    /// Prefix used in rendered constraint strings. `Exactly` renders bare.
    fn render_prefix(self) -> &'static str {
        match self {
            ComparisonOp::Exactly => "",
            other => other.symbol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Milliseconds,
    Seconds,
    Minutes,
    Hours,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 4] = [
        TimeUnit::Milliseconds,
        TimeUnit::Seconds,
        TimeUnit::Minutes,
        TimeUnit::Hours,
    ];

    pub fn plural(self) -> &'static str {
        match self {
            TimeUnit::Milliseconds => "milliseconds",
            TimeUnit::Seconds => "seconds",
            TimeUnit::Minutes => "minutes",
            TimeUnit::Hours => "hours",
        }
    }

    pub fn singular(self) -> &'static str {
        let p = self.plural();
        &p[..p.len() - 1]
    }

    /// Accepts full names (singular or plural) and the usual abbreviations.
    pub fn from_word(word: &str) -> Option<Self> {
        match word.to_ascii_lowercase().as_str() {
            "ms" | "msec" | "millisecond" | "milliseconds" => Some(TimeUnit::Milliseconds),
            "s" | "sec" | "secs" | "second" | "seconds" => Some(TimeUnit::Seconds),
            "min" | "mins" | "minute" | "minutes" => Some(TimeUnit::Minutes),
            "h" | "hr" | "hrs" | "hour" | "hours" => Some(TimeUnit::Hours),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    Medium,
    High,
    Critical,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Low, Level::Medium, Level::High, Level::Critical];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
            Level::Critical => "critical",
        }
    }

    pub fn from_word(word: &str) -> Option<Self> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(word))
    }
}

/// A percentage in `[0, 100]` with a comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PercentBound {
    pub op: ComparisonOp,
    pub value: Decimal,
}

impl PercentBound {
    pub fn new(op: ComparisonOp, value: Decimal) -> Result<Self, String> {
        if value > Decimal::from_u64(100) {
            return Err(format!("percentage {value} exceeds 100"));
        }
        Ok(Self { op, value })
    }

    fn parse(text: &str) -> Result<Self, String> {
        let (op, rest) = split_op(text);
        let rest = rest.trim();
        let number = rest
            .strip_suffix('%')
            .ok_or_else(|| format!("percentage `{text}` is missing its `%` sign"))?
            .trim_end();
        let value: Decimal = number
            .parse()
            .map_err(|e| format!("bad percentage `{text}`: {e}"))?;
        PercentBound::new(op.unwrap_or(ComparisonOp::Exactly), value)
    }
}

impl fmt::Display for PercentBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}%", self.op.render_prefix(), self.value)
    }
}

/// Which variant of [`ConstraintValue`] a catalog key expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    Duration,
    Percent,
    ResourceMap,
    Level,
    Count,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Duration => "duration",
            ValueKind::Percent => "percent",
            ValueKind::ResourceMap => "resource-map",
            ValueKind::Level => "level",
            ValueKind::Count => "count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstraintValue {
    Duration { magnitude: Decimal, unit: TimeUnit },
    Percent(PercentBound),
    Resources(BTreeMap<Identifier, PercentBound>),
    Level(Level),
    Count { op: ComparisonOp, value: u64, unit: String },
}

impl ConstraintValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            ConstraintValue::Duration { .. } => ValueKind::Duration,
            ConstraintValue::Percent(_) => ValueKind::Percent,
            ConstraintValue::Resources(_) => ValueKind::ResourceMap,
            ConstraintValue::Level(_) => ValueKind::Level,
            ConstraintValue::Count { .. } => ValueKind::Count,
        }
    }

    /// Parses the string form of a scalar constraint value.
    ///
    /// The grammar is, in order of precedence:
    /// `[op] NUMBER %` (percentage), `NUMBER TIME-UNIT` (duration),
    /// `[op] INTEGER NOUN...` (count) and a bare level word.
    pub fn parse_str(text: &str) -> Result<Self, String> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err("empty constraint value".into());
        }
        if trimmed.ends_with('%') {
            return PercentBound::parse(trimmed).map(ConstraintValue::Percent);
        }
        if let Some(level) = Level::from_word(trimmed) {
            return Ok(ConstraintValue::Level(level));
        }

        let (op, rest) = split_op(trimmed);
        let rest = rest.trim_start();
        let (number, unit) = rest
            .split_once(char::is_whitespace)
            .map(|(n, u)| (n, u.trim()))
            .ok_or_else(|| format!("unrecognized constraint value `{text}`"))?;
        let magnitude: Decimal = number
            .parse()
            .map_err(|_| format!("unrecognized constraint value `{text}`"))?;

        if let Some(time_unit) = TimeUnit::from_word(unit) {
            if op.is_some() {
                return Err(format!("duration `{text}` cannot carry a comparison operator"));
            }
            if magnitude.is_zero() {
                return Err(format!("duration `{text}` must be positive"));
            }
            return Ok(ConstraintValue::Duration { magnitude, unit: time_unit });
        }

        let value = magnitude
            .as_u64()
            .ok_or_else(|| format!("count `{text}` must be a whole number"))?;
        let unit = normalize_unit(unit)
            .ok_or_else(|| format!("unknown unit in `{text}`"))?;
        Ok(ConstraintValue::Count {
            op: op.unwrap_or(ComparisonOp::Exactly),
            value,
            unit,
        })
    }

    pub(crate) fn from_json(value: &Value, path: &str) -> Result<Self, ParseError> {
        match value {
            Value::String(s) => {
                ConstraintValue::parse_str(s).map_err(|message| ParseError::ValueViolation {
                    path: path.to_string(),
                    message,
                })
            }
            Value::Object(map) => {
                if map.is_empty() {
                    return Err(ParseError::ValueViolation {
                        path: path.to_string(),
                        message: "resource map must not be empty".into(),
                    });
                }
                let mut entries = BTreeMap::new();
                for (name, bound) in map {
                    let entry_path = super::pointer_push(path, name);
                    let resource = Identifier::new(name).map_err(|message| {
                        ParseError::SchemaViolation { path: entry_path.clone(), message }
                    })?;
                    let text = bound.as_str().ok_or_else(|| ParseError::SchemaViolation {
                        path: entry_path.clone(),
                        message: "resource bound must be a string".into(),
                    })?;
                    let bound = PercentBound::parse(text).map_err(|message| {
                        ParseError::ValueViolation { path: entry_path.clone(), message }
                    })?;
                    entries.insert(resource, bound);
                }
                Ok(ConstraintValue::Resources(entries))
            }
            _ => Err(ParseError::SchemaViolation {
                path: path.to_string(),
                message: "constraint value must be a string or a resource object".into(),
            }),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ConstraintValue::Resources(entries) => Value::Object(
                entries
                    .iter()
                    .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
                    .collect(),
            ),
            other => Value::String(other.to_string()),
        }
    }
}

/// Scalar variants render as their string form; resource maps render as
/// `{CPU: <=65%, Memory: <=65%}` (only used for diagnostics).
impl fmt::Display for ConstraintValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintValue::Duration { magnitude, unit } => {
                let word = if *magnitude == Decimal::from_u64(1) {
                    unit.singular()
                } else {
                    unit.plural()
                };
                write!(f, "{magnitude} {word}")
            }
            ConstraintValue::Percent(p) => write!(f, "{p}"),
            ConstraintValue::Resources(entries) => {
                f.write_str("{")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_str("}")
            }
            ConstraintValue::Level(l) => f.write_str(l.as_str()),
            ConstraintValue::Count { op, value, unit } => {
                write!(f, "{}{value} {unit}", op.render_prefix())
            }
        }
    }
}

fn split_op(text: &str) -> (Option<ComparisonOp>, &str) {
    for sym in [">=", "<=", "=="] {
        if let Some(rest) = text.strip_prefix(sym) {
            return (ComparisonOp::from_symbol(sym), rest);
        }
    }
    if let Some(rest) = text.strip_prefix('=') {
        return (Some(ComparisonOp::Exactly), rest);
    }
    (None, text)
}

fn normalize_unit(unit: &str) -> Option<String> {
    let words: Vec<&str> = unit.split_whitespace().collect();
    let first = words.first()?;
    if !first.starts_with(|c: char| c.is_ascii_alphabetic()) {
        return None;
    }
    let ok = words
        .iter()
        .all(|w| w.chars().all(|c| c.is_ascii_alphanumeric() || c == '/' || c == '-'));
    ok.then(|| words.join(" "))
}
