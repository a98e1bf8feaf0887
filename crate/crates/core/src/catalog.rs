//! Per-process registry of goals, triggers, actions and constraint vocabularies.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ComparisonOp, ConstraintKey, Identifier, Mode, TimeUnit, ValueKind};

const DEFAULT_CATALOG: &str = include_str!("../data/catalog.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed catalog: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid catalog: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCue {
    pub mode: Mode,
    pub cues: Vec<String>,
}

/// A trigger condition or action type together with the phrases that select it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuedName {
    pub name: Identifier,
    #[serde(default)]
    pub cues: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub key: ConstraintKey,
    pub kind: ValueKind,
    /// Operator assumed when an intent states a bound without a cue phrase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_op: Option<ComparisonOp>,
    /// Time unit (durations) or counted noun (counts).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub cues: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resources: Vec<Identifier>,
}

impl ConstraintSpec {
    pub fn default_op(&self) -> ComparisonOp {
        self.default_op.unwrap_or(ComparisonOp::Exactly)
    }

    /// Time unit for duration keys, defaulting to seconds.
    pub fn time_unit(&self) -> TimeUnit {
        self.unit.as_deref().and_then(TimeUnit::from_word).unwrap_or(TimeUnit::Seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessEntry {
    pub goal: Identifier,
    #[serde(default)]
    pub description: String,
    pub lexicon: Vec<String>,
    pub default_mode: Mode,
    /// The first trigger is the default.
    pub triggers: Vec<CuedName>,
    /// The first action is the default.
    pub actions: Vec<CuedName>,
    pub constraints: Vec<ConstraintSpec>,
}

impl ProcessEntry {
    pub fn constraint(&self, key: &str) -> Option<&ConstraintSpec> {
        self.constraints.iter().find(|c| c.key.as_str() == key)
    }

    pub fn default_trigger(&self) -> &Identifier {
        &self.triggers[0].name
    }

    pub fn default_action(&self) -> &Identifier {
        &self.actions[0].name
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessCatalog {
    pub version: String,
    #[serde(default)]
    pub mode_cues: Vec<ModeCue>,
    pub processes: Vec<ProcessEntry>,
}

impl Default for ProcessCatalog {
    /// The three logistics processes shipped with the crate.
    fn default() -> Self {
        Self::from_json(DEFAULT_CATALOG).expect("embedded catalog is valid")
    }
}

impl ProcessCatalog {
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let catalog: ProcessCatalog = serde_json::from_str(text)?;
        catalog.check()?;
        Ok(catalog)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn entry(&self, goal: &str) -> Option<&ProcessEntry> {
        self.processes.iter().find(|p| p.goal.as_str() == goal)
    }

    pub fn goals(&self) -> impl Iterator<Item = &Identifier> {
        self.processes.iter().map(|p| &p.goal)
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }

    fn check(&self) -> Result<(), CatalogError> {
        let mut goals = HashSet::new();
        for p in &self.processes {
            if !goals.insert(p.goal.as_str()) {
                return Err(CatalogError::Invalid(format!("duplicate process {}", p.goal)));
            }
            if p.triggers.is_empty() || p.actions.is_empty() {
                return Err(CatalogError::Invalid(format!(
                    "process {} needs at least one trigger and one action",
                    p.goal
                )));
            }
            let mut keys = HashSet::new();
            for c in &p.constraints {
                if !keys.insert(c.key.as_str()) {
                    return Err(CatalogError::Invalid(format!(
                        "duplicate constraint {} in {}",
                        c.key, p.goal
                    )));
                }
                if c.kind == ValueKind::ResourceMap && c.resources.is_empty() {
                    return Err(CatalogError::Invalid(format!(
                        "resource constraint {} in {} lists no resources",
                        c.key, p.goal
                    )));
                }
                if c.kind == ValueKind::Duration {
                    let unit = c.unit.as_deref().unwrap_or("seconds");
                    if crate::model::TimeUnit::from_word(unit).is_none() {
                        return Err(CatalogError::Invalid(format!(
                            "constraint {} in {} has unknown time unit `{unit}`",
                            c.key, p.goal
                        )));
                    }
                }
                if c.kind == ValueKind::Count && c.unit.is_none() {
                    return Err(CatalogError::Invalid(format!(
                        "count constraint {} in {} needs a unit",
                        c.key, p.goal
                    )));
                }
            }
        }
        Ok(())
    }
}
