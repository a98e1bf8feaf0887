use serde::{Deserialize, Serialize};

use super::{pointer_push, ConstraintValue, RequirementModel, ValueKind};
use crate::catalog::ProcessCatalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationCode {
    UnknownProcess,
    UnknownTrigger,
    UnknownAction,
    UnknownKeyForProcess,
    ValueKindMismatch,
    UnknownResource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self { valid: violations.is_empty(), violations }
    }
}

/// Checks a parsed model against the catalog. Every problem is reported;
/// an unknown goal short-circuits the per-key checks since there is no
/// vocabulary to check them against.
pub fn validate(model: &RequirementModel, catalog: &ProcessCatalog) -> ValidationReport {
    let mut violations = Vec::new();
    let Some(entry) = catalog.entry(model.goal.as_str()) else {
        violations.push(Violation {
            path: "/goal".into(),
            code: ViolationCode::UnknownProcess,
            message: format!("no process named {} in the catalog", model.goal),
        });
        return ValidationReport::from_violations(violations);
    };

    if !entry.triggers.iter().any(|t| t.name == model.trigger.condition) {
        violations.push(Violation {
            path: "/trigger/condition".into(),
            code: ViolationCode::UnknownTrigger,
            message: format!("{} is not a trigger of {}", model.trigger.condition, entry.goal),
        });
    }
    if !entry.actions.iter().any(|a| a.name == model.action.action_type) {
        violations.push(Violation {
            path: "/action/type".into(),
            code: ViolationCode::UnknownAction,
            message: format!("{} is not an action of {}", model.action.action_type, entry.goal),
        });
    }

    for (key, value) in &model.action.constraint {
        let path = pointer_push("/action/constraint", key.as_str());
        let Some(spec) = entry.constraint(key.as_str()) else {
            violations.push(Violation {
                path,
                code: ViolationCode::UnknownKeyForProcess,
                message: format!("{key} is not a constraint of {}", entry.goal),
            });
            continue;
        };
        if value.kind() != spec.kind {
            violations.push(Violation {
                path,
                code: ViolationCode::ValueKindMismatch,
                message: format!("{key} expects a {:?} value, got {:?}", spec.kind, value.kind()),
            });
            continue;
        }
        if let (ValueKind::ResourceMap, ConstraintValue::Resources(entries)) = (spec.kind, value) {
            for resource in entries.keys() {
                if !spec.resources.contains(resource) {
                    violations.push(Violation {
                        path: pointer_push(&path, resource.as_str()),
                        code: ViolationCode::UnknownResource,
                        message: format!("{resource} is not a resource of {key}"),
                    });
                }
            }
        }
    }
    ValidationReport::from_violations(violations)
}
