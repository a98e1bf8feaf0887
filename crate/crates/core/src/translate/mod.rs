//! Natural-language intent → requirement model translation.
//!
//! Two interchangeable backends implement [`TranslationBackend`]: the
//! deterministic [`RuleTranslator`] and the HTTP [`RemoteTranslator`] that
//! prompts a completion endpoint.

mod prompt;
mod remote;
mod rules;
mod text;

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::catalog::ProcessCatalog;
use crate::model::{parse_requirement_model, ParseError, RequirementModel};

pub use prompt::{build_prompt, extract_json_candidate, PromptTemplate, INSTRUCTION};
pub use remote::{translate_remote, EndpointConfig, EndpointShape, PromptMode, RemoteTranslator, API_KEY_ENV, BASE_URL_ENV};
pub use rules::{rule_model, select_goal, translate_rule_based, GoalMatch, CUE_WINDOW, GOAL_THRESHOLD};
pub use text::{stem, CueCategory, Quantity, QuantityMention};

pub const MAX_INTENT_CHARS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntentError {
    #[error("intent is empty")]
    Empty,
    #[error("intent has {0} characters; the limit is {MAX_INTENT_CHARS}")]
    TooLong(usize),
}

/// A non-blank intent of at most [`MAX_INTENT_CHARS`] characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntentText(String);

impl IntentText {
    pub fn new(text: impl Into<String>) -> Result<Self, IntentError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(IntentError::Empty);
        }
        let n = text.chars().count();
        if n > MAX_INTENT_CHARS {
            return Err(IntentError::TooLong(n));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Serialize for IntentText {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for IntentText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        IntentText::new(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Quantities found in an intent, in textual order.
pub fn find_quantity_mentions(intent: &IntentText) -> Vec<QuantityMention> {
    text::find_quantities(&text::tokenize(intent.as_str()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum TranslationFailure {
    NoGoalMatch { best_score: usize },
    AmbiguousGoal { candidates: Vec<String> },
    InvalidOutput { reason: String },
    TransportFailure { message: String, attempts: u32 },
}

impl TranslationFailure {
    pub fn kind(&self) -> &'static str {
        match self {
            TranslationFailure::NoGoalMatch { .. } => "NoGoalMatch",
            TranslationFailure::AmbiguousGoal { .. } => "AmbiguousGoal",
            TranslationFailure::InvalidOutput { .. } => "InvalidOutput",
            TranslationFailure::TransportFailure { .. } => "TransportFailure",
        }
    }
}

/// Result of one translation. Exactly one of `model`/`failure` is set and the
/// backend's verbatim output is always kept for scoring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationResult {
    raw_output: String,
    model: Option<RequirementModel>,
    failure: Option<TranslationFailure>,
    latency_ms: f64,
}

impl TranslationResult {
    pub fn success(raw_output: String, model: RequirementModel, latency_ms: f64) -> Self {
        Self { raw_output, model: Some(model), failure: None, latency_ms }
    }

    pub fn failure(raw_output: String, failure: TranslationFailure, latency_ms: f64) -> Self {
        Self { raw_output, model: None, failure: Some(failure), latency_ms }
    }

    /// Interprets raw backend text: a model iff a JSON block is found and it
    /// parses as a requirement model.
    pub fn from_raw(raw_output: String, latency_ms: f64) -> Self {
        match parse_raw_output(&raw_output) {
            Ok(model) => Self::success(raw_output, model, latency_ms),
            Err(reason) => Self::failure(
                raw_output,
                TranslationFailure::InvalidOutput { reason },
                latency_ms,
            ),
        }
    }

    pub fn raw_output(&self) -> &str {
        &self.raw_output
    }

    pub fn model(&self) -> Option<&RequirementModel> {
        self.model.as_ref()
    }

    pub fn failure_kind(&self) -> Option<&TranslationFailure> {
        self.failure.as_ref()
    }

    pub fn latency_ms(&self) -> f64 {
        self.latency_ms
    }

    pub fn is_success(&self) -> bool {
        self.model.is_some()
    }
}

/// JSON-validity check shared by the remote backend and evaluation.
pub fn parse_raw_output(raw: &str) -> Result<RequirementModel, String> {
    let candidate = extract_json_candidate(raw).ok_or_else(|| "no JSON object in output".to_string())?;
    parse_requirement_model(candidate).map_err(|e: ParseError| e.to_string())
}

pub trait TranslationBackend: Send + Sync {
    fn name(&self) -> &str;
    fn translate(&self, intent: &IntentText) -> TranslationResult;
}

#[derive(Debug, Clone)]
pub struct RuleTranslator {
    catalog: Arc<ProcessCatalog>,
}

impl RuleTranslator {
    pub fn new(catalog: Arc<ProcessCatalog>) -> Self {
        Self { catalog }
    }
}

impl TranslationBackend for RuleTranslator {
    fn name(&self) -> &str {
        "rule"
    }

    fn translate(&self, intent: &IntentText) -> TranslationResult {
        translate_rule_based(intent, &self.catalog)
    }
}
