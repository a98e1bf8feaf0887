//! Deterministic lexicon/grammar translator.
//!
//! Goal selection counts distinct catalog lexicon stems present in the intent
//! (at least [`GOAL_THRESHOLD`]; ties are reported, never broken). Each
//! quantity is then bound to the constraint whose cue phrase is nearest,
//! within [`CUE_WINDOW`] tokens of the same sentence. Bindings are assigned
//! greedily by distance, one quantity per key. Unbound quantities are dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use tracing::debug;

use super::text::{find_quantities, phrase_occurrences, stem_phrase, tokenize, Quantity, QuantityMention, Token};
use super::{IntentText, TranslationFailure, TranslationResult};
use crate::catalog::{ConstraintSpec, CuedName, ProcessCatalog, ProcessEntry};
use crate::model::{
    canonical_string, Action, ConstraintMap, ConstraintValue, Identifier, Mode, PercentBound,
    RequirementModel, Trigger, ValueKind,
};

pub const GOAL_THRESHOLD: usize = 2;
pub const CUE_WINDOW: usize = 6;

/// Outcome of goal scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoalMatch {
    Selected { goal: Identifier, score: usize },
    NoMatch { best_score: usize },
    Ambiguous { candidates: Vec<Identifier>, score: usize },
}

pub fn select_goal(intent: &IntentText, catalog: &ProcessCatalog) -> GoalMatch {
    score_goals(&tokenize(intent.as_str()), catalog)
}

fn score_goals(tokens: &[Token], catalog: &ProcessCatalog) -> GoalMatch {
    let stems: BTreeSet<&str> = tokens.iter().map(|t| t.stem.as_str()).collect();
    let scores: Vec<(usize, &Identifier)> = catalog
        .processes
        .iter()
        .map(|p| {
            let lexicon: BTreeSet<String> = p.lexicon.iter().map(|w| super::text::stem(w)).collect();
            (lexicon.iter().filter(|s| stems.contains(s.as_str())).count(), &p.goal)
        })
        .collect();
    let best = scores.iter().map(|(s, _)| *s).max().unwrap_or(0);
    if best < GOAL_THRESHOLD {
        return GoalMatch::NoMatch { best_score: best };
    }
    let top: Vec<Identifier> = scores
        .iter()
        .filter(|(s, _)| *s == best)
        .map(|(_, g)| (*g).clone())
        .collect();
    if top.len() > 1 {
        GoalMatch::Ambiguous { candidates: top, score: best }
    } else {
        GoalMatch::Selected { goal: top[0].clone(), score: best }
    }
}

/// Translates with the rule backend and records wall-clock latency.
pub fn translate_rule_based(intent: &IntentText, catalog: &ProcessCatalog) -> TranslationResult {
    let started = Instant::now();
    let outcome = rule_model(intent, catalog);
    let latency_ms = started.elapsed().as_secs_f64() * 1000.0;
    match outcome {
        Ok(model) => TranslationResult::success(canonical_string(&model), model, latency_ms),
        Err(failure) => TranslationResult::failure(String::new(), failure, latency_ms),
    }
}

/// The pure part of rule-based translation.
pub fn rule_model(intent: &IntentText, catalog: &ProcessCatalog) -> Result<RequirementModel, TranslationFailure> {
    let tokens = tokenize(intent.as_str());
    let entry = match score_goals(&tokens, catalog) {
        GoalMatch::Selected { goal, .. } => catalog.entry(goal.as_str()).expect("scored goal exists"),
        GoalMatch::NoMatch { best_score } => return Err(TranslationFailure::NoGoalMatch { best_score }),
        GoalMatch::Ambiguous { candidates, .. } => {
            return Err(TranslationFailure::AmbiguousGoal {
                candidates: candidates.iter().map(ToString::to_string).collect(),
            })
        }
    };

    let mode = detect_mode(&tokens, catalog).unwrap_or(entry.default_mode);
    let condition = pick_cued(&tokens, &entry.triggers);
    let action_type = pick_cued(&tokens, &entry.actions);
    let constraint = bind_constraints(intent.as_str(), &tokens, entry);

    Ok(RequirementModel {
        goal: entry.goal.clone(),
        mode,
        trigger: Trigger { condition },
        action: Action { action_type, constraint },
    })
}

fn detect_mode(tokens: &[Token], catalog: &ProcessCatalog) -> Option<Mode> {
    tokens.iter().find_map(|t| {
        catalog
            .mode_cues
            .iter()
            .find(|mc| mc.cues.iter().any(|c| c.eq_ignore_ascii_case(&t.lower)))
            .map(|mc| mc.mode)
    })
}

/// The entry whose cue occurs earliest in the intent; the first entry otherwise.
fn pick_cued(tokens: &[Token], options: &[CuedName]) -> Identifier {
    options
        .iter()
        .filter_map(|opt| {
            opt.cues
                .iter()
                .flat_map(|cue| phrase_occurrences(tokens, &stem_phrase(cue), None))
                .map(|r| r.start)
                .min()
                .map(|pos| (pos, &opt.name))
        })
        .min_by_key(|(pos, _)| *pos)
        .map(|(_, name)| name.clone())
        .unwrap_or_else(|| options[0].name.clone())
}

fn accepts(spec: &ConstraintSpec, quantity: &Quantity) -> bool {
    matches!(
        (spec.kind, quantity),
        (ValueKind::Duration, Quantity::Duration { .. })
            | (ValueKind::Percent, Quantity::Percent { .. })
            | (ValueKind::ResourceMap, Quantity::Percent { .. })
            | (ValueKind::Count, Quantity::Count { .. })
            | (ValueKind::Level, Quantity::Level { .. })
    )
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    distance: usize,
    /// 0 when the cue follows the quantity ("99.9% accuracy"), 1 when it precedes.
    cue_before: u8,
    mention: usize,
    spec: usize,
}

fn bind_constraints(text: &str, tokens: &[Token], entry: &ProcessEntry) -> ConstraintMap {
    let mentions = find_quantities(tokens);
    let cue_stems: Vec<Vec<Vec<String>>> = entry
        .constraints
        .iter()
        .map(|c| c.cues.iter().map(|cue| stem_phrase(cue)).collect())
        .collect();

    let mut candidates = Vec::new();
    for (mi, m) in mentions.iter().enumerate() {
        for (si, spec) in entry.constraints.iter().enumerate() {
            if !accepts(spec, &m.quantity) {
                continue;
            }
            let best = cue_stems[si]
                .iter()
                .flat_map(|cue| phrase_occurrences(tokens, cue, Some(m.sentence)))
                .filter_map(|occ| {
                    if occ.end <= m.tokens.start {
                        Some((m.tokens.start - (occ.end - 1), 1u8))
                    } else if occ.start >= m.tokens.end {
                        Some((occ.start - (m.tokens.end - 1), 0u8))
                    } else {
                        None
                    }
                })
                .filter(|(d, _)| *d <= CUE_WINDOW)
                .min();
            if let Some((distance, cue_before)) = best {
                candidates.push(Candidate { distance, cue_before, mention: mi, spec: si });
            }
        }
    }
    candidates.sort();

    let mut bound: BTreeMap<usize, usize> = BTreeMap::new();
    let mut used_specs = BTreeSet::new();
    for c in candidates {
        if bound.contains_key(&c.mention) || used_specs.contains(&c.spec) {
            continue;
        }
        bound.insert(c.mention, c.spec);
        used_specs.insert(c.spec);
    }

    for (mi, m) in mentions.iter().enumerate() {
        if !bound.contains_key(&mi) {
            debug!(quantity = &text[m.span.clone()], "dropping unbound quantity");
        }
    }

    bound
        .into_iter()
        .filter_map(|(mi, si)| {
            let spec = &entry.constraints[si];
            constraint_value(tokens, &mentions[mi], spec).map(|v| (spec.key.clone(), v))
        })
        .collect()
}

fn constraint_value(tokens: &[Token], m: &QuantityMention, spec: &ConstraintSpec) -> Option<ConstraintValue> {
    let op = m.cue.map(|c| c.op()).unwrap_or_else(|| spec.default_op());
    match (&m.quantity, spec.kind) {
        (Quantity::Duration { magnitude, unit }, _) => Some(ConstraintValue::Duration {
            magnitude: *magnitude,
            unit: *unit,
        }),
        (Quantity::Percent { value }, ValueKind::ResourceMap) => {
            let bound = PercentBound::new(op, *value).ok()?;
            let named = named_resources(tokens, m, spec);
            Some(ConstraintValue::Resources(named.into_iter().map(|r| (r, bound)).collect()))
        }
        (Quantity::Percent { value }, _) => PercentBound::new(op, *value).ok().map(ConstraintValue::Percent),
        (Quantity::Count { value }, _) => Some(ConstraintValue::Count {
            op,
            value: *value,
            unit: spec.unit.clone().unwrap_or_default(),
        }),
        (Quantity::Level { level }, _) => Some(ConstraintValue::Level(*level)),
    }
}

/// Resources named after the quantity in its sentence, else before it, else
/// every resource the catalog lists for the key.
fn named_resources(tokens: &[Token], m: &QuantityMention, spec: &ConstraintSpec) -> Vec<Identifier> {
    let in_range = |range: std::ops::Range<usize>| -> Vec<Identifier> {
        spec.resources
            .iter()
            .filter(|r| {
                tokens[range.clone()]
                    .iter()
                    .any(|t| t.sentence == m.sentence && t.lower == r.as_str().to_ascii_lowercase())
            })
            .cloned()
            .collect()
    };
    let after = in_range(m.tokens.end..tokens.len());
    if !after.is_empty() {
        return after;
    }
    let before = in_range(0..m.tokens.start);
    if !before.is_empty() {
        return before;
    }
    spec.resources.clone()
}
