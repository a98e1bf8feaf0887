//! Synthetic intent/model pairs built from a template pool.
//!
//! Every sample is generated from a sampled gold model, so the intent text is
//! a rendering of the model and never the other way round.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::catalog::{ConstraintSpec, ProcessCatalog, ProcessEntry};
use crate::decimal::Decimal;
use crate::model::{
    canonical_string, canonicalize, parse_requirement_model, Action, ComparisonOp, ConstraintMap,
    ConstraintValue, Identifier, Level, Mode, PercentBound, RequirementModel, Trigger, ValueKind,
};

const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.json");

/// Percent values drawn when a key has no override.
pub const PERCENT_VALUES: [&str; 6] = ["90", "95", "99", "99.9", "99.99", "100"];
/// Bounds drawn for resource-utilization keys.
pub const RESOURCE_VALUES: [&str; 4] = ["50", "65", "75", "80"];
pub const MIN_KEYS: usize = 2;
pub const MAX_KEYS: usize = 5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("unknown process {0}")]
    UnknownProcess(String),
    #[error("template pool: {0}")]
    Templates(String),
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Voice {
    Active,
    Passive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub voice: Voice,
    pub pattern: String,
    /// The value may be rendered without an operator phrase when the operator
    /// is the key's default.
    #[serde(default)]
    pub bare_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessTemplates {
    pub goal: Identifier,
    pub heads: Vec<Pattern>,
    pub triggers: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub actions: BTreeMap<String, Vec<String>>,
    pub constraints: BTreeMap<String, Vec<Pattern>>,
    /// Per-key replacements for the default value sets.
    #[serde(default)]
    pub values: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplatePool {
    pub version: String,
    pub mode_weights: BTreeMap<Mode, u32>,
    pub mode_phrases: BTreeMap<Mode, Vec<String>>,
    pub op_phrases: BTreeMap<ComparisonOp, Vec<String>>,
    pub processes: Vec<ProcessTemplates>,
}

impl Default for TemplatePool {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_TEMPLATES).expect("embedded template pool is valid")
    }
}

impl TemplatePool {
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        serde_json::from_str(text).map_err(|e| DatasetError::Templates(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn process(&self, goal: &str) -> Option<&ProcessTemplates> {
        self.processes.iter().find(|p| p.goal.as_str() == goal)
    }

    /// Checks the pool covers everything the catalog entry can produce.
    pub fn check_against(&self, entry: &ProcessEntry) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Templates(format!("{}: {m}", entry.goal)));
        let Some(t) = self.process(entry.goal.as_str()) else {
            return bad("no templates".into());
        };
        if t.heads.is_empty() {
            return bad("no head patterns".into());
        }
        if self.mode_weights.values().all(|w| *w == 0) {
            return bad("all mode weights are zero".into());
        }
        for (mode, w) in &self.mode_weights {
            if *w > 0 && self.mode_phrases.get(mode).is_none_or(Vec::is_empty) {
                return bad(format!("no phrase for mode {}", mode.as_str()));
            }
        }
        for h in &t.heads {
            if !h.pattern.contains("{mode}") {
                return bad(format!("head without {{mode}}: {}", h.pattern));
            }
        }
        for trig in &entry.triggers {
            if t.triggers.get(trig.name.as_str()).is_none_or(Vec::is_empty) {
                return bad(format!("no phrase for trigger {}", trig.name));
            }
        }
        for spec in &entry.constraints {
            let Some(clauses) = t.constraints.get(spec.key.as_str()).filter(|c| !c.is_empty()) else {
                return bad(format!("no clause for key {}", spec.key));
            };
            for c in clauses {
                if !c.pattern.contains("{value}") {
                    return bad(format!("clause without {{value}}: {}", c.pattern));
                }
                if spec.kind == ValueKind::ResourceMap && !c.pattern.contains("{resources}") {
                    return bad(format!("resource clause without {{resources}}: {}", c.pattern));
                }
            }
            if let Some(values) = t.values.get(spec.key.as_str()) {
                if values.is_empty() || values.iter().any(|v| v.parse::<Decimal>().is_err()) {
                    return bad(format!("bad value override for {}", spec.key));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub process: Identifier,
    pub intent: String,
    pub gold: RequirementModel,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub seed: Option<u64>,
    pub catalog_version: Option<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn per_process(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.process.to_string()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessCount {
    pub goal: String,
    pub count: usize,
}

/// Contents of a generation config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub seed: u64,
    pub processes: Vec<ProcessCount>,
    #[serde(default)]
    pub templates: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub dataset: Dataset,
    /// Non-fatal notes, e.g. repeated intent texts when the pool is too small.
    pub warnings: Vec<String>,
}

/// Generates `count` samples per listed process. Same seed, pool and catalog
/// give the same dataset.
pub fn generate_dataset(
    counts: &[ProcessCount],
    seed: u64,
    catalog: &ProcessCatalog,
    pool: &TemplatePool,
) -> Result<Generated, DatasetError> {
    let mut entries = Vec::with_capacity(counts.len());
    for pc in counts {
        let entry = catalog
            .entry(&pc.goal)
            .ok_or_else(|| DatasetError::UnknownProcess(pc.goal.clone()))?;
        pool.check_against(entry)?;
        entries.push((entry, pc.count));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for (entry, count) in entries {
        let templates = pool.process(entry.goal.as_str()).expect("checked above");
        let mut seen = HashSet::new();
        let mut repeats = 0;
        for n in 0..count {
            let (intent, gold) = sample_pair(&mut rng, entry, templates, pool);
            if !seen.insert(intent.clone()) {
                repeats += 1;
            }
            samples.push(Sample {
                id: format!("{}-{n:05}", entry.goal),
                process: entry.goal.clone(),
                intent,
                gold,
            });
        }
        if repeats > 0 {
            let msg = format!(
                "InsufficientTemplates: {repeats} of {count} intents for {} repeat an earlier one",
                entry.goal
            );
            warn!("{msg}");
            warnings.push(msg);
        }
    }

    Ok(Generated {
        dataset: Dataset {
            samples,
            seed: Some(seed),
            catalog_version: Some(catalog.version.clone()),
        },
        warnings,
    })
}

fn sample_pair(
    rng: &mut ChaCha8Rng,
    entry: &ProcessEntry,
    t: &ProcessTemplates,
    pool: &TemplatePool,
) -> (String, RequirementModel) {
    let modes: Vec<(Mode, u32)> = pool.mode_weights.iter().map(|(m, w)| (*m, *w)).collect();
    let mode = modes.choose_weighted(rng, |(_, w)| *w).expect("positive weights").0;
    let mode_phrase = pool.mode_phrases[&mode].choose(rng).expect("checked").clone();

    let trigger = entry.triggers.choose(rng).expect("non-empty triggers");
    let trigger_phrase = t.triggers[trigger.name.as_str()].choose(rng).expect("checked").clone();

    // The default action may go unmentioned; others need a phrase.
    let actions: Vec<_> = entry
        .actions
        .iter()
        .enumerate()
        .filter(|(i, a)| *i == 0 || t.actions.get(a.name.as_str()).is_some_and(|p| !p.is_empty()))
        .map(|(_, a)| a)
        .collect();
    let action = *actions.choose(rng).expect("default action");
    let action_phrase = t
        .actions
        .get(action.name.as_str())
        .and_then(|p| p.choose(rng))
        .cloned()
        .unwrap_or_default();

    let head = t.heads.choose(rng).expect("checked");
    let mut sentences = vec![head
        .pattern
        .replace("{mode}", &mode_phrase)
        .replace("{trigger}", &trigger_phrase)
        .replace("{action}", &action_phrase)];

    let max = MAX_KEYS.min(entry.constraints.len());
    let k = if max >= MIN_KEYS { rng.gen_range(MIN_KEYS..=max) } else { max };
    let picked: Vec<&ConstraintSpec> = entry.constraints.choose_multiple(rng, k).collect();

    let mut constraint = ConstraintMap::new();
    for spec in picked {
        let clause = t.constraints[spec.key.as_str()].choose(rng).expect("checked");
        let (value, text, resources) = sample_value(rng, spec, t, pool, clause.bare_ok);
        let mut sentence = clause.pattern.replace("{value}", &text);
        if let Some(r) = resources {
            sentence = sentence.replace("{resources}", &r);
        }
        sentences.push(sentence);
        constraint.insert(spec.key.clone(), value);
    }

    let intent = sentences.iter().map(|s| capitalize(s)).collect::<Vec<_>>().join(" ");
    let gold = RequirementModel {
        goal: entry.goal.clone(),
        mode,
        trigger: Trigger { condition: trigger.name.clone() },
        action: Action { action_type: action.name.clone(), constraint },
    };
    (intent, gold)
}

/// Draws a value for `spec` and renders it for a `{value}` slot. Resource
/// clauses also get the text for `{resources}`.
fn sample_value(
    rng: &mut ChaCha8Rng,
    spec: &ConstraintSpec,
    t: &ProcessTemplates,
    pool: &TemplatePool,
    bare_ok: bool,
) -> (ConstraintValue, String, Option<String>) {
    let choose_decimal = |rng: &mut ChaCha8Rng, defaults: &[&str]| -> Decimal {
        match t.values.get(spec.key.as_str()) {
            Some(v) => v.choose(rng).expect("checked").parse().expect("checked"),
            None => defaults.choose(rng).expect("non-empty").parse().expect("valid literal"),
        }
    };
    let default_op = spec.default_op();
    match spec.kind {
        ValueKind::Duration => {
            let magnitude = match t.values.get(spec.key.as_str()) {
                Some(v) => v.choose(rng).expect("checked").parse().expect("checked"),
                None => Decimal::from_u64(rng.gen_range(1..=60)),
            };
            let unit = spec.time_unit();
            let word = if magnitude == Decimal::from_u64(1) { unit.singular() } else { unit.plural() };
            (ConstraintValue::Duration { magnitude, unit }, format!("{magnitude} {word}"), None)
        }
        ValueKind::Level => {
            let level = *Level::ALL.choose(rng).expect("non-empty");
            (ConstraintValue::Level(level), level.as_str().to_string(), None)
        }
        ValueKind::Percent => {
            let value = choose_decimal(rng, &PERCENT_VALUES);
            let op = sample_op(rng, default_op, value);
            let bound = PercentBound::new(op, value).expect("value within 0..=100");
            let text = with_op(rng, pool, op, default_op, bare_ok, format!("{value}%"));
            (ConstraintValue::Percent(bound), text, None)
        }
        ValueKind::ResourceMap => {
            let value = choose_decimal(rng, &RESOURCE_VALUES);
            let op = sample_op(rng, default_op, value);
            let bound = PercentBound::new(op, value).expect("value within 0..=100");
            let names: Vec<Identifier> = if spec.resources.len() > 1 && rng.gen_bool(0.4) {
                vec![spec.resources.choose(rng).expect("non-empty").clone()]
            } else {
                spec.resources.clone()
            };
            let text = with_op(rng, pool, op, default_op, bare_ok, format!("{value}%"));
            let listed = join_names(&names);
            let map = names.into_iter().map(|r| (r, bound)).collect::<BTreeMap<_, _>>();
            (ConstraintValue::Resources(map), text, Some(listed))
        }
        ValueKind::Count => {
            let value = match t.values.get(spec.key.as_str()) {
                Some(v) => v.choose(rng).expect("checked").parse::<Decimal>().ok().and_then(|d| d.as_u64()).unwrap_or(1),
                None => rng.gen_range(2..=50),
            };
            let op = sample_op(rng, default_op, Decimal::from_u64(value));
            let text = with_op(rng, pool, op, default_op, bare_ok, value.to_string());
            let unit = spec.unit.clone().unwrap_or_default();
            (ConstraintValue::Count { op, value, unit }, text, None)
        }
    }
}

/// The default operator most of the time; any operator otherwise.
fn sample_op(rng: &mut ChaCha8Rng, default_op: ComparisonOp, value: Decimal) -> ComparisonOp {
    // "at least 100%" and "at most 0" say nothing an exact bound doesn't.
    let ops: &[ComparisonOp] = if value == Decimal::from_u64(100) || value.is_zero() {
        &[ComparisonOp::Exactly]
    } else {
        &[ComparisonOp::AtLeast, ComparisonOp::AtMost, ComparisonOp::Exactly]
    };
    if ops.contains(&default_op) && rng.gen_bool(0.8) {
        default_op
    } else {
        *ops.choose(rng).expect("non-empty")
    }
}

fn with_op(
    rng: &mut ChaCha8Rng,
    pool: &TemplatePool,
    op: ComparisonOp,
    default_op: ComparisonOp,
    bare_ok: bool,
    value: String,
) -> String {
    if bare_ok && op == default_op && rng.gen_bool(0.5) {
        return value;
    }
    match pool.op_phrases.get(&op).and_then(|p| p.choose(rng)) {
        Some(phrase) => format!("{phrase} {value}"),
        None => value,
    }
}

fn join_names(names: &[Identifier]) -> String {
    let words: Vec<String> = names
        .iter()
        .map(|n| {
            let s = n.as_str();
            if s.chars().all(|c| c.is_ascii_uppercase()) {
                s.to_string()
            } else {
                s.to_ascii_lowercase()
            }
        })
        .collect();
    match words.as_slice() {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Deterministic train/eval split stratified by process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub eval: Dataset,
}

/// Each process keeps `round(n * fraction)` samples for training, capped so
/// at least one lands in evaluation. Sample order within each part follows
/// the input.
pub fn split_dataset(dataset: &Dataset, spec: SplitSpec) -> Result<Split, DatasetError> {
    if !(0.0..=1.0).contains(&spec.train_fraction) {
        return Err(DatasetError::Templates(format!(
            "train fraction {} is outside [0, 1]",
            spec.train_fraction
        )));
    }
    let mut groups: Vec<(&Identifier, Vec<usize>)> = Vec::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        match groups.iter_mut().find(|(g, _)| **g == s.process) {
            Some((_, idx)) => idx.push(i),
            None => groups.push((&s.process, vec![i])),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_idx = BTreeSet::new();
    for (_, mut idx) in groups {
        let n = idx.len();
        let n_train = ((n as f64 * spec.train_fraction).round() as usize).min(n.saturating_sub(1));
        idx.shuffle(&mut rng);
        train_idx.extend(idx.into_iter().take(n_train));
    }
    let part = |want_train: bool| Dataset {
        samples: dataset
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| train_idx.contains(i) == want_train)
            .map(|(_, s)| s.clone())
            .collect(),
        seed: dataset.seed,
        catalog_version: dataset.catalog_version.clone(),
    };
    Ok(Split { train: part(true), eval: part(false) })
}

#[derive(Serialize, Deserialize)]
struct Line {
    id: String,
    process: String,
    intent: String,
    gold: serde_json::Value,
}

/// One JSON object per line: `id`, `process`, `intent` and the canonical gold.
pub fn export_jsonl(dataset: &Dataset, mut out: impl Write) -> Result<(), DatasetError> {
    for s in &dataset.samples {
        let line = Line {
            id: s.id.clone(),
            process: s.process.to_string(),
            intent: s.intent.clone(),
            gold: canonicalize(&s.gold).to_json(),
        };
        let text = serde_json::to_string(&line).expect("serializable");
        writeln!(out, "{text}")?;
    }
    Ok(())
}

pub fn import_jsonl(input: impl BufRead) -> Result<Dataset, DatasetError> {
    let mut samples = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| DatasetError::MalformedLine { line: n, message };
        let raw: Line = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let process = Identifier::new(raw.process).map_err(malformed)?;
        let gold = parse_requirement_model(&raw.gold.to_string()).map_err(|e| malformed(e.to_string()))?;
        if gold.goal != process {
            return Err(malformed(format!("gold goal {} does not match process {process}", gold.goal)));
        }
        if !ids.insert(raw.id.clone()) {
            return Err(DatasetError::DuplicateId(raw.id));
        }
        samples.push(Sample { id: raw.id, process, intent: raw.intent, gold });
    }
    Ok(Dataset { samples, seed: None, catalog_version: None })
}

/// Compact canonical gold string, the unit of exact-match comparison.
pub fn gold_string(sample: &Sample) -> String {
    canonical_string(&sample.gold)
}
