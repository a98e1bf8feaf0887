//! Exact match, JSON validity, pair-level precision/recall/F1 and batch timing.
//!
//! Models are compared as sets of `(path, value)` leaf pairs taken from the
//! canonical form. Invalid predictions contribute an empty set. Overall
//! accuracy is matched gold pairs over all gold pairs. Rates are exact
//! rationals internally and rendered to two decimals (half up).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::time::Instant;

use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;
use tracing::warn;

use crate::catalog::ProcessCatalog;
use crate::dataset::Dataset;
use crate::model::{canonical_string, ConstraintValue, RequirementModel, ValueKind};
use crate::translate::{parse_raw_output, IntentText, TranslationBackend};

/// Per-sample latency reported for reference only.
pub const REFERENCE_MS_PER_SAMPLE: f64 = 54.0;

const CONSTRAINT_PREFIX: &str = "action/constraint/";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KVPair {
    pub path: String,
    pub value: String,
}

/// Leaf pairs of a model; nested resource bounds get their own paths.
pub fn flatten(model: &RequirementModel) -> BTreeSet<KVPair> {
    let pair = |path: String, value: String| KVPair { path, value };
    let mut out = BTreeSet::new();
    out.insert(pair("goal".into(), model.goal.to_string()));
    out.insert(pair("mode".into(), model.mode.as_str().into()));
    out.insert(pair("trigger/condition".into(), model.trigger.condition.to_string()));
    out.insert(pair("action/type".into(), model.action.action_type.to_string()));
    for (key, value) in &model.action.constraint {
        let base = format!("{CONSTRAINT_PREFIX}{key}");
        match value {
            ConstraintValue::Resources(map) => {
                for (res, bound) in map {
                    out.insert(pair(format!("{base}/{res}"), bound.to_string()));
                }
            }
            other => {
                out.insert(pair(base, other.to_string()));
            }
        }
    }
    out
}

/// Row label for a pair path: constraint paths lose their prefix.
pub fn row_key(path: &str) -> &str {
    path.strip_prefix(CONSTRAINT_PREFIX).unwrap_or(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Match,
    Mismatch,
    Missing,
    Spurious,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleScore {
    pub id: String,
    pub process: String,
    pub json_valid: bool,
    pub exact_match: bool,
    pub matched: u64,
    pub predicted: u64,
    pub gold: u64,
    pub outcomes: BTreeMap<String, Outcome>,
    /// Paths present in the prediction, with whether the value matched.
    #[serde(skip)]
    pub predicted_paths: BTreeMap<String, bool>,
    pub latency_ms: f64,
}

pub fn score_sample(id: &str, process: &str, raw: &str, gold: &RequirementModel, latency_ms: f64) -> SampleScore {
    let prediction = parse_raw_output(raw).ok();
    let gold_pairs = flatten(gold);
    let pred_pairs = prediction.as_ref().map(flatten).unwrap_or_default();
    let exact_match = prediction.as_ref().is_some_and(|p| canonical_string(p) == canonical_string(gold));

    let gold_by_path: BTreeMap<&str, &str> = gold_pairs.iter().map(|p| (p.path.as_str(), p.value.as_str())).collect();
    let pred_by_path: BTreeMap<&str, &str> = pred_pairs.iter().map(|p| (p.path.as_str(), p.value.as_str())).collect();
    let mut outcomes = BTreeMap::new();
    for (path, value) in &gold_by_path {
        let o = match pred_by_path.get(path) {
            Some(v) if v == value => Outcome::Match,
            Some(_) => Outcome::Mismatch,
            None => Outcome::Missing,
        };
        outcomes.insert(path.to_string(), o);
    }
    for path in pred_by_path.keys() {
        outcomes.entry(path.to_string()).or_insert(Outcome::Spurious);
    }
    let predicted_paths = pred_by_path
        .iter()
        .map(|(p, v)| (p.to_string(), gold_by_path.get(p) == Some(v)))
        .collect();

    SampleScore {
        id: id.to_string(),
        process: process.to_string(),
        json_valid: prediction.is_some(),
        exact_match,
        matched: gold_pairs.intersection(&pred_pairs).count() as u64,
        predicted: pred_pairs.len() as u64,
        gold: gold_pairs.len() as u64,
        outcomes,
        predicted_paths,
        latency_ms,
    }
}

/// An exact rate with half-up two-decimal rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rate(pub Ratio<u64>);

impl Rate {
    /// `num / den`, or zero when `den` is zero.
    pub fn of(num: u64, den: u64) -> Self {
        if den == 0 {
            Rate(Ratio::new_raw(0, 1))
        } else {
            Rate(Ratio::new(num, den))
        }
    }

    pub fn one() -> Self {
        Rate(Ratio::from_integer(1))
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// `value × scale` rounded half up to two decimals.
    fn render(self, scale: u128) -> String {
        let n = *self.0.numer() as u128 * scale * 100;
        let d = *self.0.denom() as u128;
        let hundredths = (2 * n + d) / (2 * d);
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }

    /// Percentage with two decimals: 134/150 → "89.33".
    pub fn percent(self) -> String {
        self.render(100)
    }

    /// Fraction with two decimals: 1 → "1.00".
    pub fn fraction(self) -> String {
        self.render(1)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.percent())
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Rate", 2)?;
        st.serialize_field("percent", &self.percent())?;
        st.serialize_field("exact", &format!("{}/{}", self.0.numer(), self.0.denom()))?;
        st.end()
    }
}

/// F1 from pair counts: 2m / (p + g), which equals 2PR/(P+R) when P+R > 0.
fn f1(matched: u64, predicted: u64, gold: u64) -> Rate {
    Rate::of(2 * matched, predicted + gold)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyRow {
    pub key: String,
    pub precision: Rate,
    pub recall: Rate,
    pub f1: Rate,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingSummary {
    pub total_ms: f64,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub definitions: &'static str,
    pub samples: u64,
    pub exact_match: Rate,
    pub json_validity: Rate,
    pub precision: Rate,
    pub recall: Rate,
    pub f1: Rate,
    pub overall_accuracy: Rate,
    pub matched_pairs: u64,
    pub predicted_pairs: u64,
    pub gold_pairs: u64,
    pub per_key: BTreeMap<String, Vec<KeyRow>>,
    pub timing: TimingSummary,
}

const DEFINITIONS: &str = "pairs are (path, canonical value) leaves; invalid output predicts no pairs; \
precision, recall and F1 are micro-averaged over pairs; overall accuracy = matched gold pairs / gold pairs";

/// Folds sample scores into a report. Per-key rows are built for every
/// process in `catalog` that has at least one score.
pub fn aggregate(scores: &[SampleScore], catalog: &ProcessCatalog) -> EvalReport {
    let n = scores.len() as u64;
    let count = |f: fn(&SampleScore) -> bool| scores.iter().filter(|s| f(s)).count() as u64;
    let matched: u64 = scores.iter().map(|s| s.matched).sum();
    let predicted: u64 = scores.iter().map(|s| s.predicted).sum();
    let gold: u64 = scores.iter().map(|s| s.gold).sum();
    let processes: BTreeSet<&str> = scores.iter().map(|s| s.process.as_str()).collect();
    let per_key = processes
        .into_iter()
        .map(|p| (p.to_string(), per_key_matrix(scores, p, catalog)))
        .collect();
    let total_ms: f64 = scores.iter().map(|s| s.latency_ms).sum();
    EvalReport {
        definitions: DEFINITIONS,
        samples: n,
        exact_match: Rate::of(count(|s| s.exact_match), n),
        json_validity: Rate::of(count(|s| s.json_valid), n),
        precision: Rate::of(matched, predicted),
        recall: Rate::of(matched, gold),
        f1: f1(matched, predicted, gold),
        overall_accuracy: Rate::of(matched, gold),
        matched_pairs: matched,
        predicted_pairs: predicted,
        gold_pairs: gold,
        per_key,
        timing: TimingSummary { total_ms, mean_ms: if n == 0 { 0.0 } else { total_ms / n as f64 } },
    }
}

/// Row keys for a process: the four structural paths, then each catalog
/// key (resource maps expand to one row per resource).
pub fn matrix_rows(process: &str, catalog: &ProcessCatalog) -> Vec<String> {
    let mut rows: Vec<String> = ["goal", "mode", "trigger/condition", "action/type"].map(String::from).to_vec();
    if let Some(entry) = catalog.entry(process) {
        for spec in &entry.constraints {
            if spec.kind == ValueKind::ResourceMap {
                rows.extend(spec.resources.iter().map(|r| format!("{}/{r}", spec.key)));
            } else {
                rows.push(spec.key.to_string());
            }
        }
    }
    rows
}

/// Per-key precision/recall/F1 over the samples of `process`. A key that
/// is neither predicted nor expected scores 1.00 throughout.
pub fn per_key_matrix(scores: &[SampleScore], process: &str, catalog: &ProcessCatalog) -> Vec<KeyRow> {
    let mut tp: BTreeMap<&str, u64> = BTreeMap::new();
    let mut pred: BTreeMap<&str, u64> = BTreeMap::new();
    let mut gold: BTreeMap<&str, u64> = BTreeMap::new();
    for s in scores.iter().filter(|s| s.process == process) {
        for (path, o) in &s.outcomes {
            if *o != Outcome::Spurious {
                *gold.entry(row_key(path)).or_default() += 1;
            }
        }
        for (path, hit) in &s.predicted_paths {
            *pred.entry(row_key(path)).or_default() += 1;
            if *hit {
                *tp.entry(row_key(path)).or_default() += 1;
            }
        }
    }
    matrix_rows(process, catalog)
        .into_iter()
        .map(|key| {
            let (t, p, g) = (
                tp.get(key.as_str()).copied().unwrap_or(0),
                pred.get(key.as_str()).copied().unwrap_or(0),
                gold.get(key.as_str()).copied().unwrap_or(0),
            );
            let (precision, recall, f) = if p == 0 && g == 0 {
                (Rate::one(), Rate::one(), Rate::one())
            } else {
                (Rate::of(t, p), Rate::of(t, g), f1(t, p, g))
            };
            KeyRow { key, precision, recall, f1: f, support: g }
        })
        .collect()
}

pub fn matrix_csv(rows: &[KeyRow]) -> String {
    let mut out = String::from("key,precision,recall,f1,support\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.key,
            r.precision.fraction(),
            r.recall.fraction(),
            r.f1.fraction(),
            r.support
        ));
    }
    out
}

/// Human-readable summary, one metric per line.
pub fn render_summary(report: &EvalReport) -> String {
    format!(
        "samples: {}\nexact match accuracy: {}\njson validity: {}\nprecision: {}\nrecall: {}\nf1: {}\noverall accuracy: {}\n",
        report.samples,
        report.exact_match,
        report.json_validity,
        report.precision,
        report.recall,
        report.f1,
        report.overall_accuracy
    )
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub raw_output: String,
    #[serde(default)]
    pub latency_ms: f64,
}

pub fn read_predictions(input: impl BufRead) -> Result<Vec<Prediction>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::MalformedLine { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

pub fn write_predictions(preds: &[Prediction], mut out: impl Write) -> Result<(), EvalError> {
    for p in preds {
        writeln!(out, "{}", serde_json::to_string(p).expect("serializable"))?;
    }
    Ok(())
}

/// Scores every gold sample against its prediction by id. Gold samples
/// without a prediction score as invalid output; stray predictions are
/// reported and ignored.
pub fn score_predictions(preds: &[Prediction], gold: &Dataset) -> (Vec<SampleScore>, Vec<String>) {
    let by_id: BTreeMap<&str, &Prediction> = preds.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut warnings = Vec::new();
    let scores = gold
        .samples
        .iter()
        .map(|s| match by_id.get(s.id.as_str()) {
            Some(p) => score_sample(&s.id, s.process.as_str(), &p.raw_output, &s.gold, p.latency_ms),
            None => {
                warnings.push(format!("no prediction for {}", s.id));
                score_sample(&s.id, s.process.as_str(), "", &s.gold, 0.0)
            }
        })
        .collect();
    let gold_ids: BTreeSet<&str> = gold.samples.iter().map(|s| s.id.as_str()).collect();
    for p in preds.iter().filter(|p| !gold_ids.contains(p.id.as_str())) {
        warnings.push(format!("prediction {} has no gold sample", p.id));
    }
    for w in &warnings {
        warn!("{w}");
    }
    (scores, warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingPoint {
    pub batch_size: usize,
    pub cumulative_ms: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub backend: String,
    pub points: Vec<TimingPoint>,
    pub slope_ms_per_sample: f64,
    pub intercept_ms: f64,
    pub r_squared: f64,
    pub reference_ms_per_sample: f64,
}

impl TimingReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("batch_size,cumulative_ms,failures\n");
        for p in &self.points {
            out.push_str(&format!("{},{:.3},{}\n", p.batch_size, p.cumulative_ms, p.failures));
        }
        out
    }
}

/// Runs each batch sequentially through `backend` (cycling through
/// `intents` when a batch is larger) and fits cumulative time against
/// batch size by least squares.
pub fn timing_run(backend: &dyn TranslationBackend, intents: &[IntentText], batch_sizes: &[usize]) -> TimingReport {
    let mut points = Vec::with_capacity(batch_sizes.len());
    for &b in batch_sizes {
        let mut failures = 0;
        let started = Instant::now();
        for i in 0..b {
            if intents.is_empty() {
                break;
            }
            if !backend.translate(&intents[i % intents.len()]).is_success() {
                failures += 1;
            }
        }
        points.push(TimingPoint {
            batch_size: b,
            cumulative_ms: started.elapsed().as_secs_f64() * 1000.0,
            failures,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.batch_size as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.cumulative_ms).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    TimingReport {
        backend: backend.name().to_string(),
        points,
        slope_ms_per_sample: slope,
        intercept_ms: intercept,
        r_squared: r2,
        reference_ms_per_sample: REFERENCE_MS_PER_SAMPLE,
    }
}

/// Ordinary least squares `y = slope·x + intercept` with R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (0.0, ys.first().copied().unwrap_or(0.0), 0.0);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}
