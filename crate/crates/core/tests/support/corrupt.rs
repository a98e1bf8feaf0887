//! Prediction corruption at controlled rates.

use intentmfg_core::dataset::Sample;
use intentmfg_core::decimal::Decimal;
use intentmfg_core::model::{
    canonical_string, serialize, ComparisonOp, ConstraintKey, ConstraintValue, JsonFormat, Level, Mode,
    PercentBound, RequirementModel,
};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    DropKey,
    FlipValue,
    BreakJson,
    Mixed,
    /// Changes only `availability` values.
    AvailabilityOnly,
}

impl Corruption {
    pub const SUITE_KINDS: [Corruption; 4] =
        [Corruption::DropKey, Corruption::FlipValue, Corruption::BreakJson, Corruption::Mixed];
}

fn flip(value: &ConstraintValue) -> ConstraintValue {
    let bump = |b: &PercentBound| {
        let op = match b.op {
            ComparisonOp::AtLeast => ComparisonOp::AtMost,
            ComparisonOp::AtMost => ComparisonOp::Exactly,
            ComparisonOp::Exactly => ComparisonOp::AtLeast,
        };
        PercentBound::new(op, b.value).unwrap()
    };
    match value {
        ConstraintValue::Duration { magnitude, unit } => ConstraintValue::Duration {
            magnitude: magnitude.as_u64().map_or(Decimal::from_u64(1), |m| Decimal::from_u64(m + 1)),
            unit: *unit,
        },
        ConstraintValue::Percent(b) => ConstraintValue::Percent(bump(b)),
        ConstraintValue::Resources(map) => {
            let mut map = map.clone();
            if let Some((_, b)) = map.iter_mut().next() {
                *b = bump(b);
            }
            ConstraintValue::Resources(map)
        }
        ConstraintValue::Level(l) => ConstraintValue::Level(match l {
            Level::Low => Level::Medium,
            Level::Medium => Level::High,
            Level::High => Level::Critical,
            Level::Critical => Level::Low,
        }),
        ConstraintValue::Count { op, value, unit } => ConstraintValue::Count { op: *op, value: value + 1, unit: unit.clone() },
    }
}

fn corrupt_model(rng: &mut ChaCha8Rng, kind: Corruption, gold: &RequirementModel) -> String {
    let mut m = gold.clone();
    let kind = match kind {
        Corruption::Mixed => *[Corruption::DropKey, Corruption::FlipValue, Corruption::BreakJson].choose(rng).unwrap(),
        k => k,
    };
    match kind {
        Corruption::DropKey => {
            if let Some(k) = m.action.constraint.keys().cloned().choose(rng) {
                m.action.constraint.shift_remove(&k);
            } else {
                m.mode = Mode::Manual;
            }
        }
        Corruption::FlipValue => {
            if let Some(k) = m.action.constraint.keys().cloned().choose(rng) {
                let v = flip(&m.action.constraint[&k]);
                m.action.constraint.insert(k, v);
            } else {
                m.mode = if m.mode == Mode::Manual { Mode::Automated } else { Mode::Manual };
            }
        }
        Corruption::BreakJson => {
            let s = canonical_string(&m);
            return s[..s.len() / 2].to_string();
        }
        Corruption::AvailabilityOnly => {
            let key = ConstraintKey::new("availability").unwrap();
            if let Some(v) = m.action.constraint.get(&key).map(flip) {
                m.action.constraint.insert(key, v);
            }
        }
        Corruption::Mixed => unreachable!(),
    }
    if rng.gen_bool(0.5) {
        serialize(&m, JsonFormat::Pretty)
    } else {
        format!("Here is the model:\n{}", serialize(&m, JsonFormat::Compact))
    }
}

/// Raw predictions for `samples`: each is corrupted with probability `rate`,
/// otherwise the gold serialized verbatim.
pub fn corrupt_predictions(samples: &[Sample], kind: Corruption, rate: f64, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples
        .iter()
        .map(|s| {
            if kind == Corruption::AvailabilityOnly || rng.gen_bool(rate) {
                corrupt_model(&mut rng, kind, &s.gold)
            } else {
                canonical_string(&s.gold)
            }
        })
        .collect()
}
