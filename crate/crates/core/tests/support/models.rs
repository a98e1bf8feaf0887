//! Requirement-model generators.

use std::collections::BTreeMap;

use intentmfg_core::catalog::ProcessCatalog;
use intentmfg_core::decimal::Decimal;
use intentmfg_core::model::{
    Action, ComparisonOp, ConstraintKey, ConstraintMap, ConstraintValue, Identifier, Level, Mode, PercentBound,
    RequirementModel, TimeUnit, Trigger, ValueKind,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn op() -> impl Strategy<Value = ComparisonOp> {
    prop_oneof![Just(ComparisonOp::AtLeast), Just(ComparisonOp::AtMost), Just(ComparisonOp::Exactly)]
}

pub fn percent() -> impl Strategy<Value = Decimal> {
    (0u64..=100_000, 0u32..=3).prop_map(|(m, s)| {
        let d = Decimal::from_parts(m, s);
        if d > Decimal::from_u64(100) {
            Decimal::from_parts(m % 101, 0)
        } else {
            d
        }
    })
}

pub fn identifier() -> impl Strategy<Value = Identifier> {
    "[A-Z][A-Za-z0-9]{0,12}".prop_map(|s| Identifier::new(s).unwrap())
}

pub fn key() -> impl Strategy<Value = ConstraintKey> {
    "[a-z][A-Za-z0-9]{0,10}".prop_map(|s| ConstraintKey::new(s).unwrap())
}

pub fn value() -> impl Strategy<Value = ConstraintValue> {
    let unit = prop_oneof![
        Just(TimeUnit::Milliseconds),
        Just(TimeUnit::Seconds),
        Just(TimeUnit::Minutes),
        Just(TimeUnit::Hours)
    ];
    let count_unit = prop_oneof![
        Just("containers".to_string()),
        Just("containers per hour".to_string()),
        Just("pallets".to_string()),
        Just("units".to_string())
    ];
    prop_oneof![
        ((1u64..100_000, 0u32..=3), unit).prop_map(|((m, s), unit)| ConstraintValue::Duration {
            magnitude: Decimal::from_parts(m, s),
            unit
        }),
        (op(), percent()).prop_map(|(op, v)| ConstraintValue::Percent(PercentBound::new(op, v).unwrap())),
        prop::collection::btree_map(identifier(), (op(), percent()), 1..4).prop_map(|m| {
            ConstraintValue::Resources(
                m.into_iter()
                    .map(|(k, (op, v))| (k, PercentBound::new(op, v).unwrap()))
                    .collect::<BTreeMap<_, _>>(),
            )
        }),
        prop_oneof![Just(Level::Low), Just(Level::Medium), Just(Level::High), Just(Level::Critical)]
            .prop_map(ConstraintValue::Level),
        (op(), 0u64..1_000_000, count_unit).prop_map(|(op, value, unit)| ConstraintValue::Count { op, value, unit }),
    ]
}

pub fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Automated), Just(Mode::Manual), Just(Mode::SemiAutomated)]
}

/// Any structurally valid model, not necessarily known to the catalog.
pub fn model() -> impl Strategy<Value = RequirementModel> {
    (
        identifier(),
        mode(),
        identifier(),
        identifier(),
        prop::collection::vec((key(), value()), 0..6),
    )
        .prop_map(|(goal, mode, condition, action_type, pairs)| {
            let mut constraint = ConstraintMap::new();
            for (k, v) in pairs {
                constraint.insert(k, v);
            }
            RequirementModel {
                goal,
                mode,
                trigger: Trigger { condition },
                action: Action { action_type, constraint },
            }
        })
}

fn random_percent<R: Rng>(rng: &mut R) -> Decimal {
    Decimal::from_parts(rng.gen_range(0..=1000), rng.gen_range(0..=1)).min(Decimal::from_u64(100))
}

fn random_op<R: Rng>(rng: &mut R) -> ComparisonOp {
    *[ComparisonOp::AtLeast, ComparisonOp::AtMost, ComparisonOp::Exactly].choose(rng).unwrap()
}

/// A model that validates against `catalog`, with a random subset of keys.
pub fn random_valid_model<R: Rng>(rng: &mut R, catalog: &ProcessCatalog) -> RequirementModel {
    let entry = catalog.processes.choose(rng).unwrap();
    let mut constraint = ConstraintMap::new();
    for spec in &entry.constraints {
        if !rng.gen_bool(0.6) {
            continue;
        }
        let v = match spec.kind {
            ValueKind::Duration => ConstraintValue::Duration {
                magnitude: Decimal::from_u64(rng.gen_range(1..500)),
                unit: spec.time_unit(),
            },
            ValueKind::Percent => ConstraintValue::Percent(PercentBound::new(random_op(rng), random_percent(rng)).unwrap()),
            ValueKind::ResourceMap => {
                let mut map = BTreeMap::new();
                for r in &spec.resources {
                    if map.is_empty() || rng.gen_bool(0.5) {
                        map.insert(r.clone(), PercentBound::new(random_op(rng), random_percent(rng)).unwrap());
                    }
                }
                ConstraintValue::Resources(map)
            }
            ValueKind::Level => ConstraintValue::Level(*Level::ALL.choose(rng).unwrap()),
            ValueKind::Count => ConstraintValue::Count {
                op: random_op(rng),
                value: rng.gen_range(0..1000),
                unit: spec.unit.clone().unwrap_or_default(),
            },
        };
        constraint.insert(spec.key.clone(), v);
    }
    RequirementModel {
        goal: entry.goal.clone(),
        mode: *[Mode::Automated, Mode::Manual, Mode::SemiAutomated].choose(rng).unwrap(),
        trigger: Trigger { condition: entry.triggers.choose(rng).unwrap().name.clone() },
        action: Action { action_type: entry.actions.choose(rng).unwrap().name.clone(), constraint },
    }
}
