//! Whole-property checks shared by the integration tests and the acceptance
//! harness. Each returns `Err` with the first counterexample.

use std::collections::BTreeSet;
use std::io::BufReader;

use chrono::{TimeZone, Utc};
use intentmfg_core::catalog::ProcessCatalog;
use intentmfg_core::dataset::{export_jsonl, generate_dataset, import_jsonl, Dataset, ProcessCount, Sample, TemplatePool};
use intentmfg_core::eval::{aggregate, score_sample};
use intentmfg_core::graph::{
    apply_requirement, export_cypher, extract_subgraph, ApplyMode, GraphError, KnowledgeGraph,
};
use intentmfg_core::model::{
    canonical_string, parse_requirement_model, serialize, ConstraintKey, ConstraintValue, Identifier, JsonFormat,
    Level, RequirementModel,
};
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corrupt::{corrupt_predictions, Corruption};
use super::cypher::read_cypher;
use super::graphs::{bfs_one_hop, random_graph};
use super::metrics::{check, recompute, Case};
use super::models::{model, random_valid_model};

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]))
}

/// 50 samples per catalog process with seed 42.
pub fn reference_dataset(catalog: &ProcessCatalog) -> Dataset {
    let counts: Vec<ProcessCount> =
        catalog.goals().map(|g| ProcessCount { goal: g.to_string(), count: 50 }).collect();
    generate_dataset(&counts, 42, catalog, &TemplatePool::default()).expect("default pool").dataset
}

/// Corruption suites: every kind at every rate under two seeds, plus the
/// availability-only suite. Returns one label and outcome per suite.
pub fn corruption_suites(catalog: &ProcessCatalog) -> Vec<(String, Result<(), String>)> {
    let data = reference_dataset(catalog);
    let mut plans = Vec::new();
    for kind in Corruption::SUITE_KINDS {
        for rate in [0.05, 0.10, 0.25] {
            for seed in [1u64, 2] {
                plans.push((kind, rate, seed));
            }
        }
    }
    plans.push((Corruption::AvailabilityOnly, 1.0, 3));
    plans
        .into_iter()
        .map(|(kind, rate, seed)| {
            let label = format!("{kind:?}@{:.0}%#{seed}", rate * 100.0);
            (label, run_suite(&data, catalog, kind, rate, seed))
        })
        .collect()
}

fn run_suite(data: &Dataset, catalog: &ProcessCatalog, kind: Corruption, rate: f64, seed: u64) -> Result<(), String> {
    let raws = corrupt_predictions(&data.samples, kind, rate, seed);
    let scores: Vec<_> = data
        .samples
        .iter()
        .zip(&raws)
        .map(|(s, raw)| score_sample(&s.id, s.process.as_str(), raw, &s.gold, 1.0))
        .collect();
    let report = aggregate(&scores, catalog);
    let cases: Vec<Case> = data
        .samples
        .iter()
        .zip(&raws)
        .map(|(s, raw)| Case { process: s.process.as_str(), raw, gold: &s.gold })
        .collect();
    check(&report, &recompute(&cases, catalog))?;
    if kind == Corruption::AvailabilityOnly {
        for (process, rows) in &report.per_key {
            for row in rows {
                let perfect = row.f1.0 == num_rational::Ratio::from_integer(1);
                if row.key != "availability" && !perfect {
                    return Err(format!("{process}/{} degraded by availability-only corruption", row.key));
                }
            }
        }
    }
    Ok(())
}

/// One-hop extraction agrees with breadth-first search on random graphs.
pub fn subgraph_oracle(graphs: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..graphs {
        let g = random_graph(&mut rng, 50);
        let goals: Vec<String> = g
            .nodes_of_kind(intentmfg_core::graph::NodeKind::ManufacturingProcess)
            .map(|n| n.name.clone())
            .collect();
        for goal in &goals {
            let sub = extract_subgraph(&g, goal).map_err(|e| format!("graph {i} goal {goal}: {e}"))?;
            let (nodes, edges) = bfs_one_hop(&g, goal).expect("goal exists");
            let got_nodes: BTreeSet<String> = sub.nodes().map(|n| n.id.clone()).collect();
            let got_edges: BTreeSet<String> = sub.edges().map(|e| e.id.clone()).collect();
            if got_nodes != nodes || got_edges != edges {
                return Err(format!("graph {i} goal {goal}: {got_nodes:?}/{got_edges:?} vs {nodes:?}/{edges:?}"));
            }
            for n in sub.nodes() {
                if g.node(&n.id) != Some(n) {
                    return Err(format!("graph {i}: node {} altered in subgraph", n.id));
                }
            }
        }
        match extract_subgraph(&g, "NoSuchGoal") {
            Err(GraphError::UnknownGoal(_)) => {}
            other => return Err(format!("graph {i}: unknown goal gave {other:?}")),
        }
    }
    Ok(())
}

/// A model that may be invalid for the ontology: unknown goal, unknown key
/// or mismatched value kind.
fn random_apply_model(rng: &mut ChaCha8Rng, catalog: &ProcessCatalog) -> RequirementModel {
    let mut m = random_valid_model(rng, catalog);
    match rng.gen_range(0..10) {
        0 => m.goal = Identifier::new("UnknownProcess").unwrap(),
        1 => {
            m.action.constraint.insert(ConstraintKey::new("noiseLevel").unwrap(), ConstraintValue::Level(Level::Low));
        }
        2 => {
            m.action.constraint.insert(ConstraintKey::new("timeLimit").unwrap(), ConstraintValue::Level(Level::High));
        }
        _ => {}
    }
    m
}

/// Randomized apply sequences over the default ontology: a failed apply
/// leaves the serialized graph byte-identical and re-applying a successful
/// model is a no-op.
pub fn apply_sequences(sequences: usize, seed: u64, catalog: &ProcessCatalog) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..sequences {
        let mut g = KnowledgeGraph::default_ontology();
        for step in 0..rng.gen_range(1..=6) {
            let mode = if rng.gen_bool(0.7) { ApplyMode::Strict } else { ApplyMode::Permissive };
            let m = random_apply_model(&mut rng, catalog);
            let first = Utc.timestamp_opt(1_800_000_000 + (s * 10 + step) as i64, 0).unwrap();
            let before = g.to_json();
            match apply_requirement(&mut g, &m, mode, first) {
                Err(e) => {
                    if g.to_json() != before {
                        return Err(format!("sequence {s} step {step}: failed apply ({e}) changed the graph"));
                    }
                }
                Ok(_) => {
                    g.check_integrity().map_err(|e| format!("sequence {s} step {step}: {e:?}"))?;
                    let settled = g.to_json();
                    let later = first + chrono::Duration::hours(1);
                    let again = apply_requirement(&mut g, &m, mode, later)
                        .map_err(|e| format!("sequence {s} step {step}: re-apply failed: {e}"))?;
                    if g.to_json() != settled || again.entries.iter().any(|e| e.changed()) || !again.created.is_empty() {
                        return Err(format!("sequence {s} step {step}: re-apply not idempotent"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn run<S: Strategy>(label: &str, cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), String>) -> Result<(), String> {
    runner(cases)
        .run(&strategy, |v| test(v).map_err(proptest::test_runner::TestCaseError::fail))
        .map_err(|e| format!("{label}: {e}"))
}

pub fn model_roundtrip(cases: u32) -> Result<(), String> {
    run("model", cases, model(), |m| {
        for format in [JsonFormat::Compact, JsonFormat::Pretty] {
            let text = serialize(&m, format);
            let back = parse_requirement_model(&text).map_err(|e| format!("{text}: {e}"))?;
            if back != m {
                return Err(format!("{format:?} changed {text}"));
            }
        }
        let canon = canonical_string(&m);
        let again = canonical_string(&parse_requirement_model(&canon).map_err(|e| e.to_string())?);
        if again != canon {
            return Err(format!("canonical form unstable: {canon} -> {again}"));
        }
        Ok(())
    })
}

pub fn jsonl_roundtrip(cases: u32) -> Result<(), String> {
    let strategy = proptest::collection::vec((model(), "[ -~]{1,80}"), 0..8);
    run("jsonl", cases, strategy, |items| {
        let samples = items
            .into_iter()
            .enumerate()
            .map(|(i, (gold, intent))| Sample { id: format!("s{i}"), process: gold.goal.clone(), intent, gold })
            .collect();
        let data = Dataset { samples, seed: None, catalog_version: None };
        let mut buf = Vec::new();
        export_jsonl(&data, &mut buf).map_err(|e| e.to_string())?;
        let back = import_jsonl(BufReader::new(buf.as_slice())).map_err(|e| e.to_string())?;
        let canon = |d: &Dataset| d.samples.iter().map(|s| (s.id.clone(), s.intent.clone(), canonical_string(&s.gold))).collect::<Vec<_>>();
        if canon(&back) != canon(&data) {
            return Err("dataset changed through JSONL".into());
        }
        Ok(())
    })
}

fn graph_strategy() -> impl Strategy<Value = KnowledgeGraph> {
    proptest::num::u64::ANY.prop_map(|seed| random_graph(&mut ChaCha8Rng::seed_from_u64(seed), 50))
}

pub fn graph_roundtrip(cases: u32) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("graph.json");
    run("graph", cases, graph_strategy(), |g| {
        intentmfg_core::graph::save_graph(&g, &path).map_err(|e| e.to_string())?;
        let back = intentmfg_core::graph::load_graph(&path).map_err(|e| e.to_string())?;
        if back != g {
            return Err(format!("graph changed through save/load: {:?}", intentmfg_core::graph::graph_diff(&g, &back)));
        }
        if back.to_json() != g.to_json() {
            return Err("serialized graph not byte-stable".into());
        }
        Ok(())
    })
}

pub fn cypher_roundtrip(cases: u32) -> Result<(), String> {
    run("cypher", cases, graph_strategy(), |g| {
        let text = export_cypher(&g);
        let back = read_cypher(&text)?;
        if back != g {
            return Err(format!("cypher reader disagrees:\n{text}"));
        }
        Ok(())
    })
}
