//! Naive recomputation of evaluation metrics straight from JSON trees.

use std::collections::BTreeMap;

use intentmfg_core::catalog::ProcessCatalog;
use intentmfg_core::eval::{EvalReport, Rate};
use intentmfg_core::model::{canonicalize, RequirementModel, ValueKind};
use intentmfg_core::translate::parse_raw_output;
use num_rational::Ratio;
use serde_json::Value;

pub struct Case<'a> {
    pub process: &'a str,
    pub raw: &'a str,
    pub gold: &'a RequirementModel,
}

#[derive(Debug, Default)]
pub struct Cell {
    pub tp: u64,
    pub pred: u64,
    pub gold: u64,
}

#[derive(Debug, Default)]
pub struct Oracle {
    pub n: u64,
    pub exact: u64,
    pub valid: u64,
    pub matched: u64,
    pub predicted: u64,
    pub gold: u64,
    pub cells: BTreeMap<String, BTreeMap<String, Cell>>,
}

fn leaves(v: &Value, prefix: &str, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}/{k}") };
                leaves(child, &path, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn model_leaves(m: &RequirementModel) -> Vec<(String, String)> {
    let mut out = Vec::new();
    leaves(&canonicalize(m).to_json(), "", &mut out);
    out.sort();
    out
}

fn row(path: &str) -> String {
    path.strip_prefix("action/constraint/").unwrap_or(path).to_string()
}

fn rows_for(process: &str, catalog: &ProcessCatalog) -> Vec<String> {
    let mut rows = vec!["goal".to_string(), "mode".into(), "trigger/condition".into(), "action/type".into()];
    if let Some(e) = catalog.processes.iter().find(|p| p.goal.as_str() == process) {
        for c in &e.constraints {
            if c.kind == ValueKind::ResourceMap {
                for r in &c.resources {
                    rows.push(format!("{}/{}", c.key, r));
                }
            } else {
                rows.push(c.key.to_string());
            }
        }
    }
    rows
}

pub fn recompute(cases: &[Case], catalog: &ProcessCatalog) -> Oracle {
    let mut o = Oracle::default();
    for c in cases {
        o.n += 1;
        let gold = model_leaves(c.gold);
        let pred = match parse_raw_output(c.raw) {
            Ok(m) => {
                o.valid += 1;
                model_leaves(&m)
            }
            Err(_) => Vec::new(),
        };
        if !pred.is_empty() && pred == gold {
            o.exact += 1;
        }
        o.gold += gold.len() as u64;
        o.predicted += pred.len() as u64;
        for p in &pred {
            if gold.iter().any(|g| g == p) {
                o.matched += 1;
            }
        }
        let cells = o.cells.entry(c.process.to_string()).or_default();
        for r in rows_for(c.process, catalog) {
            let cell = cells.entry(r.clone()).or_default();
            let g = gold.iter().find(|(p, _)| row(p) == r);
            let p = pred.iter().find(|(p, _)| row(p) == r);
            if g.is_some() {
                cell.gold += 1;
            }
            if p.is_some() {
                cell.pred += 1;
            }
            if let (Some(g), Some(p)) = (g, p) {
                if g == p {
                    cell.tp += 1;
                }
            }
        }
    }
    o
}

fn ratio(num: u64, den: u64) -> Ratio<u128> {
    if den == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(num as u128, den as u128)
    }
}

fn harmonic(p: Ratio<u128>, r: Ratio<u128>) -> Ratio<u128> {
    if p + r == Ratio::from_integer(0) {
        Ratio::from_integer(0)
    } else {
        Ratio::from_integer(2) * p * r / (p + r)
    }
}

fn same(label: &str, got: Rate, want: Ratio<u128>) -> Result<(), String> {
    let got = Ratio::new(*got.0.numer() as u128, *got.0.denom() as u128);
    if got == want {
        Ok(())
    } else {
        Err(format!("{label}: report {got} vs oracle {want}"))
    }
}

/// Exact equality of every rate in `report` with the recomputation.
pub fn check(report: &EvalReport, o: &Oracle) -> Result<(), String> {
    if report.samples != o.n {
        return Err(format!("sample count {} vs {}", report.samples, o.n));
    }
    let p = ratio(o.matched, o.predicted);
    let r = ratio(o.matched, o.gold);
    same("exact match", report.exact_match, ratio(o.exact, o.n))?;
    same("validity", report.json_validity, ratio(o.valid, o.n))?;
    same("precision", report.precision, p)?;
    same("recall", report.recall, r)?;
    same("f1", report.f1, harmonic(p, r))?;
    same("overall accuracy", report.overall_accuracy, ratio(o.matched, o.gold))?;
    for (process, cells) in &o.cells {
        let rows = report.per_key.get(process).ok_or_else(|| format!("no matrix for {process}"))?;
        if rows.len() != cells.len() {
            return Err(format!("{process}: {} rows vs {}", rows.len(), cells.len()));
        }
        for row in rows {
            let c = cells.get(&row.key).ok_or_else(|| format!("{process}: unexpected row {}", row.key))?;
            let one = Ratio::from_integer(1);
            let (cp, cr) = if c.pred == 0 && c.gold == 0 {
                (one, one)
            } else {
                (ratio(c.tp, c.pred), ratio(c.tp, c.gold))
            };
            let cf = if c.pred == 0 && c.gold == 0 { one } else { harmonic(cp, cr) };
            let label = format!("{process}/{}", row.key);
            same(&format!("{label} precision"), row.precision, cp)?;
            same(&format!("{label} recall"), row.recall, cr)?;
            same(&format!("{label} f1"), row.f1, cf)?;
            if row.support != c.gold {
                return Err(format!("{label} support {} vs {}", row.support, c.gold));
            }
        }
    }
    Ok(())
}
