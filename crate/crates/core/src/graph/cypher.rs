use std::fmt::Write;

use super::{KnowledgeGraph, PropValue};

/// One `MERGE` per node, then one `MATCH ... MERGE` per edge, each group
/// ordered by id, one statement per line.
///
/// Node maps start with `id` and `name`; edge maps start with `id`.
pub fn export_cypher(graph: &KnowledgeGraph) -> String {
    let mut out = String::new();
    for n in graph.nodes() {
        let mut map = vec![("id", PropValue::Text(n.id.clone())), ("name", PropValue::Text(n.name.clone()))];
        map.extend(n.properties.iter().map(|(k, v)| (k.as_str(), v.clone())));
        writeln!(out, "MERGE (n:{} {})", n.kind.as_str(), render_map(&map)).unwrap();
    }
    for e in graph.edges() {
        let mut map = vec![("id", PropValue::Text(e.id.clone()))];
        map.extend(e.properties.iter().map(|(k, v)| (k.as_str(), v.clone())));
        writeln!(
            out,
            "MATCH (a {{id:{}}}), (b {{id:{}}}) MERGE (a)-[r:{} {}]->(b)",
            quote(&e.from),
            quote(&e.to),
            e.kind.as_str(),
            render_map(&map)
        )
        .unwrap();
    }
    out
}

fn render_map(entries: &[(&str, PropValue)]) -> String {
    let body: Vec<String> = entries.iter().map(|(k, v)| format!("{}:{}", key(k), literal(v))).collect();
    format!("{{{}}}", body.join(", "))
}

fn key(k: &str) -> String {
    let plain = k.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        k.to_string()
    } else {
        format!("`{}`", k.replace('`', "``"))
    }
}

fn literal(v: &PropValue) -> String {
    match v {
        PropValue::Text(s) => quote(s),
        PropValue::Number(d) => d.to_string(),
        PropValue::Bool(b) => b.to_string(),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => write!(out, "\\u{:04x}", c as u32).unwrap(),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
