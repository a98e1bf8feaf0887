//! Reader for the statement subset emitted by `export_cypher`.

use intentmfg_core::decimal::Decimal;
use intentmfg_core::graph::{Edge, EdgeKind, KnowledgeGraph, Node, NodeKind, PropValue, Properties};

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn eat(&mut self, lit: &str) -> Result<(), String> {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(format!("expected `{lit}` at `{}`", self.rest()))
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        let rest = self.rest();
        if let Some(inner) = rest.strip_prefix('`') {
            let mut out = String::new();
            let mut chars = inner.char_indices();
            while let Some((i, c)) = chars.next() {
                if c == '`' {
                    if inner[i + 1..].starts_with('`') {
                        out.push('`');
                        chars.next();
                    } else {
                        self.pos += 1 + i + 1;
                        return Ok(out);
                    }
                } else {
                    out.push(c);
                }
            }
            return Err("unterminated backtick".into());
        }
        let n = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
        if n == 0 {
            return Err(format!("expected identifier at `{rest}`"));
        }
        self.pos += n;
        Ok(rest[..n].to_string())
    }

    fn string(&mut self) -> Result<String, String> {
        self.eat("\"")?;
        let mut out = String::new();
        let rest = self.rest();
        let mut chars = rest.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or("dangling escape")?;
                    match e {
                        '"' => out.push('"'),
                        '\\' => out.push('\\'),
                        'n' => out.push('\n'),
                        'r' => out.push('\r'),
                        't' => out.push('\t'),
                        'u' => {
                            let hex: String = (0..4).filter_map(|_| chars.next().map(|(_, h)| h)).collect();
                            let code = u32::from_str_radix(&hex, 16).map_err(|e| e.to_string())?;
                            out.push(char::from_u32(code).ok_or("bad code point")?);
                        }
                        other => return Err(format!("unknown escape \\{other}")),
                    }
                }
                c => out.push(c),
            }
        }
        Err("unterminated string".into())
    }

    fn literal(&mut self) -> Result<PropValue, String> {
        let rest = self.rest();
        if rest.starts_with('"') {
            return self.string().map(PropValue::Text);
        }
        for (lit, b) in [("true", true), ("false", false)] {
            if rest.starts_with(lit) {
                self.pos += lit.len();
                return Ok(PropValue::Bool(b));
            }
        }
        let n = rest.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(rest.len());
        let d: Decimal = rest[..n].parse().map_err(|e| format!("number `{}`: {e}", &rest[..n]))?;
        self.pos += n;
        Ok(PropValue::Number(d))
    }

    fn map(&mut self) -> Result<Vec<(String, PropValue)>, String> {
        self.eat("{")?;
        let mut out = Vec::new();
        if self.rest().starts_with('}') {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            let k = self.ident()?;
            self.eat(":")?;
            out.push((k, self.literal()?));
            if self.rest().starts_with(", ") {
                self.pos += 2;
            } else {
                self.eat("}")?;
                return Ok(out);
            }
        }
    }
}

fn node_kind(s: &str) -> Result<NodeKind, String> {
    match s {
        "ManufacturingProcess" => Ok(NodeKind::ManufacturingProcess),
        "ManufacturingResource" => Ok(NodeKind::ManufacturingResource),
        "ProcessConstraint" => Ok(NodeKind::ProcessConstraint),
        _ => Err(format!("unknown label {s}")),
    }
}

fn edge_kind(s: &str) -> Result<EdgeKind, String> {
    match s {
        "REQUIRES" => Ok(EdgeKind::Requires),
        "CONSTRAINED_BY" => Ok(EdgeKind::ConstrainedBy),
        _ => Err(format!("unknown relationship type {s}")),
    }
}

fn take_text(map: &mut Vec<(String, PropValue)>, key: &str) -> Result<String, String> {
    if map.first().map(|(k, _)| k.as_str()) != Some(key) {
        return Err(format!("expected leading `{key}`"));
    }
    match map.remove(0).1 {
        PropValue::Text(s) => Ok(s),
        other => Err(format!("`{key}` is not a string: {other:?}")),
    }
}

fn props(map: Vec<(String, PropValue)>) -> Properties {
    map.into_iter().collect()
}

/// Rebuilds a graph from `export_cypher` output.
pub fn read_cypher(text: &str) -> Result<KnowledgeGraph, String> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut c = Cursor { s: line, pos: 0 };
        if line.starts_with("MERGE (n:") {
            c.eat("MERGE (n:")?;
            let kind = node_kind(&c.ident()?)?;
            c.eat(" ")?;
            let mut map = c.map()?;
            c.eat(")")?;
            let id = take_text(&mut map, "id")?;
            let name = take_text(&mut map, "name")?;
            nodes.push(Node { id, kind, name, properties: props(map) });
        } else {
            c.eat("MATCH (a {id:")?;
            let from = c.string()?;
            c.eat("}), (b {id:")?;
            let to = c.string()?;
            c.eat("}) MERGE (a)-[r:")?;
            let kind = edge_kind(&c.ident()?)?;
            c.eat(" ")?;
            let mut map = c.map()?;
            c.eat("]->(b)")?;
            let id = take_text(&mut map, "id")?;
            edges.push(Edge { id, kind, from, to, properties: props(map) });
        }
        if c.pos != line.len() {
            return Err(format!("trailing text `{}`", c.rest()));
        }
    }
    KnowledgeGraph::from_parts(nodes, edges).map_err(|e| e.to_string())
}
