use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub labels: BTreeSet<String>,
    pub props: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rel {
    pub id: u32,
    pub src: u32,
    pub dst: u32,
    pub label: String,
    pub props: BTreeMap<String, Value>,
}

/// Finite property graph. Every relationship has exactly one label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropertyGraph {
    pub nodes: Vec<Node>,
    pub rels: Vec<Rel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

impl PropertyGraph {
    pub fn node(&self, id: u32) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn rel(&self, id: u32) -> Option<&Rel> {
        self.rels.iter().find(|r| r.id == id)
    }

    pub fn entity_count(&self) -> usize {
        self.nodes.len() + self.rels.len()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(GraphError::Invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let mut rids = BTreeSet::new();
        for r in &self.rels {
            if !rids.insert(r.id) {
                return Err(GraphError::Invalid(format!("duplicate relationship id {}", r.id)));
            }
            if !ids.contains(&r.src) || !ids.contains(&r.dst) {
                return Err(GraphError::Invalid(format!("relationship {} has a dangling endpoint", r.id)));
            }
            if r.label.is_empty() {
                return Err(GraphError::Invalid(format!("relationship {} has no label", r.id)));
            }
        }
        Ok(())
    }

    /// Parse the line-oriented text form produced by `Display`.
    pub fn parse(text: &str) -> Result<PropertyGraph, GraphError> {
        let mut g = PropertyGraph::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let err = |msg: &str| GraphError::Parse { line, msg: msg.to_string() };
            let words = split_fields(l).map_err(|m| err(&m))?;
            match words.first().map(String::as_str) {
                Some("node") => {
                    if words.len() != 4 {
                        return Err(err("expected: node <id> labels=<..> props=<..>"));
                    }
                    let id = words[1].parse().map_err(|_| err("bad node id"))?;
                    let labels = field(&words[2], "labels=").ok_or_else(|| err("missing labels="))?;
                    let props = field(&words[3], "props=").ok_or_else(|| err("missing props="))?;
                    g.nodes.push(Node {
                        id,
                        labels: labels.split(',').filter(|s| !s.is_empty()).map(String::from).collect(),
                        props: parse_props(props).map_err(|m| err(&m))?,
                    });
                }
                Some("rel") => {
                    if words.len() != 6 {
                        return Err(err("expected: rel <id> <src> <dst> label=<..> props=<..>"));
                    }
                    let num = |s: &str| s.parse::<u32>().map_err(|_| err("bad id"));
                    let label = field(&words[4], "label=").ok_or_else(|| err("missing label="))?;
                    let props = field(&words[5], "props=").ok_or_else(|| err("missing props="))?;
                    g.rels.push(Rel {
                        id: num(&words[1])?,
                        src: num(&words[2])?,
                        dst: num(&words[3])?,
                        label: label.to_string(),
                        props: parse_props(props).map_err(|m| err(&m))?,
                    });
                }
                _ => return Err(err("line must start with `node` or `rel`")),
            }
        }
        g.validate()?;
        Ok(g)
    }
}

fn field<'a>(word: &'a str, prefix: &str) -> Option<&'a str> {
    word.strip_prefix(prefix)
}

/// Split on spaces that are outside quoted strings.
fn split_fields(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' if quoted => {
                cur.push(c);
                cur.push(chars.next().ok_or("dangling escape")?);
            }
            '\'' => {
                quoted = !quoted;
                cur.push(c);
            }
            ' ' if !quoted => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if quoted {
        return Err("unterminated string".into());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

fn parse_props(s: &str) -> Result<BTreeMap<String, Value>, String> {
    let mut out = BTreeMap::new();
    let mut rest = s;
    while !rest.is_empty() {
        let eq = rest.find('=').ok_or("property without `=`")?;
        let key = &rest[..eq];
        if key.is_empty() {
            return Err("empty property key".into());
        }
        rest = &rest[eq + 1..];
        let (value, used) = parse_scalar(rest)?;
        rest = &rest[used..];
        if let Some(r) = rest.strip_prefix(',') {
            rest = r;
            if rest.is_empty() {
                return Err("trailing comma".into());
            }
        } else if !rest.is_empty() {
            return Err("expected `,` between properties".into());
        }
        if out.insert(key.to_string(), value).is_some() {
            return Err(format!("duplicate property `{key}`"));
        }
    }
    Ok(out)
}

fn parse_scalar(s: &str) -> Result<(Value, usize), String> {
    if let Some(body) = s.strip_prefix('\'') {
        let mut v = String::new();
        let mut chars = body.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => {
                    let (_, e) = chars.next().ok_or("dangling escape")?;
                    v.push(e);
                }
                '\'' => return Ok((Value::Str(v), i + 2)),
                c => v.push(c),
            }
        }
        return Err("unterminated string".into());
    }
    let end = s.find(',').unwrap_or(s.len());
    let tok = &s[..end];
    match tok {
        "true" => Ok((Value::Bool(true), end)),
        "false" => Ok((Value::Bool(false), end)),
        _ => tok.parse::<i64>().map(|n| (Value::Int(n), end)).map_err(|_| format!("bad property value `{tok}`")),
    }
}

fn write_props(f: &mut fmt::Formatter<'_>, props: &BTreeMap<String, Value>) -> fmt::Result {
    write!(f, "props=")?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{k}={v}")?;
    }
    Ok(())
}

impl fmt::Display for PropertyGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            let labels: Vec<&str> = n.labels.iter().map(String::as_str).collect();
            write!(f, "node {} labels={} ", n.id, labels.join(","))?;
            write_props(f, &n.props)?;
            writeln!(f)?;
        }
        for r in &self.rels {
            write!(f, "rel {} {} {} label={} ", r.id, r.src, r.dst, r.label)?;
            write_props(f, &r.props)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "node 0 labels=Person props=name='Alice'\n\
                          node 1 labels=Book props=\n\
                          node 2 labels=Person,Writer props=age=-3,name='O\\'Hara, J'\n\
                          rel 0 0 1 label=READ props=\n\
                          rel 1 2 1 label=WRITE props=year=1999\n";

    #[test]
    fn text_round_trip_is_exact() {
        let g = PropertyGraph::parse(SAMPLE).unwrap();
        assert_eq!(g.to_string(), SAMPLE);
        assert_eq!(PropertyGraph::parse(&g.to_string()).unwrap(), g);
        assert_eq!(g.node(2).unwrap().props["name"], Value::Str("O'Hara, J".into()));
    }

    #[test]
    fn rejects_dangling_and_garbage() {
        assert!(PropertyGraph::parse("rel 0 0 1 label=A props=").is_err());
        assert!(PropertyGraph::parse("node x labels= props=").is_err());
        assert!(PropertyGraph::parse("node 0 labels= props=a=1,").is_err());
        assert!(PropertyGraph::parse("node 0 labels= props=\nnode 0 labels= props=").is_err());
    }

    #[test]
    fn empty_graph_is_empty_text() {
        assert_eq!(PropertyGraph::default().to_string(), "");
        assert_eq!(PropertyGraph::parse("").unwrap(), PropertyGraph::default());
    }
}
