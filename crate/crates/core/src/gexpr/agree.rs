//! Cross-check of compiled expressions against the oracle evaluator.

use super::{interpret, simplify, Compiled};
use crate::frontend::Query;
use crate::oracle::{evaluate, PropertyGraph, Value};

/// A tuple whose multiplicity differs between the evaluator and `interpret`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub tuple: Vec<Value>,
    pub oracle: u64,
    pub raw: u64,
    pub simplified: u64,
}

/// Compare, on one graph, the evaluator's multiplicity of every candidate
/// tuple with `interpret` of the raw and the simplified expression.
/// `values` is the property-value alphabet added to the candidates.
pub fn compare_multiplicities(
    q: &Query,
    c: &Compiled,
    graph: &PropertyGraph,
    values: &[Value],
) -> Result<Option<Mismatch>, String> {
    let res = evaluate(q, graph).map_err(|e| e.to_string())?;
    let s = simplify(&c.g);
    for t in candidate_tuples(c.columns.len(), graph, values, &res.rows) {
        let want = res.multiplicity(&t) as u64;
        let raw = interpret(&c.g, graph, &t).map_err(|e| e.to_string())?;
        let simplified = interpret(&s, graph, &t).map_err(|e| e.to_string())?;
        if raw != want || simplified != want {
            return Ok(Some(Mismatch { tuple: t, oracle: want, raw, simplified }));
        }
    }
    Ok(None)
}

/// Every result row, plus every combination of graph entities, alphabet
/// values and null when there are at most 400 of them.
pub fn candidate_tuples(arity: usize, g: &PropertyGraph, values: &[Value], rows: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut vals: Vec<Value> = g.nodes.iter().map(|n| Value::Node(n.id)).collect();
    vals.extend(g.rels.iter().map(|r| Value::Rel(r.id)));
    vals.extend(values.iter().cloned());
    vals.push(Value::Null);
    let mut out: Vec<Vec<Value>> = rows.to_vec();
    if vals.len().checked_pow(arity as u32).is_some_and(|n| n <= 400) {
        let mut acc = vec![Vec::new()];
        for _ in 0..arity {
            acc = acc
                .into_iter()
                .flat_map(|t: Vec<Value>| {
                    vals.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(v.clone());
                        t
                    })
                })
                .collect();
        }
        out.extend(acc);
    }
    out.sort();
    out.dedup();
    out
}
