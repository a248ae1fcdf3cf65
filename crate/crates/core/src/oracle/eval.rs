use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use super::graph::PropertyGraph;
use super::value::Value;
use crate::frontend::*;

pub type Row = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unsupported by the evaluator: {0}")]
    Unsupported(String),
    #[error("type error: {0}")]
    Type(String),
}

/// Query result: a bag of rows, or a sequence when the final RETURN sorts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultBag {
    pub columns: usize,
    pub rows: Vec<Vec<Value>>,
    pub ordered: bool,
}

impl ResultBag {
    /// Multiset equality, or sequence equality when both sides are ordered.
    /// Two empty results are equal whatever their arity.
    pub fn same_as(&self, other: &ResultBag) -> bool {
        if self.rows.is_empty() && other.rows.is_empty() {
            return true;
        }
        if self.columns != other.columns || self.rows.len() != other.rows.len() {
            return false;
        }
        if self.ordered && other.ordered {
            return self.rows == other.rows;
        }
        let mut a = self.rows.clone();
        let mut b = other.rows.clone();
        a.sort();
        b.sort();
        a == b
    }

    pub fn multiplicity(&self, t: &[Value]) -> usize {
        self.rows.iter().filter(|r| r.as_slice() == t).count()
    }

    /// Reorder columns: column `i` of the result is column `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> ResultBag {
        ResultBag {
            columns: perm.len(),
            rows: self.rows.iter().map(|r| perm.iter().map(|&i| r[i].clone()).collect()).collect(),
            ordered: self.ordered,
        }
    }

    /// Distinct rows in sorted order.
    pub fn support(&self) -> Vec<Vec<Value>> {
        let set: BTreeSet<_> = self.rows.iter().cloned().collect();
        set.into_iter().collect()
    }
}

impl std::fmt::Display for ResultBag {
    /// One row per line.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Value::to_string).collect();
            writeln!(f, "({})", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Evaluate a validated query on a graph under bag semantics.
pub fn evaluate(q: &Query, g: &PropertyGraph) -> Result<ResultBag, EvalError> {
    Evaluator { g }.query(q)
}

struct Evaluator<'g> {
    g: &'g PropertyGraph,
}

/// Relationship claimed within the current MATCH, with the variable that claimed it.
type Used = Vec<(u32, Option<String>)>;

impl<'g> Evaluator<'g> {
    fn query(&self, q: &Query) -> Result<ResultBag, EvalError> {
        match q {
            Query::Single(s) => {
                let rows = self.clauses(&s.clauses, vec![Row::new()])?;
                let (_, out) = self.project(&s.ret, rows)?;
                Ok(ResultBag {
                    columns: output_arity(&s.ret, &s.clauses),
                    rows: out.into_iter().map(|(_, v)| v).collect(),
                    ordered: !s.ret.order_by.is_empty(),
                })
            }
            Query::Union { left, right, all } => {
                let l = self.query(left)?;
                let r = self.query(right)?;
                let mut rows = l.rows;
                rows.extend(r.rows);
                if !*all {
                    rows = dedup(rows);
                }
                Ok(ResultBag { columns: l.columns, rows, ordered: false })
            }
        }
    }

    fn clauses(&self, clauses: &[Clause], mut rows: Vec<Row>) -> Result<Vec<Row>, EvalError> {
        for c in clauses {
            rows = match c {
                Clause::Match(m) => self.match_clause(m, rows)?,
                Clause::With(p) => {
                    let (names, out) = self.project(p, rows)?;
                    let mut next = Vec::with_capacity(out.len());
                    for (_, vals) in out {
                        let row: Row = names.iter().cloned().zip(vals).collect();
                        if let Some(w) = &p.where_ {
                            if !truthy(&self.eval(w, &row, None)?) {
                                continue;
                            }
                        }
                        next.push(row);
                    }
                    next
                }
                Clause::Unwind(u) => {
                    let mut next = Vec::new();
                    for row in rows {
                        let items = match self.eval(&u.expr, &row, None)? {
                            Value::List(xs) => xs,
                            Value::Null => Vec::new(),
                            v => vec![v],
                        };
                        for x in items {
                            let mut r = row.clone();
                            r.insert(u.alias.clone(), x);
                            next.push(r);
                        }
                    }
                    next
                }
            };
        }
        Ok(rows)
    }

    fn match_clause(&self, m: &MatchClause, rows: Vec<Row>) -> Result<Vec<Row>, EvalError> {
        let mut out = Vec::new();
        for row in rows {
            let mut found = Vec::new();
            let mut r = row.clone();
            self.patterns(&m.patterns, 0, 0, None, &mut r, &mut Vec::new(), &mut found)?;
            let mut kept = Vec::new();
            for f in found {
                let ok = match &m.where_ {
                    Some(w) => truthy(&self.eval(w, &f, None)?),
                    None => true,
                };
                if ok {
                    kept.push(f);
                }
            }
            if m.optional && kept.is_empty() {
                let mut nulled = row.clone();
                for p in &m.patterns {
                    for v in pattern_vars(p) {
                        nulled.entry(v).or_insert(Value::Null);
                    }
                }
                kept.push(nulled);
            }
            out.extend(kept);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn patterns(
        &self,
        pats: &[Pattern],
        pi: usize,
        si: usize,
        cur: Option<u32>,
        row: &mut Row,
        used: &mut Used,
        out: &mut Vec<Row>,
    ) -> Result<(), EvalError> {
        let Some(p) = pats.get(pi) else {
            out.push(row.clone());
            return Ok(());
        };
        if si == 0 {
            for n in &self.g.nodes {
                if let Some(undo) = self.bind_node(&p.start, n.id, row)? {
                    self.patterns(pats, pi, 1, Some(n.id), row, used, out)?;
                    undo_bind(row, undo);
                }
            }
            return Ok(());
        }
        if si > p.chain.len() {
            return self.patterns(pats, pi + 1, 0, None, row, used, out);
        }
        let (rp, np) = &p.chain[si - 1];
        let from = cur.expect("pattern walk starts at a node");
        for (binding, rels, to) in self.expand(rp, from, row, used)? {
            let Some(node_undo) = self.bind_node(np, to, row)? else { continue };
            let rel_undo = match &rp.var {
                Some(v) => match bind_value(row, v, binding) {
                    Some(u) => Some(u),
                    None => {
                        undo_bind(row, node_undo);
                        continue;
                    }
                },
                None => None,
            };
            let mark = used.len();
            for r in &rels {
                used.push((*r, if rp.range.is_none() { rp.var.clone() } else { None }));
            }
            self.patterns(pats, pi, si + 1, Some(to), row, used, out)?;
            used.truncate(mark);
            if let Some(u) = rel_undo {
                undo_bind(row, u);
            }
            undo_bind(row, node_undo);
        }
        Ok(())
    }

    /// Try to bind a node pattern to node `id`; `None` when it does not match.
    fn bind_node(&self, np: &NodePat, id: u32, row: &mut Row) -> Result<Option<Undo>, EvalError> {
        let node = self.g.node(id).expect("node ids come from the graph");
        if !np.labels.iter().all(|l| node.labels.contains(l)) {
            return Ok(None);
        }
        if let Some(v) = &np.var {
            if let Some(existing) = row.get(v) {
                if *existing != Value::Node(id) {
                    return Ok(None);
                }
            }
        }
        for (k, e) in &np.props {
            let want = self.eval(e, row, None)?;
            let have = node.props.get(k).cloned().unwrap_or(Value::Null);
            if have.cypher_eq(&want) != Some(true) {
                return Ok(None);
            }
        }
        Ok(Some(match &np.var {
            Some(v) => bind_value(row, v, Value::Node(id)).expect("checked above"),
            None => Undo::Nothing,
        }))
    }

    /// Candidate relationship bindings leaving `from`: (value, rel ids, end node).
    fn expand(&self, rp: &RelPat, from: u32, row: &Row, used: &Used) -> Result<Vec<(Value, Vec<u32>, u32)>, EvalError> {
        let mut hops = Vec::new();
        for r in &self.g.rels {
            if !rp.labels.is_empty() && !rp.labels.contains(&r.label) {
                continue;
            }
            let mut ok = true;
            for (k, e) in &rp.props {
                let want = self.eval(e, row, None)?;
                let have = r.props.get(k).cloned().unwrap_or(Value::Null);
                if have.cypher_eq(&want) != Some(true) {
                    ok = false;
                    break;
                }
            }
            if ok {
                hops.push(r);
            }
        }
        let step = |at: u32| -> Vec<(u32, u32)> {
            let mut v = Vec::new();
            for r in &hops {
                if matches!(rp.dir, Direction::Right | Direction::Both) && r.src == at {
                    v.push((r.id, r.dst));
                }
                if matches!(rp.dir, Direction::Left | Direction::Both) && r.dst == at {
                    v.push((r.id, r.src));
                }
            }
            v
        };
        let claimed =
            |id: u32, var: &Option<String>| used.iter().any(|(u, uv)| *u == id && (uv.is_none() || uv != var));
        let mut out = Vec::new();
        match rp.range {
            None => {
                for (id, to) in step(from) {
                    if claimed(id, &rp.var) {
                        continue;
                    }
                    if let Some(v) = &rp.var {
                        if let Some(existing) = row.get(v) {
                            if *existing != Value::Rel(id) {
                                continue;
                            }
                        }
                    }
                    out.push((Value::Rel(id), vec![id], to));
                }
            }
            Some(range) => {
                let max = range.max.map_or(self.g.rels.len(), |m| m as usize);
                let mut path = Vec::new();
                self.paths(&step, from, range.min as usize, max, &mut path, &claimed, &mut out);
                if let Some(v) = &rp.var {
                    if let Some(existing) = row.get(v) {
                        out.retain(|(val, _, _)| val == existing);
                    }
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn paths(
        &self,
        step: &dyn Fn(u32) -> Vec<(u32, u32)>,
        at: u32,
        min: usize,
        max: usize,
        path: &mut Vec<u32>,
        claimed: &dyn Fn(u32, &Option<String>) -> bool,
        out: &mut Vec<(Value, Vec<u32>, u32)>,
    ) {
        if path.len() >= min {
            let value = Value::List(path.iter().map(|&r| Value::Rel(r)).collect());
            out.push((value, path.clone(), at));
        }
        if path.len() == max {
            return;
        }
        for (id, to) in step(at) {
            if path.contains(&id) || claimed(id, &None) {
                continue;
            }
            path.push(id);
            self.paths(step, to, min, max, path, claimed, out);
            path.pop();
        }
    }

    /// Evaluate a projection. Returns column names and, per output row, the
    /// context row used for ORDER BY together with the projected values.
    fn project(&self, p: &Projection, rows: Vec<Row>) -> Result<(Vec<String>, Vec<(Row, Vec<Value>)>), EvalError> {
        let mut items: Vec<ProjItem> = Vec::new();
        if p.star {
            let mut names: BTreeSet<String> = BTreeSet::new();
            for r in &rows {
                names.extend(r.keys().cloned());
            }
            for n in names {
                items.push(ProjItem { expr: Expr::var(&n), alias: None });
            }
        }
        items.extend(p.items.iter().cloned());
        let names: Vec<String> =
            items.iter().map(|i| i.output_name().map(String::from).unwrap_or_else(|| print_expr(&i.expr))).collect();
        let aggregating = items.iter().any(|i| i.expr.contains_aggregate());
        let mut out: Vec<(Row, Vec<Value>)> = Vec::new();
        if aggregating {
            let keys: Vec<usize> = (0..items.len()).filter(|&i| !items[i].expr.contains_aggregate()).collect();
            let mut groups: Vec<(Vec<Value>, Vec<Row>)> = Vec::new();
            for r in rows {
                let k = keys.iter().map(|&i| self.eval(&items[i].expr, &r, None)).collect::<Result<Vec<_>, _>>()?;
                match groups.iter_mut().find(|(gk, _)| *gk == k) {
                    Some((_, rs)) => rs.push(r),
                    None => groups.push((k, vec![r])),
                }
            }
            if groups.is_empty() && keys.is_empty() {
                groups.push((Vec::new(), Vec::new()));
            }
            for (_, rs) in groups {
                let first = rs.first().cloned().unwrap_or_default();
                let vals =
                    items.iter().map(|i| self.eval(&i.expr, &first, Some(&rs))).collect::<Result<Vec<_>, _>>()?;
                let ctx: Row = names.iter().cloned().zip(vals.iter().cloned()).collect();
                out.push((ctx, vals));
            }
        } else {
            for r in rows {
                let vals = items.iter().map(|i| self.eval(&i.expr, &r, None)).collect::<Result<Vec<_>, _>>()?;
                let mut ctx = if p.distinct { Row::new() } else { r };
                for (n, v) in names.iter().zip(&vals) {
                    ctx.insert(n.clone(), v.clone());
                }
                out.push((ctx, vals));
            }
        }
        if p.distinct {
            let mut seen = HashSet::new();
            out.retain(|(_, v)| seen.insert(v.clone()));
        }
        if !p.order_by.is_empty() {
            let mut keyed = Vec::with_capacity(out.len());
            for (ctx, vals) in out {
                let ks = p.order_by.iter().map(|s| self.eval(&s.expr, &ctx, None)).collect::<Result<Vec<_>, _>>()?;
                keyed.push((ks, ctx, vals));
            }
            keyed.sort_by(|a, b| {
                for (i, s) in p.order_by.iter().enumerate() {
                    let o = a.0[i].cmp(&b.0[i]);
                    let o = if s.desc { o.reverse() } else { o };
                    if o.is_ne() {
                        return o;
                    }
                }
                a.2.cmp(&b.2)
            });
            out = keyed.into_iter().map(|(_, c, v)| (c, v)).collect();
        }
        let skip = p.skip.unwrap_or(0).max(0) as usize;
        let out: Vec<_> = out.into_iter().skip(skip).collect();
        let out = match p.limit {
            Some(l) => out.into_iter().take(l.max(0) as usize).collect(),
            None => out,
        };
        Ok((names, out))
    }

    fn eval(&self, e: &Expr, row: &Row, group: Option<&[Row]>) -> Result<Value, EvalError> {
        Ok(match e {
            Expr::Int(n) => Value::Int(*n),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Null => Value::Null,
            Expr::List(xs) => Value::List(xs.iter().map(|x| self.eval(x, row, group)).collect::<Result<_, _>>()?),
            Expr::Map(kv) => Value::Map(
                kv.iter().map(|(k, x)| Ok((k.clone(), self.eval(x, row, group)?))).collect::<Result<_, EvalError>>()?,
            ),
            Expr::Var(v, _) => row.get(v).cloned().unwrap_or(Value::Null),
            Expr::Prop(base, k) => match self.eval(base, row, group)? {
                Value::Node(id) => self.g.node(id).and_then(|n| n.props.get(k)).cloned().unwrap_or(Value::Null),
                Value::Rel(id) => self.g.rel(id).and_then(|r| r.props.get(k)).cloned().unwrap_or(Value::Null),
                Value::Map(m) => m.get(k).cloned().unwrap_or(Value::Null),
                Value::Null => Value::Null,
                v => return Err(EvalError::Type(format!("property access on {v}"))),
            },
            Expr::Cmp(op, a, b) => {
                let a = self.eval(a, row, group)?;
                let b = self.eval(b, row, group)?;
                let r = match op {
                    CmpOp::Eq => a.cypher_eq(&b),
                    CmpOp::Ne => a.cypher_eq(&b).map(|x| !x),
                    CmpOp::Lt => a.cypher_cmp(&b).map(|o| o.is_lt()),
                    CmpOp::Le => a.cypher_cmp(&b).map(|o| o.is_le()),
                    CmpOp::Gt => a.cypher_cmp(&b).map(|o| o.is_gt()),
                    CmpOp::Ge => a.cypher_cmp(&b).map(|o| o.is_ge()),
                };
                r.map_or(Value::Null, Value::Bool)
            }
            Expr::And(a, b) => {
                let a = tvl(self.eval(a, row, group)?)?;
                let b = tvl(self.eval(b, row, group)?)?;
                match (a, b) {
                    (Some(false), _) | (_, Some(false)) => Value::Bool(false),
                    (Some(true), Some(true)) => Value::Bool(true),
                    _ => Value::Null,
                }
            }
            Expr::Or(a, b) => {
                let a = tvl(self.eval(a, row, group)?)?;
                let b = tvl(self.eval(b, row, group)?)?;
                match (a, b) {
                    (Some(true), _) | (_, Some(true)) => Value::Bool(true),
                    (Some(false), Some(false)) => Value::Bool(false),
                    _ => Value::Null,
                }
            }
            Expr::Not(a) => tvl(self.eval(a, row, group)?)?.map_or(Value::Null, |b| Value::Bool(!b)),
            Expr::IsNull(a, negated) => Value::Bool(self.eval(a, row, group)?.is_null() != *negated),
            Expr::Neg(a) => match self.eval(a, row, group)? {
                Value::Int(n) => n.checked_neg().map_or(Value::Null, Value::Int),
                Value::Null => Value::Null,
                v => return Err(EvalError::Type(format!("negation of {v}"))),
            },
            Expr::Pos(a) => match self.eval(a, row, group)? {
                v @ (Value::Int(_) | Value::Null) => v,
                v => return Err(EvalError::Type(format!("unary plus on {v}"))),
            },
            Expr::Func(name, args) => {
                let vals = args.iter().map(|a| self.eval(a, row, group)).collect::<Result<Vec<_>, _>>()?;
                self.function(name, vals)?
            }
            Expr::Agg { kind, distinct, arg } => {
                let Some(rows) = group else {
                    return Err(EvalError::Unsupported("aggregate outside of a projection".into()));
                };
                let mut vals = Vec::new();
                for r in rows {
                    match arg {
                        None => vals.push(Value::Bool(true)),
                        Some(a) => {
                            if a.contains_aggregate() {
                                return Err(EvalError::Unsupported("nested aggregate".into()));
                            }
                            let v = self.eval(a, r, None)?;
                            if !v.is_null() {
                                vals.push(v);
                            }
                        }
                    }
                }
                if *distinct {
                    vals = dedup(vals);
                }
                aggregate(*kind, vals)
            }
            Expr::Exists(sub) => {
                let rows = self.clauses(&sub.clauses, vec![row.clone()])?;
                Value::Bool(!rows.is_empty())
            }
        })
    }

    fn function(&self, name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
        let lower = name.to_ascii_lowercase();
        let arity = |n: usize| -> Result<(), EvalError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(EvalError::Type(format!("{name} takes {n} argument(s)")))
            }
        };
        Ok(match lower.as_str() {
            "id" => {
                arity(1)?;
                match &args[0] {
                    Value::Node(i) | Value::Rel(i) => Value::Int(*i as i64),
                    Value::Null => Value::Null,
                    v => return Err(EvalError::Type(format!("id() of {v}"))),
                }
            }
            "type" => {
                arity(1)?;
                match &args[0] {
                    Value::Rel(i) => Value::Str(self.g.rel(*i).map(|r| r.label.clone()).unwrap_or_default()),
                    Value::Null => Value::Null,
                    v => return Err(EvalError::Type(format!("type() of {v}"))),
                }
            }
            "labels" => {
                arity(1)?;
                match &args[0] {
                    Value::Node(i) => Value::List(
                        self.g.node(*i).map_or(Vec::new(), |n| n.labels.iter().cloned().map(Value::Str).collect()),
                    ),
                    Value::Null => Value::Null,
                    v => return Err(EvalError::Type(format!("labels() of {v}"))),
                }
            }
            "toupper" | "tolower" => {
                arity(1)?;
                match &args[0] {
                    Value::Str(s) if lower == "toupper" => Value::Str(s.to_uppercase()),
                    Value::Str(s) => Value::Str(s.to_lowercase()),
                    Value::Null => Value::Null,
                    v => return Err(EvalError::Type(format!("{name}() of {v}"))),
                }
            }
            "size" => {
                arity(1)?;
                match &args[0] {
                    Value::Str(s) => Value::Int(s.chars().count() as i64),
                    Value::List(xs) => Value::Int(xs.len() as i64),
                    Value::Null => Value::Null,
                    v => return Err(EvalError::Type(format!("size() of {v}"))),
                }
            }
            "abs" => {
                arity(1)?;
                match &args[0] {
                    Value::Int(n) => n.checked_abs().map_or(Value::Null, Value::Int),
                    Value::Null => Value::Null,
                    v => return Err(EvalError::Type(format!("abs() of {v}"))),
                }
            }
            "coalesce" => args.into_iter().find(|v| !v.is_null()).unwrap_or(Value::Null),
            _ => return Err(EvalError::Unsupported(format!("function {name}"))),
        })
    }
}

pub(crate) fn aggregate(kind: AggKind, vals: Vec<Value>) -> Value {
    match kind {
        AggKind::Count => Value::Int(vals.len() as i64),
        AggKind::Sum => {
            let s: i128 = vals.iter().filter_map(|v| if let Value::Int(n) = v { Some(*n as i128) } else { None }).sum();
            i64::try_from(s).map_or(Value::Null, Value::Int)
        }
        AggKind::Avg => {
            let ints: Vec<i128> =
                vals.iter().filter_map(|v| if let Value::Int(n) = v { Some(*n as i128) } else { None }).collect();
            if ints.is_empty() {
                Value::Null
            } else {
                Value::frac(ints.iter().sum(), ints.len() as i128)
            }
        }
        AggKind::Max => vals.into_iter().max().unwrap_or(Value::Null),
        AggKind::Min => vals.into_iter().min().unwrap_or(Value::Null),
        AggKind::Collect => {
            // Sorted so the list depends only on the bag of collected values.
            let mut v = vals;
            v.sort();
            Value::List(v)
        }
    }
}

enum Undo {
    Nothing,
    Remove(String),
}

fn bind_value(row: &mut Row, var: &str, v: Value) -> Option<Undo> {
    match row.get(var) {
        Some(existing) if *existing == v => Some(Undo::Nothing),
        Some(_) => None,
        None => {
            row.insert(var.to_string(), v);
            Some(Undo::Remove(var.to_string()))
        }
    }
}

fn undo_bind(row: &mut Row, u: Undo) {
    if let Undo::Remove(v) = u {
        row.remove(&v);
    }
}

fn truthy(v: &Value) -> bool {
    matches!(v, Value::Bool(true))
}

fn tvl(v: Value) -> Result<Option<bool>, EvalError> {
    match v {
        Value::Bool(b) => Ok(Some(b)),
        Value::Null => Ok(None),
        v => Err(EvalError::Type(format!("expected a boolean, got {v}"))),
    }
}

fn dedup<T: Clone + Eq + std::hash::Hash>(xs: Vec<T>) -> Vec<T> {
    let mut seen = HashSet::new();
    xs.into_iter().filter(|x| seen.insert(x.clone())).collect()
}

fn pattern_vars(p: &Pattern) -> Vec<String> {
    let mut out = Vec::new();
    for n in p.nodes() {
        if let Some(v) = &n.var {
            out.push(v.clone());
        }
    }
    for r in p.rels() {
        if let Some(v) = &r.var {
            out.push(v.clone());
        }
    }
    out
}

fn output_arity(ret: &Projection, clauses: &[Clause]) -> usize {
    if !ret.star {
        return ret.items.len();
    }
    let scope = check_clauses(clauses, Scope::default()).unwrap_or_default();
    scope.names().count() + ret.items.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::graph::PropertyGraph;

    fn run(q: &str, g: &str) -> ResultBag {
        let q = parse_checked(q).unwrap();
        let g = PropertyGraph::parse(g).unwrap();
        evaluate(&q, &g).unwrap()
    }

    const ONE_EDGE: &str = "node 0 labels= props=age=59\nnode 1 labels= props=\nrel 0 0 1 label=T props=\n";
    const LOOP: &str = "node 0 labels= props=\nrel 0 0 0 label=T props=\n";

    #[test]
    fn listing_query_on_library_graph() {
        let g = "node 0 labels=Person props=name='Alice'\nnode 1 labels=Book props=\n\
                 node 2 labels=Person props=name='Bob'\nrel 0 0 1 label=READ props=\nrel 1 2 1 label=WRITE props=\n";
        let r = run(
            "MATCH (reader:Person)-[:READ]->(book:Book)<-[:WRITE]-(writer) \
             WHERE reader.name = 'Alice' RETURN writer.name",
            g,
        );
        assert_eq!(r.rows, vec![vec![Value::Str("Bob".into())]]);
    }

    #[test]
    fn empty_graph_gives_empty_bag() {
        assert!(run("MATCH (n) RETURN n", "").rows.is_empty());
        assert_eq!(run("MATCH (n) RETURN COUNT(*)", "").rows, vec![vec![Value::Int(0)]]);
    }

    #[test]
    fn injectivity_within_match_only() {
        assert!(run("MATCH ()-[r1]->()-[r2]->() RETURN 1", LOOP).rows.is_empty());
        assert_eq!(run("MATCH ()-[r1]->() MATCH ()-[r2]->() RETURN 1", LOOP).rows.len(), 1);
        assert!(run("MATCH ()-[r1]->(), ()-[r2]->() RETURN 1", ONE_EDGE).rows.is_empty());
    }

    #[test]
    fn worked_example_multiplicity() {
        let r = run("MATCH (n1)-[r]->(n2) WHERE n1.age = 59 RETURN n1", ONE_EDGE);
        assert_eq!(r.rows, vec![vec![Value::Node(0)]]);
    }

    #[test]
    fn undirected_self_loop_counts_both_orientations() {
        assert_eq!(run("MATCH (a)-[r]-(b) RETURN a", LOOP).rows.len(), 2);
        assert_eq!(run("MATCH (a)-[r]-(b) RETURN a", ONE_EDGE).rows.len(), 2);
    }

    #[test]
    fn optional_match_fills_nulls() {
        let r = run("MATCH (a) OPTIONAL MATCH (a)-[r]->(b) RETURN a, b", ONE_EDGE);
        let mut rows = r.rows.clone();
        rows.sort();
        assert_eq!(rows, vec![vec![Value::Node(0), Value::Node(1)], vec![Value::Node(1), Value::Null]]);
    }

    #[test]
    fn union_dedups_and_union_all_does_not() {
        let all = run("MATCH (n) RETURN 1 UNION ALL MATCH (n) RETURN 1", ONE_EDGE);
        let set = run("MATCH (n) RETURN 1 UNION MATCH (n) RETURN 1", ONE_EDGE);
        assert_eq!(all.rows.len(), 4);
        assert_eq!(set.rows.len(), 1);
    }

    #[test]
    fn aggregates_group_implicitly() {
        let g = "node 0 labels= props=k=1,v=2\nnode 1 labels= props=k=1,v=3\nnode 2 labels= props=k=2\n";
        let mut r = run("MATCH (n) RETURN n.k, SUM(n.v), COUNT(n.v), MAX(n.v), AVG(n.v), COLLECT(n.v)", g).rows;
        r.sort();
        assert_eq!(
            r,
            vec![
                vec![
                    Value::Int(1),
                    Value::Int(5),
                    Value::Int(2),
                    Value::Int(3),
                    Value::Frac(5, 2),
                    Value::List(vec![Value::Int(2), Value::Int(3)])
                ],
                vec![Value::Int(2), Value::Int(0), Value::Int(0), Value::Null, Value::Null, Value::List(vec![])],
            ]
        );
    }

    #[test]
    fn order_limit_skip() {
        let g = "node 0 labels= props=x=3\nnode 1 labels= props=x=1\nnode 2 labels= props=\nnode 3 labels= props=x=2\n";
        let r = run("MATCH (n) RETURN n.x ORDER BY n.x", g);
        assert!(r.ordered);
        let xs: Vec<_> = r.rows.iter().map(|r| r[0].clone()).collect();
        assert_eq!(xs, [Value::Int(1), Value::Int(2), Value::Int(3), Value::Null]);
        let r = run("MATCH (n) RETURN n.x ORDER BY n.x DESC SKIP 1 LIMIT 2", g);
        let xs: Vec<_> = r.rows.iter().map(|r| r[0].clone()).collect();
        assert_eq!(xs, [Value::Int(3), Value::Int(2)]);
    }

    #[test]
    fn varlength_paths_use_distinct_relationships() {
        let g = "node 0 labels= props=\nnode 1 labels= props=\nrel 0 0 1 label=T props=\nrel 1 1 0 label=T props=\n";
        assert_eq!(run("MATCH (a)-[*]->(b) RETURN a, b", g).rows.len(), 4);
        assert_eq!(run("MATCH (a)-[*1..1]->(b) RETURN a", g).rows.len(), 2);
        assert_eq!(run("MATCH (a)-[*2..3]->(b) RETURN a", g).rows.len(), 2);
        assert_eq!(run("MATCH (a)-[*]->(b)-[r]->(c) RETURN a", g).rows.len(), 2);
    }

    #[test]
    fn unwind_and_with() {
        let r = run("UNWIND [{c1: 0, c2: 1}, {c1: 2, c2: 3}] AS row RETURN row.c1, row.c2", "");
        assert_eq!(r.rows, vec![vec![Value::Int(0), Value::Int(1)], vec![Value::Int(2), Value::Int(3)]]);
        let r = run("MATCH (n) WITH n.age AS a WHERE a IS NOT NULL RETURN a", ONE_EDGE);
        assert_eq!(r.rows, vec![vec![Value::Int(59)]]);
    }

    #[test]
    fn three_valued_where() {
        let g = "node 0 labels= props=\nnode 1 labels= props=x=1\n";
        assert_eq!(run("MATCH (n) WHERE NOT n.x = 2 RETURN n", g).rows.len(), 1);
        assert_eq!(run("MATCH (n) WHERE n.x = 1 OR n.x IS NULL RETURN n", g).rows.len(), 2);
    }

    #[test]
    fn return_star_is_sorted() {
        let r = run("MATCH (x)-[z]->()-[y]->() RETURN *", "");
        assert_eq!(r.columns, 3);
    }

    #[test]
    fn exists_subquery() {
        let r = run("MATCH (n) WHERE EXISTS { MATCH (n)-->(m) } RETURN n", ONE_EDGE);
        assert_eq!(r.rows, vec![vec![Value::Node(0)]]);
    }
}
