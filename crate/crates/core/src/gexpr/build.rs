//! Compilation of a normalized query into a G-expression.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::*;
use crate::frontend::*;
use crate::normalize::walk::{clause_refs, projection_refs};
use crate::normalize::NormalizedAst;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported feature: {0}")]
pub struct UnsupportedFeature(pub String);

type R<T> = Result<T, UnsupportedFeature>;

fn unsupported<T>(what: impl Into<String>) -> R<T> {
    Err(UnsupportedFeature(what.into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ColumnType {
    Node,
    Rel,
    Prop(String),
    Agg(AggKind),
    Value,
    /// Hidden ORDER BY key.
    OrderKey {
        desc: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub sort: Sort,
    pub ty: ColumnType,
}

/// A compiled query: `g` over the columns, where the trailing
/// `columns.len() - visible` columns are hidden ORDER BY keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compiled {
    pub g: GExpr,
    pub columns: Vec<Column>,
    pub visible: usize,
    /// The final RETURN sorts its rows.
    pub ordered: bool,
}

/// Rows of an earlier segment feeding this one: `vars[j]` is bound to
/// argument `positions[j]` of bag `id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagInput {
    pub id: usize,
    pub vars: Vec<(String, VarKind)>,
    pub positions: Vec<usize>,
}

pub fn build(n: &NormalizedAst) -> R<Compiled> {
    build_query(&n.ast)
}

pub fn build_query(q: &Query) -> R<Compiled> {
    let mut b = Builder::default();
    let (g, columns) = b.query(q, None)?;
    finish(g, columns, q)
}

/// Compile a segment whose leading variables come from an earlier segment.
pub fn build_segment(q: &Query, input: &BagInput) -> R<Compiled> {
    let mut b = Builder::default();
    let (g, columns) = b.query(q, Some(input))?;
    finish(g, columns, q)
}

fn finish(g: GExpr, columns: Vec<Column>, q: &Query) -> R<Compiled> {
    let visible = columns.iter().filter(|c| !matches!(c.ty, ColumnType::OrderKey { .. })).count();
    let ordered = match q {
        Query::Single(s) => !s.ret.order_by.is_empty(),
        Query::Union { .. } => false,
    };
    Ok(Compiled { g, columns, visible, ordered })
}

#[derive(Debug, Clone)]
enum Binding {
    Term(Term, VarKind),
    /// Map-valued UNWIND element, one term per key.
    Map(BTreeMap<String, Term>),
    /// Variable-length relationship list; only usable as a pattern name.
    Opaque,
}

type Env = BTreeMap<String, Binding>;

#[derive(Debug, Clone, Default)]
struct Frame {
    vars: Vec<Var>,
    factors: Vec<GExpr>,
    env: Env,
}

impl Frame {
    fn close(&self) -> GExpr {
        GExpr::sum(self.vars.clone(), GExpr::mul(self.factors.clone()))
    }
}

enum End<'a> {
    Return(&'a Projection),
    /// Body of EXISTS: the rows themselves.
    Close,
}

#[derive(Default)]
struct Builder {
    next: u32,
    columns: Option<Vec<Column>>,
}

const MAX_RANGE_COMBINATIONS: usize = 64;

impl Builder {
    fn fresh(&mut self, sort: Sort, temp: bool) -> Var {
        self.next += 1;
        Var { id: self.next, sort, temp }
    }

    fn query(&mut self, q: &Query, input: Option<&BagInput>) -> R<(GExpr, Vec<Column>)> {
        match q {
            Query::Single(s) => {
                self.columns = None;
                let s = rewrite_unwind_collect(s);
                let mut f = Frame::default();
                if let Some(inp) = input {
                    let arity = inp.positions.iter().max().map_or(0, |m| m + 1);
                    let mut slots: Vec<Option<Var>> = vec![None; arity];
                    for ((name, kind), &pos) in inp.vars.iter().zip(&inp.positions) {
                        let sort = if *kind == VarKind::Value { Sort::Val } else { Sort::Ent };
                        let v = self.fresh(sort, true);
                        slots[pos] = Some(v);
                        f.env.insert(name.clone(), Binding::Term(Term::Var(v), *kind));
                    }
                    let vars: Vec<Var> =
                        slots.into_iter().map(|v| v.unwrap_or_else(|| self.fresh(Sort::Val, true))).collect();
                    f.factors.push(GExpr::Bag(inp.id, vars.iter().map(|v| Term::Var(*v)).collect()));
                    f.vars = vars;
                }
                let g = self.rest(&s.clauses, &End::Return(&s.ret), f)?;
                let cols = self.columns.take().expect("RETURN reached");
                Ok((g, cols))
            }
            Query::Union { left, right, all } => {
                let (l, lc) = self.query(left, input)?;
                let (r, rc) = self.query(right, input)?;
                let sorts = |c: &[Column]| c.iter().map(|c| c.sort).collect::<Vec<_>>();
                if sorts(&lc) != sorts(&rc) {
                    return unsupported("UNION of branches with different column sorts");
                }
                if lc.iter().any(|c| matches!(c.ty, ColumnType::OrderKey { .. })) {
                    return unsupported("ORDER BY inside a UNION branch");
                }
                let g = GExpr::add(vec![l, r]);
                Ok((if *all { g } else { GExpr::squash(g) }, lc))
            }
        }
    }

    fn rest(&mut self, cs: &[Clause], end: &End, mut f: Frame) -> R<GExpr> {
        let Some((c, tail)) = cs.split_first() else {
            return self.end(end, f);
        };
        match c {
            Clause::Match(m) if !m.optional => {
                self.match_clause(m, &mut f)?;
                self.rest(tail, end, f)
            }
            Clause::Match(m) => {
                let mut core = Frame { vars: Vec::new(), factors: Vec::new(), env: f.env.clone() };
                self.match_clause(m, &mut core)?;
                let mut miss = f.clone();
                miss.factors.push(GExpr::not(core.close()));
                for (name, b) in &core.env {
                    if !f.env.contains_key(name) {
                        let nulled = match b {
                            Binding::Term(_, k) => Binding::Term(Term::Nil, *k),
                            other => other.clone(),
                        };
                        miss.env.insert(name.clone(), nulled);
                    }
                }
                if groups_later(tail, end) {
                    // One frame whose optional variables are nil on a miss, so
                    // that grouping sees matched and padded rows together.
                    let mut probe = Frame { vars: Vec::new(), factors: Vec::new(), env: f.env.clone() };
                    self.match_clause(m, &mut probe)?;
                    let mut missed = vec![GExpr::not(probe.close())];
                    for v in &core.vars {
                        let null = if v.sort == Sort::Ent { Term::Nil } else { Term::Const(Value::Null) };
                        missed.push(GExpr::same(Term::Var(*v), null));
                    }
                    let mut both = f;
                    both.vars.extend(core.vars);
                    both.factors.push(GExpr::add(vec![GExpr::mul(core.factors), GExpr::mul(missed)]));
                    both.env = core.env;
                    return self.rest(tail, end, both);
                }
                let mut hit = f;
                hit.vars.extend(core.vars);
                hit.factors.extend(core.factors);
                hit.env = core.env;
                let a = self.rest(tail, end, hit)?;
                let b = self.rest(tail, end, miss)?;
                Ok(GExpr::add(vec![a, b]))
            }
            Clause::With(p) => {
                if p.skip.is_some() || p.limit.is_some() {
                    return unsupported("SKIP/LIMIT inside a query segment");
                }
                let f = self.with(p, f)?;
                self.rest(tail, end, f)
            }
            Clause::Unwind(u) => {
                self.unwind(u, &mut f)?;
                self.rest(tail, end, f)
            }
        }
    }

    fn end(&mut self, end: &End, f: Frame) -> R<GExpr> {
        match end {
            End::Close => Ok(f.close()),
            End::Return(p) => self.ret(p, f),
        }
    }

    // ---- patterns ----

    fn node(&mut self, np: &NodePat, f: &mut Frame) -> R<Term> {
        let t = match &np.var {
            Some(v) => match f.env.get(v) {
                Some(Binding::Term(t, _)) if t.sort() == Sort::Ent => t.clone(),
                Some(_) => return unsupported(format!("`{v}` used as a node pattern")),
                None => {
                    let e = self.fresh(Sort::Ent, false);
                    f.vars.push(e);
                    f.env.insert(v.clone(), Binding::Term(Term::Var(e), VarKind::Node));
                    Term::Var(e)
                }
            },
            None => {
                let e = self.fresh(Sort::Ent, false);
                f.vars.push(e);
                Term::Var(e)
            }
        };
        f.factors.push(GExpr::App(Pred::Node(t.clone())));
        for l in &np.labels {
            f.factors.push(GExpr::App(Pred::Lab(t.clone(), l.clone())));
        }
        for (k, e) in &np.props {
            let v = self.term(e, &f.env)?;
            f.factors.push(GExpr::Bracket(Atom::Cmp(CmpOp::Eq, Term::Prop(Box::new(t.clone()), k.clone()), v)));
        }
        Ok(t)
    }

    /// Factors for one relationship hop `r` between `a` and `b`.
    fn hop(&mut self, rp: &RelPat, r: &Term, a: &Term, b: &Term, env: &Env) -> R<Vec<GExpr>> {
        let mut out = vec![GExpr::App(Pred::Rel(r.clone()))];
        let mut labels = rp.labels.clone();
        labels.sort();
        labels.dedup();
        if !labels.is_empty() {
            out.push(GExpr::add(labels.iter().map(|l| GExpr::App(Pred::Lab(r.clone(), l.clone()))).collect()));
        }
        for (k, e) in &rp.props {
            let v = self.term(e, env)?;
            out.push(GExpr::Bracket(Atom::Cmp(CmpOp::Eq, Term::Prop(Box::new(r.clone()), k.clone()), v)));
        }
        let src = Term::Src(Box::new(r.clone()));
        let dst = Term::Dst(Box::new(r.clone()));
        let fwd = || GExpr::mul(vec![GExpr::same(src.clone(), a.clone()), GExpr::same(dst.clone(), b.clone())]);
        let bwd = || GExpr::mul(vec![GExpr::same(src.clone(), b.clone()), GExpr::same(dst.clone(), a.clone())]);
        out.push(match rp.dir {
            Direction::Right => fwd(),
            Direction::Left => bwd(),
            Direction::Both => GExpr::add(vec![fwd(), bwd()]),
        });
        Ok(out)
    }

    fn match_clause(&mut self, m: &MatchClause, f: &mut Frame) -> R<()> {
        // Single-hop relationships of this clause, for injectivity.
        let mut rels: Vec<(Option<String>, Term)> = Vec::new();
        let mut ranges: Vec<(Term, Term, RelPat)> = Vec::new();
        let mut paths: Vec<Term> = Vec::new();
        for p in &m.patterns {
            let mut cur = self.node(&p.start, f)?;
            for (rp, np) in &p.chain {
                let next = self.node(np, f)?;
                match rp.range {
                    None => {
                        let r = match &rp.var {
                            Some(v) => match f.env.get(v) {
                                Some(Binding::Term(t, VarKind::Rel)) => t.clone(),
                                Some(_) => return unsupported(format!("`{v}` used as a relationship pattern")),
                                None => {
                                    let e = self.fresh(Sort::Ent, false);
                                    f.vars.push(e);
                                    f.env.insert(v.clone(), Binding::Term(Term::Var(e), VarKind::Rel));
                                    Term::Var(e)
                                }
                            },
                            None => {
                                let e = self.fresh(Sort::Ent, false);
                                f.vars.push(e);
                                Term::Var(e)
                            }
                        };
                        let fs = self.hop(rp, &r, &cur, &next, &f.env)?;
                        f.factors.extend(fs);
                        rels.push((rp.var.clone(), r));
                    }
                    Some(range) => {
                        if let Some(v) = &rp.var {
                            if f.env.contains_key(v) {
                                return unsupported("variable-length relationship variable bound twice");
                            }
                            f.env.insert(v.clone(), Binding::Opaque);
                        }
                        match range.max {
                            Some(_) => ranges.push((cur.clone(), next.clone(), rp.clone())),
                            None => {
                                let p = self.fresh(Sort::Ent, false);
                                f.vars.push(p);
                                let sig = self.path_sig(rp, range.min, &f.env)?;
                                let (s, d) = if rp.dir == Direction::Left { (&next, &cur) } else { (&cur, &next) };
                                let pt = Term::Var(p);
                                f.factors.push(GExpr::App(Pred::Path(sig, pt.clone())));
                                f.factors.push(GExpr::same(Term::Src(Box::new(pt.clone())), s.clone()));
                                f.factors.push(GExpr::same(Term::Dst(Box::new(pt.clone())), d.clone()));
                                paths.push(pt);
                            }
                        }
                    }
                }
                cur = next;
            }
        }
        for i in 0..rels.len() {
            for j in i + 1..rels.len() {
                if rels[i].0.is_some() && rels[i].0 == rels[j].0 {
                    continue;
                }
                f.factors.push(GExpr::not(GExpr::same(rels[i].1.clone(), rels[j].1.clone())));
            }
        }
        for (i, p) in paths.iter().enumerate() {
            for (_, r) in &rels {
                f.factors.push(GExpr::not(GExpr::App(Pred::Overlap(r.clone(), p.clone()))));
            }
            for q in &paths[i + 1..] {
                f.factors.push(GExpr::not(GExpr::App(Pred::Overlap(p.clone(), q.clone()))));
            }
        }
        if !ranges.is_empty() {
            if !paths.is_empty() {
                return unsupported("bounded and unbounded variable-length patterns in one MATCH");
            }
            let g = self.ranges(&ranges, &rels, &f.env)?;
            f.factors.push(g);
        }
        if let Some(w) = &m.where_ {
            let t = self.truth(w, &f.env, true)?;
            f.factors.push(t);
        }
        Ok(())
    }

    fn path_sig(&mut self, rp: &RelPat, min: u32, env: &Env) -> R<PathSig> {
        let mut labels = rp.labels.clone();
        labels.sort();
        labels.dedup();
        let mut props = Vec::new();
        for (k, e) in &rp.props {
            match self.term(e, env)? {
                Term::Const(v) => props.push((k.clone(), v)),
                _ => return unsupported("non-constant property on an unbounded path"),
            }
        }
        props.sort();
        let dir = if rp.dir == Direction::Both { Direction::Both } else { Direction::Right };
        Ok(PathSig { labels, dir, min, props })
    }

    /// Bounded variable-length patterns of one MATCH, expanded per length.
    fn ranges(&mut self, ranges: &[(Term, Term, RelPat)], rels: &[(Option<String>, Term)], env: &Env) -> R<GExpr> {
        let mut combos: Vec<Vec<u32>> = vec![Vec::new()];
        for (_, _, rp) in ranges {
            let r = rp.range.expect("bounded range");
            let max = r.max.expect("bounded range");
            if max < r.min {
                return Ok(GExpr::Zero);
            }
            let mut next = Vec::new();
            for c in &combos {
                for k in r.min..=max {
                    let mut c = c.clone();
                    c.push(k);
                    next.push(c);
                }
            }
            combos = next;
            if combos.len() > MAX_RANGE_COMBINATIONS {
                return unsupported("too many variable-length expansions");
            }
        }
        let mut alts = Vec::new();
        for combo in combos {
            let mut vars = Vec::new();
            let mut factors = Vec::new();
            let mut hops: Vec<Term> = Vec::new();
            for ((a, b, rp), &k) in ranges.iter().zip(&combo) {
                if k == 0 {
                    factors.push(GExpr::same(a.clone(), b.clone()));
                    continue;
                }
                let mut at = a.clone();
                for i in 0..k {
                    let to = if i + 1 == k {
                        b.clone()
                    } else {
                        let m = self.fresh(Sort::Ent, false);
                        vars.push(m);
                        factors.push(GExpr::App(Pred::Node(Term::Var(m))));
                        Term::Var(m)
                    };
                    let h = self.fresh(Sort::Ent, false);
                    vars.push(h);
                    let ht = Term::Var(h);
                    factors.extend(self.hop(rp, &ht, &at, &to, env)?);
                    hops.push(ht);
                    at = to;
                }
            }
            for i in 0..hops.len() {
                for j in i + 1..hops.len() {
                    factors.push(GExpr::not(GExpr::same(hops[i].clone(), hops[j].clone())));
                }
                for (_, r) in rels {
                    factors.push(GExpr::not(GExpr::same(hops[i].clone(), r.clone())));
                }
            }
            alts.push(GExpr::sum(vars, GExpr::mul(factors)));
        }
        Ok(GExpr::add(alts))
    }

    // ---- UNWIND ----

    fn unwind(&mut self, u: &Unwind, f: &mut Frame) -> R<()> {
        let elems = match &u.expr {
            Expr::List(xs) => xs.clone(),
            Expr::Null => Vec::new(),
            e if e.is_literal() => vec![e.clone()],
            _ => return unsupported("UNWIND over a non-constant list"),
        };
        if !elems.is_empty() && elems.iter().all(|e| matches!(e, Expr::Map(_))) {
            let mut keys = BTreeSet::new();
            for e in &elems {
                if let Expr::Map(kv) = e {
                    keys.extend(kv.iter().map(|(k, _)| k.clone()));
                }
            }
            let mut temps = BTreeMap::new();
            for k in &keys {
                let v = self.fresh(Sort::Val, true);
                f.vars.push(v);
                temps.insert(k.clone(), Term::Var(v));
            }
            let mut alts = Vec::new();
            for e in &elems {
                let Expr::Map(kv) = e else { unreachable!() };
                let mut pins = Vec::new();
                for k in &keys {
                    let val = match kv.iter().find(|(kk, _)| kk == k) {
                        Some((_, x)) => literal(x)?,
                        None => Value::Null,
                    };
                    pins.push(GExpr::same(temps[k].clone(), Term::Const(val)));
                }
                alts.push(GExpr::mul(pins));
            }
            f.factors.push(GExpr::add(alts));
            f.env.insert(u.alias.clone(), Binding::Map(temps));
            return Ok(());
        }
        let v = self.fresh(Sort::Val, true);
        f.vars.push(v);
        let mut alts = Vec::new();
        for e in &elems {
            alts.push(GExpr::same(Term::Var(v), Term::Const(literal(e)?)));
        }
        f.factors.push(GExpr::add(alts));
        f.env.insert(u.alias.clone(), Binding::Term(Term::Var(v), VarKind::Value));
        Ok(())
    }

    // ---- projections ----

    fn items(&self, p: &Projection, env: &Env) -> Vec<ProjItem> {
        let mut items = Vec::new();
        if p.star {
            for name in env.keys() {
                items.push(ProjItem { expr: Expr::var(name), alias: None });
            }
        }
        items.extend(p.items.iter().cloned());
        items
    }

    fn binding_of(&mut self, e: &Expr, env: &Env) -> R<Binding> {
        match e {
            Expr::Var(v, _) => env.get(v).cloned().ok_or_else(|| UnsupportedFeature(format!("unbound `{v}`"))),
            _ => Ok(Binding::Term(self.term(e, env)?, VarKind::Value)),
        }
    }

    fn with(&mut self, p: &Projection, f: Frame) -> R<Frame> {
        let items = self.items(p, &f.env);
        let mut out = if !p.distinct && !p.has_aggregate() {
            let mut env = Env::new();
            for it in &items {
                let name = it.output_name().expect("WITH items are named").to_string();
                let b = self.binding_of(&it.expr, &f.env)?;
                env.insert(name, b);
            }
            Frame { vars: f.vars, factors: f.factors, env }
        } else {
            let mut outs = Vec::new();
            let mut env = Env::new();
            let mut temps = Vec::new();
            for it in &items {
                let (sort, kind) = match &it.expr {
                    Expr::Agg { .. } => (Sort::Val, VarKind::Value),
                    Expr::Var(v, _) => match f.env.get(v) {
                        Some(Binding::Term(t, k)) => (t.sort(), *k),
                        _ => return unsupported(format!("`{v}` cannot be grouped on")),
                    },
                    e => (self.term(e, &f.env)?.sort(), VarKind::Value),
                };
                let v = self.fresh(sort, true);
                temps.push(v);
                outs.push(Term::Var(v));
                env.insert(
                    it.output_name().expect("WITH items are named").to_string(),
                    Binding::Term(Term::Var(v), kind),
                );
            }
            let factors = self.group(&f, &items, &outs)?;
            Frame { vars: temps, factors, env }
        };
        if let Some(w) = &p.where_ {
            let t = self.truth(w, &out.env, true)?;
            out.factors.push(t);
        }
        Ok(out)
    }

    /// Factors of a DISTINCT or aggregating projection whose item `i` is `outs[i]`.
    fn group(&mut self, f: &Frame, items: &[ProjItem], outs: &[Term]) -> R<Vec<GExpr>> {
        let mut pins = Vec::new();
        let mut aggs = Vec::new();
        for (it, o) in items.iter().zip(outs) {
            match &it.expr {
                Expr::Agg { kind, distinct, arg } => {
                    if arg.as_ref().is_some_and(|a| a.contains_aggregate()) {
                        return unsupported("nested aggregate");
                    }
                    aggs.push((*kind, *distinct, arg.as_deref(), o.clone()));
                }
                e if e.contains_aggregate() => return unsupported("arithmetic over an aggregate"),
                e => pins.push(GExpr::same(o.clone(), self.term(e, &f.env)?)),
            }
        }
        let mut body = f.factors.clone();
        body.extend(pins.iter().cloned());
        let body = GExpr::mul(body);
        let mut out = Vec::new();
        if !pins.is_empty() || aggs.is_empty() {
            out.push(GExpr::squash(GExpr::sum(f.vars.clone(), body.clone())));
        }
        for (kind, distinct, arg, o) in aggs {
            let t = self.aggregate(kind, distinct, arg, &f.vars, &body, &f.env)?;
            out.push(GExpr::same(o, t));
        }
        Ok(out)
    }

    fn aggregate(
        &mut self,
        kind: AggKind,
        distinct: bool,
        arg: Option<&Expr>,
        vars: &[Var],
        body: &GExpr,
        env: &Env,
    ) -> R<Term> {
        let sum = |extra: Vec<GExpr>| {
            let mut fs = vec![body.clone()];
            fs.extend(extra);
            GExpr::sum(vars.to_vec(), GExpr::mul(fs))
        };
        let Some(arg) = arg else {
            return Ok(Term::Count(Box::new(sum(vec![]))));
        };
        let x = self.term(arg, env)?;
        Ok(match (kind, distinct) {
            (AggKind::Count, false) => Term::Count(Box::new(sum(vec![GExpr::Bracket(Atom::NotNull(x))]))),
            (AggKind::Count, true) => {
                let v = self.fresh(x.sort(), true);
                let inner = GExpr::squash(sum(vec![GExpr::same(Term::Var(v), x)]));
                Term::Count(Box::new(GExpr::sum(
                    vec![v],
                    GExpr::mul(vec![inner, GExpr::Bracket(Atom::NotNull(Term::Var(v)))]),
                )))
            }
            (AggKind::Sum, false) => Term::Count(Box::new(sum(vec![GExpr::IntVal(x)]))),
            (kind, distinct) => {
                Term::Agg { kind, distinct, vars: vars.to_vec(), body: Box::new(body.clone()), arg: Box::new(x) }
            }
        })
    }

    fn ret(&mut self, p: &Projection, f: Frame) -> R<GExpr> {
        let items = self.items(p, &f.env);
        let mut terms = Vec::new();
        let mut columns = Vec::new();
        for it in &items {
            let (sort, ty) = match &it.expr {
                Expr::Agg { kind, .. } => (Sort::Val, ColumnType::Agg(*kind)),
                e if e.contains_aggregate() => return unsupported("arithmetic over an aggregate"),
                e => {
                    let t = self.term(e, &f.env)?;
                    let ty = match e {
                        Expr::Var(v, _) => match f.env.get(v) {
                            Some(Binding::Term(_, VarKind::Node)) => ColumnType::Node,
                            Some(Binding::Term(_, VarKind::Rel)) => ColumnType::Rel,
                            _ => ColumnType::Value,
                        },
                        Expr::Prop(_, k) => ColumnType::Prop(k.clone()),
                        _ => ColumnType::Value,
                    };
                    let s = t.sort();
                    terms.push(Some(t));
                    (s, ty)
                }
            };
            if matches!(it.expr, Expr::Agg { .. }) {
                terms.push(None);
            }
            let name = it.output_name().map(String::from).unwrap_or_else(|| print_expr(&it.expr));
            columns.push(Column { name, sort, ty });
        }
        let n = items.len();
        let outs: Vec<Term> = columns.iter().enumerate().map(|(i, c)| Term::Col(i, c.sort)).collect();
        let grouped = p.distinct || p.has_aggregate();
        // Environment for ORDER BY keys.
        let mut key_env = if grouped { Env::new() } else { f.env.clone() };
        for (i, it) in items.iter().enumerate() {
            if let Some(name) = it.output_name() {
                let kind = match &columns[i].ty {
                    ColumnType::Node => VarKind::Node,
                    ColumnType::Rel => VarKind::Rel,
                    _ => VarKind::Value,
                };
                let b = if grouped { Binding::Term(outs[i].clone(), kind) } else { self.binding_of(&it.expr, &f.env)? };
                key_env.insert(name.to_string(), b);
            }
        }
        let mut tail = Vec::new();
        for (j, s) in p.order_by.iter().enumerate() {
            let k = self.term(&s.expr, &key_env)?;
            let col = Term::Col(n + j, k.sort());
            columns.push(Column {
                name: print_expr(&s.expr),
                sort: k.sort(),
                ty: ColumnType::OrderKey { desc: s.desc },
            });
            tail.push(GExpr::same(col, k));
        }
        if let Some(l) = p.limit {
            tail.push(GExpr::same(Term::Limit, Term::int(l)));
        }
        if let Some(s) = p.skip {
            tail.push(GExpr::same(Term::Skip, Term::int(s)));
        }
        let g = if grouped {
            let mut fs = self.group(&f, &items, &outs)?;
            fs.extend(tail);
            GExpr::mul(fs)
        } else {
            let mut fs = f.factors.clone();
            for (o, t) in outs.iter().zip(&terms) {
                fs.push(GExpr::same(o.clone(), t.clone().expect("no aggregates")));
            }
            fs.extend(tail);
            GExpr::sum(f.vars.clone(), GExpr::mul(fs))
        };
        match &self.columns {
            None => self.columns = Some(columns),
            Some(prev) => {
                if prev.iter().map(|c| c.sort).ne(columns.iter().map(|c| c.sort)) {
                    return unsupported("OPTIONAL MATCH branches with different column sorts");
                }
            }
        }
        Ok(g)
    }

    // ---- expressions ----

    fn term(&mut self, e: &Expr, env: &Env) -> R<Term> {
        Ok(match e {
            Expr::Int(_) | Expr::Str(_) | Expr::Bool(_) | Expr::Null => Term::Const(literal(e)?),
            Expr::List(_) if e.is_literal() => Term::Const(literal(e)?),
            Expr::List(_) => return unsupported("non-constant list"),
            Expr::Map(_) => return unsupported("map value"),
            Expr::Var(v, _) => match env.get(v) {
                Some(Binding::Term(t, _)) => t.clone(),
                Some(Binding::Map(_)) => return unsupported("map value"),
                Some(Binding::Opaque) => return unsupported("variable-length relationship list used as a value"),
                None => return unsupported(format!("unbound `{v}`")),
            },
            Expr::Prop(base, k) => {
                if let Expr::Var(v, _) = &**base {
                    if let Some(Binding::Map(m)) = env.get(v) {
                        return Ok(m.get(k).cloned().unwrap_or(Term::Const(Value::Null)));
                    }
                }
                let b = self.term(base, env)?;
                if b.sort() != Sort::Ent {
                    return unsupported("property access on a value");
                }
                Term::Prop(Box::new(b), k.clone())
            }
            Expr::Neg(x) => match &**x {
                Expr::Int(n) => {
                    Term::int(n.checked_neg().ok_or_else(|| UnsupportedFeature("integer overflow".into()))?)
                }
                _ => Term::Func("-".into(), vec![self.term(x, env)?]),
            },
            Expr::Pos(x) => match &**x {
                Expr::Int(n) => Term::int(*n),
                _ => Term::Func("+".into(), vec![self.term(x, env)?]),
            },
            Expr::Func(name, args) => {
                let ts = args.iter().map(|a| self.term(a, env)).collect::<R<Vec<_>>>()?;
                Term::Func(name.to_ascii_lowercase(), ts)
            }
            Expr::Agg { .. } => return unsupported("aggregate outside a projection item"),
            Expr::Cmp(..) | Expr::And(..) | Expr::Or(..) | Expr::Not(_) | Expr::IsNull(..) | Expr::Exists(_) => {
                return unsupported("boolean expression used as a value")
            }
        })
    }

    /// `[e]` when `pos`, `[NOT e]` otherwise, both false on null.
    fn truth(&mut self, e: &Expr, env: &Env, pos: bool) -> R<GExpr> {
        Ok(match e {
            Expr::Bool(b) => {
                if *b == pos {
                    GExpr::One
                } else {
                    GExpr::Zero
                }
            }
            Expr::Null => GExpr::Zero,
            Expr::Cmp(op, a, b) => {
                let (a, b) = (self.term(a, env)?, self.term(b, env)?);
                let op = if pos { *op } else { op.negate() };
                GExpr::Bracket(Atom::Cmp(op, a, b))
            }
            Expr::And(a, b) => {
                let (x, y) = (self.truth(a, env, pos)?, self.truth(b, env, pos)?);
                if pos {
                    GExpr::mul(vec![x, y])
                } else {
                    GExpr::squash(GExpr::add(vec![x, y]))
                }
            }
            Expr::Or(a, b) => {
                let (x, y) = (self.truth(a, env, pos)?, self.truth(b, env, pos)?);
                if pos {
                    GExpr::squash(GExpr::add(vec![x, y]))
                } else {
                    GExpr::mul(vec![x, y])
                }
            }
            Expr::Not(a) => self.truth(a, env, !pos)?,
            Expr::IsNull(a, negated) => {
                let t = self.term(a, env)?;
                if pos != *negated {
                    GExpr::Bracket(Atom::IsNull(t))
                } else {
                    GExpr::Bracket(Atom::NotNull(t))
                }
            }
            Expr::Exists(sub) => {
                let f = Frame { vars: Vec::new(), factors: Vec::new(), env: env.clone() };
                let saved = self.columns.take();
                let g = self.rest(&sub.clauses, &End::Close, f)?;
                self.columns = saved;
                if pos {
                    GExpr::squash(g)
                } else {
                    GExpr::not(g)
                }
            }
            e => {
                let t = self.term(e, env)?;
                GExpr::same(t, Term::Const(Value::Bool(pos)))
            }
        })
    }
}

/// Whether a DISTINCT or aggregating projection follows.
fn groups_later(cs: &[Clause], end: &End) -> bool {
    let grouping = |p: &Projection| p.distinct || p.has_aggregate();
    cs.iter().any(|c| matches!(c, Clause::With(p) if grouping(p))) || matches!(end, End::Return(p) if grouping(p))
}

fn literal(e: &Expr) -> R<Value> {
    Ok(match e {
        Expr::Int(n) => Value::Int(*n),
        Expr::Str(s) => Value::Str(s.clone()),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Null => Value::Null,
        Expr::List(xs) => Value::List(xs.iter().map(literal).collect::<R<_>>()?),
        Expr::Map(kv) => Value::Map(kv.iter().map(|(k, x)| Ok((k.clone(), literal(x)?))).collect::<R<_>>()?),
        Expr::Neg(x) => match &**x {
            Expr::Int(n) => Value::Int(-n),
            _ => return unsupported("non-constant list element"),
        },
        _ => return unsupported("non-constant list element"),
    })
}

/// `WITH k.., COLLECT(x) AS xs UNWIND xs AS y` becomes
/// `WITH k.., x AS y WHERE y IS NOT NULL` when `xs` is not used again.
fn rewrite_unwind_collect(s: &SingleQuery) -> SingleQuery {
    let mut s = s.clone();
    let mut i = 0;
    while i + 1 < s.clauses.len() {
        if let Some(new) = fuse(&s, i) {
            s.clauses[i] = Clause::With(new);
            s.clauses.remove(i + 1);
        }
        i += 1;
    }
    s
}

fn fuse(s: &SingleQuery, i: usize) -> Option<Projection> {
    let (Clause::With(p), Clause::Unwind(u)) = (&s.clauses[i], &s.clauses[i + 1]) else { return None };
    if p.star || p.where_.is_some() || p.skip.is_some() || p.limit.is_some() {
        return None;
    }
    let Expr::Var(xs, _) = &u.expr else { return None };
    let aggs: Vec<usize> = (0..p.items.len()).filter(|&j| p.items[j].expr.contains_aggregate()).collect();
    let [j] = aggs.as_slice() else { return None };
    let item = &p.items[*j];
    let Expr::Agg { kind: AggKind::Collect, distinct, arg: Some(arg) } = &item.expr else { return None };
    if item.alias.as_deref() != Some(xs.as_str()) {
        return None;
    }
    let mut refs = BTreeSet::new();
    for c in &s.clauses[i + 2..] {
        clause_refs(c, &mut refs);
    }
    projection_refs(&s.ret, &mut refs);
    if refs.contains(xs) {
        return None;
    }
    let mut items = p.items.clone();
    items[*j] = ProjItem { expr: (**arg).clone(), alias: Some(u.alias.clone()) };
    Some(Projection {
        distinct: *distinct,
        star: false,
        items,
        order_by: Vec::new(),
        skip: None,
        limit: None,
        where_: Some(Expr::IsNull(Box::new(Expr::var(&u.alias)), true)),
    })
}
