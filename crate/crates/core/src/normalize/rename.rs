//! R5: scope-aware canonical variable names.
//!
//! Every binding site gets a fresh name in order of appearance: `n1, n2, ..`
//! for nodes, `r1, r2, ..` for relationships and `v1, v2, ..` for values.
//! Anonymous node and relationship patterns are named in the same sweep.

use std::collections::BTreeMap;

use crate::frontend::*;

#[derive(Default)]
struct Namer {
    nodes: usize,
    rels: usize,
    vals: usize,
}

impl Namer {
    fn fresh(&mut self, kind: VarKind) -> String {
        match kind {
            VarKind::Node => {
                self.nodes += 1;
                format!("n{}", self.nodes)
            }
            VarKind::Rel => {
                self.rels += 1;
                format!("r{}", self.rels)
            }
            VarKind::Value => {
                self.vals += 1;
                format!("v{}", self.vals)
            }
        }
    }
}

type Env = BTreeMap<String, (String, VarKind)>;

pub(crate) fn standardize(s: &SingleQuery) -> SingleQuery {
    let mut namer = Namer::default();
    let mut env = Env::new();
    let clauses = clauses(&s.clauses, &mut env, &mut namer);
    let (ret, _) = projection(&s.ret, &env, &mut namer);
    SingleQuery { clauses, ret }
}

fn clauses(cs: &[Clause], env: &mut Env, namer: &mut Namer) -> Vec<Clause> {
    let mut out = Vec::with_capacity(cs.len());
    for c in cs {
        out.push(match c {
            Clause::Match(m) => {
                let mut patterns = Vec::with_capacity(m.patterns.len());
                for p in &m.patterns {
                    patterns.push(pattern(p, env, namer));
                }
                // Property maps may refer to any variable of the clause.
                for p in &mut patterns {
                    for n in std::iter::once(&mut p.start).chain(p.chain.iter_mut().map(|(_, n)| n)) {
                        for (_, e) in &mut n.props {
                            *e = expr(e, env, namer);
                        }
                    }
                    for (r, _) in &mut p.chain {
                        for (_, e) in &mut r.props {
                            *e = expr(e, env, namer);
                        }
                    }
                }
                let where_ = m.where_.as_ref().map(|w| expr(w, env, namer));
                Clause::Match(MatchClause { optional: m.optional, patterns, where_ })
            }
            Clause::With(p) => {
                let (np, next) = projection(p, env, namer);
                *env = next;
                Clause::With(np)
            }
            Clause::Unwind(u) => {
                let e = expr(&u.expr, env, namer);
                let alias = namer.fresh(VarKind::Value);
                env.insert(u.alias.clone(), (alias.clone(), VarKind::Value));
                Clause::Unwind(Unwind { expr: e, alias, span: u.span })
            }
        });
    }
    out
}

fn bind(v: &Option<String>, kind: VarKind, env: &mut Env, namer: &mut Namer) -> Option<String> {
    match v {
        Some(name) => match env.get(name) {
            Some((canon, _)) => Some(canon.clone()),
            None => {
                let canon = namer.fresh(kind);
                env.insert(name.clone(), (canon.clone(), kind));
                Some(canon)
            }
        },
        None => Some(namer.fresh(kind)),
    }
}

/// Names the pattern's variables; property expressions are renamed by the caller.
fn pattern(p: &Pattern, env: &mut Env, namer: &mut Namer) -> Pattern {
    let mut out = p.clone();
    out.start.var = bind(&p.start.var, VarKind::Node, env, namer);
    for (i, (r, n)) in p.chain.iter().enumerate() {
        out.chain[i].0.var = bind(&r.var, VarKind::Rel, env, namer);
        out.chain[i].1.var = bind(&n.var, VarKind::Node, env, namer);
    }
    out
}

/// Rename a projection; returns it with the environment visible afterwards.
fn projection(p: &Projection, env: &Env, namer: &mut Namer) -> (Projection, Env) {
    let mut next = if p.star { env.clone() } else { Env::new() };
    let mut items = Vec::with_capacity(p.items.len());
    for i in &p.items {
        let e = expr(&i.expr, env, namer);
        let (alias, out_name) = match (&i.alias, &i.expr) {
            (None, Expr::Var(v, _)) => (None, Some(v.clone())),
            (Some(a), Expr::Var(v, _)) if a == v => (None, Some(v.clone())),
            (Some(a), ex) => {
                let kind = match ex {
                    Expr::Var(v, _) => env.get(v).map_or(VarKind::Value, |(_, k)| *k),
                    _ => VarKind::Value,
                };
                let canon = namer.fresh(kind);
                next.insert(a.clone(), (canon.clone(), kind));
                items.push(ProjItem { expr: e, alias: Some(canon) });
                continue;
            }
            (None, _) => (None, None),
        };
        if let Some(v) = out_name {
            if let Some(b) = env.get(&v) {
                next.insert(v, b.clone());
            }
        }
        items.push(ProjItem { expr: e, alias });
    }
    let mut order_env = next.clone();
    if !p.distinct && !p.has_aggregate() {
        for (k, v) in env {
            order_env.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }
    let order_by =
        p.order_by.iter().map(|s| SortItem { expr: expr(&s.expr, &order_env, namer), desc: s.desc }).collect();
    let where_ = p.where_.as_ref().map(|w| expr(w, &next, namer));
    (Projection { distinct: p.distinct, star: p.star, items, order_by, skip: p.skip, limit: p.limit, where_ }, next)
}

fn expr(e: &Expr, env: &Env, namer: &mut Namer) -> Expr {
    let mut out = e.clone();
    out.rewrite(&mut |x| match x {
        Expr::Var(v, _) => {
            if let Some((canon, _)) = env.get(v) {
                *v = canon.clone();
            }
        }
        Expr::Exists(sub) => {
            let mut inner = env.clone();
            let cs = clauses(&sub.clauses, &mut inner, namer);
            let ret = sub.ret.as_ref().map(|r| projection(r, &inner, namer).0);
            **sub = SubQuery { clauses: cs, ret };
        }
        _ => {}
    });
    out
}
