use std::collections::{BTreeMap, BTreeSet};

use super::walk::*;
use crate::frontend::*;

/// A rewrite at one site: the new query and the site's path.
pub(crate) type Rewrite = (Query, String);

/// Replace the `idx`-th branch (left to right) of a union tree.
fn replace_branch(q: &Query, idx: usize, new: Query) -> Query {
    fn go(q: &Query, idx: usize, seen: &mut usize, new: &mut Option<Query>) -> Query {
        match q {
            Query::Single(_) => {
                let here = *seen;
                *seen += 1;
                if here == idx {
                    new.take().expect("branch replaced once")
                } else {
                    q.clone()
                }
            }
            Query::Union { left, right, all } => Query::Union {
                left: Box::new(go(left, idx, seen, new)),
                right: Box::new(go(right, idx, seen, new)),
                all: *all,
            },
        }
    }
    go(q, idx, &mut 0, &mut Some(new))
}

fn union_all(parts: Vec<SingleQuery>) -> Query {
    let mut it = parts.into_iter().map(Query::Single);
    let first = it.next().expect("at least one branch");
    it.fold(first, |l, r| Query::Union { left: Box::new(l), right: Box::new(r), all: true })
}

/// Later clauses process rows one at a time, so the clause's matches can be
/// split into UNION ALL branches.
fn rest_row_wise(s: &SingleQuery, ci: usize) -> bool {
    s.clauses[ci + 1..].iter().all(|c| match c {
        Clause::With(p) => p.is_row_wise(),
        _ => true,
    }) && s.ret.is_row_wise()
}

/// Sites of relationship patterns in non-optional MATCH clauses whose rows
/// may be split, leftmost first.
fn splittable_rels(q: &Query) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for (bi, s) in q.branches().into_iter().enumerate() {
        for (ci, c) in s.clauses.iter().enumerate() {
            let Clause::Match(m) = c else { continue };
            if m.optional || !rest_row_wise(s, ci) {
                continue;
            }
            for (pi, p) in m.patterns.iter().enumerate() {
                for ri in 0..p.chain.len() {
                    out.push((bi, ci, pi, ri));
                }
            }
        }
    }
    out
}

fn site(bi: usize, ci: usize, pi: usize, ri: usize) -> String {
    format!("b{bi}/c{ci}/p{pi}/r{ri}")
}

fn rel_at(s: &SingleQuery, ci: usize, pi: usize, ri: usize) -> &RelPat {
    match &s.clauses[ci] {
        Clause::Match(m) => &m.patterns[pi].chain[ri].0,
        _ => unreachable!("sites point at MATCH clauses"),
    }
}

fn pattern_at_mut(s: &mut SingleQuery, ci: usize, pi: usize) -> &mut Pattern {
    match &mut s.clauses[ci] {
        Clause::Match(m) => &mut m.patterns[pi],
        _ => unreachable!("sites point at MATCH clauses"),
    }
}

/// R1: an undirected single-hop relationship becomes a UNION ALL of both directions.
pub(crate) fn r1(q: &Query) -> Option<Rewrite> {
    let branches = q.branches();
    for (bi, ci, pi, ri) in splittable_rels(q) {
        let s = branches[bi];
        let r = rel_at(s, ci, pi, ri);
        if r.dir != Direction::Both || r.range.is_some() {
            continue;
        }
        let mut parts = Vec::new();
        for dir in [Direction::Right, Direction::Left] {
            let mut b = s.clone();
            pattern_at_mut(&mut b, ci, pi).chain[ri].0.dir = dir;
            parts.push(b);
        }
        return Some((replace_branch(q, bi, union_all(parts)), site(bi, ci, pi, ri)));
    }
    None
}

/// R2: a bounded variable-length relationship with an unused variable becomes
/// one UNION ALL branch per length.
pub(crate) fn r2(q: &Query) -> Option<Rewrite> {
    let branches = q.branches();
    for (bi, ci, pi, ri) in splittable_rels(q) {
        let s = branches[bi];
        let r = rel_at(s, ci, pi, ri);
        let Some(Range { min, max: Some(max) }) = r.range else { continue };
        if let Some(v) = &r.var {
            if occurrences(s, v) > 1 {
                continue;
            }
        }
        let hop = RelPat { var: None, range: None, ..r.clone() };
        let mut parts = Vec::new();
        for k in min..=max {
            let mut b = s.clone();
            let p = pattern_at_mut(&mut b, ci, pi);
            let end = p.chain[ri].1.clone();
            let mut steps = Vec::new();
            for i in 0..k {
                let node = if i + 1 == k {
                    end.clone()
                } else {
                    NodePat { var: None, labels: Vec::new(), props: Vec::new(), span: Span::default() }
                };
                steps.push((hop.clone(), node));
            }
            p.chain.splice(ri..=ri, steps);
            parts.push(b);
        }
        return Some((replace_branch(q, bi, union_all(parts)), site(bi, ci, pi, ri)));
    }
    None
}

/// How many times a name occurs anywhere in the single query.
fn occurrences(s: &SingleQuery, v: &str) -> usize {
    let mut n = 0;
    let count_expr = |e: &Expr, n: &mut usize| {
        let mut refs = Vec::new();
        e.visit(&mut |x| match x {
            Expr::Var(w, _) if w == v => refs.push(()),
            Expr::Exists(sub) => {
                let mut names = BTreeSet::new();
                for c in &sub.clauses {
                    clause_refs(c, &mut names);
                }
                if names.contains(v) {
                    refs.push(());
                }
            }
            _ => {}
        });
        *n += refs.len();
    };
    for c in &s.clauses {
        match c {
            Clause::Match(m) => {
                for p in &m.patterns {
                    for nd in p.nodes() {
                        n += usize::from(nd.var.as_deref() == Some(v));
                        nd.props.iter().for_each(|(_, e)| count_expr(e, &mut n));
                    }
                    for r in p.rels() {
                        n += usize::from(r.var.as_deref() == Some(v));
                        r.props.iter().for_each(|(_, e)| count_expr(e, &mut n));
                    }
                }
                if let Some(w) = &m.where_ {
                    count_expr(w, &mut n);
                }
            }
            Clause::With(p) => projection_occ(p, v, &mut n, &count_expr),
            Clause::Unwind(u) => {
                count_expr(&u.expr, &mut n);
                n += usize::from(u.alias == v);
            }
        }
    }
    projection_occ(&s.ret, v, &mut n, &count_expr);
    n
}

fn projection_occ(p: &Projection, v: &str, n: &mut usize, count_expr: &dyn Fn(&Expr, &mut usize)) {
    if p.star {
        *n += 1;
    }
    for i in &p.items {
        count_expr(&i.expr, n);
        *n += usize::from(i.alias.as_deref() == Some(v));
    }
    for s in &p.order_by {
        count_expr(&s.expr, n);
    }
    if let Some(w) = &p.where_ {
        count_expr(w, n);
    }
}

/// R3: `*` in WITH or RETURN becomes the in-scope variables in lexicographic order.
pub(crate) fn r3(q: &Query) -> Option<Rewrite> {
    for (bi, s) in q.branches().into_iter().enumerate() {
        let star_at = s.clauses.iter().position(|c| matches!(c, Clause::With(p) if p.star)).or(if s.ret.star {
            Some(s.clauses.len())
        } else {
            None
        });
        let Some(ci) = star_at else { continue };
        let scope = check_clauses(&s.clauses[..ci], Scope::default()).unwrap_or_default();
        let mut b = s.clone();
        let p = if ci == s.clauses.len() {
            &mut b.ret
        } else {
            match &mut b.clauses[ci] {
                Clause::With(p) => p,
                _ => unreachable!(),
            }
        };
        let mut items: Vec<ProjItem> = scope.names().map(|n| ProjItem { expr: Expr::var(n), alias: None }).collect();
        items.append(&mut p.items);
        p.items = items;
        p.star = false;
        let path = if ci == s.clauses.len() { format!("b{bi}/ret") } else { format!("b{bi}/c{ci}") };
        return Some((replace_branch(q, bi, Query::Single(b)), path));
    }
    None
}

/// R4: a WITH that only passes through, renames, or names expressions is
/// removed and its aliases substituted into the rest of the query.
pub(crate) fn r4(q: &Query) -> Option<Rewrite> {
    for (bi, s) in q.branches().into_iter().enumerate() {
        for (ci, c) in s.clauses.iter().enumerate() {
            let Clause::With(p) = c else { continue };
            if let Some(b) = try_r4(s, ci, p) {
                return Some((replace_branch(q, bi, Query::Single(b)), format!("b{bi}/c{ci}")));
            }
        }
    }
    None
}

fn try_r4(s: &SingleQuery, ci: usize, p: &Projection) -> Option<SingleQuery> {
    if !p.is_row_wise() || p.star || p.where_.is_some() || p.items.iter().any(|i| contains_exists(&i.expr)) {
        return None;
    }
    let before = check_clauses(&s.clauses[..ci], Scope::default()).ok()?;
    let mut passed = BTreeSet::new();
    let mut subst: BTreeMap<String, Expr> = BTreeMap::new();
    let mut outputs = BTreeSet::new();
    for i in &p.items {
        let name = i.output_name()?.to_string();
        if !outputs.insert(name.clone()) {
            return None;
        }
        match &i.expr {
            Expr::Var(v, _) if *v == name => {
                passed.insert(name);
            }
            e => {
                if before.contains(&name) {
                    return None;
                }
                subst.insert(name, e.clone());
            }
        }
    }
    let dropped: BTreeSet<String> = before.names().filter(|n| !passed.contains(*n)).cloned().collect();
    let rest = &s.clauses[ci + 1..];
    if rest.iter().any(|c| matches!(c, Clause::With(p) if p.star)) || s.ret.star {
        return None;
    }
    let mut later = BTreeSet::new();
    bindings(rest, Some(&s.ret), &outputs, &mut later);
    if later.iter().any(|n| dropped.contains(n) || subst.contains_key(n)) {
        return None;
    }
    let mut b = s.clone();
    b.clauses.remove(ci);
    let f = |v: &str| subst.get(v).cloned();
    let (_, tail) = b.clauses.split_at_mut(ci);
    subst_forward(tail, &mut b.ret, &f);
    Some(b)
}

/// R6: `id(a) = id(b)` on two node variables of a MATCH merges the later
/// variable into the earlier one.
pub(crate) fn r6(q: &Query) -> Option<Rewrite> {
    for (bi, s) in q.branches().into_iter().enumerate() {
        for ci in 0..s.clauses.len() {
            if let Some(b) = try_r6(s, ci) {
                return Some((replace_branch(q, bi, Query::Single(b)), format!("b{bi}/c{ci}")));
            }
        }
    }
    None
}

fn id_arg(x: &Expr) -> Option<&str> {
    match x {
        Expr::Func(f, args) if f.eq_ignore_ascii_case("id") && args.len() == 1 => match &args[0] {
            Expr::Var(v, _) => Some(v.as_str()),
            _ => None,
        },
        _ => None,
    }
}

fn id_pair(e: &Expr) -> Option<(&str, &str)> {
    match e {
        Expr::Cmp(CmpOp::Eq, a, b) => Some((id_arg(a)?, id_arg(b)?)),
        _ => None,
    }
}

fn try_r6(s: &SingleQuery, ci: usize) -> Option<SingleQuery> {
    let Clause::Match(m) = &s.clauses[ci] else { return None };
    if m.optional {
        return None;
    }
    let w = m.where_.as_ref()?;
    let before = check_clauses(&s.clauses[..ci], Scope::default()).ok()?;
    let after = check_clauses(&s.clauses[..=ci], Scope::default()).ok()?;
    let mut order = Vec::new();
    for p in &m.patterns {
        for n in p.nodes() {
            if let Some(v) = &n.var {
                if !order.contains(v) {
                    order.push(v.clone());
                }
            }
        }
    }
    let rank = |v: &str| -> Option<usize> {
        if before.contains(v) {
            Some(0)
        } else {
            order.iter().position(|x| x == v).map(|i| i + 1)
        }
    };
    let conjuncts = w.conjuncts();
    for (k, c) in conjuncts.iter().enumerate() {
        let Some((a, b)) = id_pair(c) else { continue };
        if a == b || after.get(a) != Some(VarKind::Node) || after.get(b) != Some(VarKind::Node) {
            continue;
        }
        let (ra, rb) = (rank(a)?, rank(b)?);
        let (keep, drop) = if ra <= rb { (a, b) } else { (b, a) };
        if before.contains(drop) {
            continue;
        }
        let mut out = s.clone();
        let rest: Vec<Expr> =
            conjuncts.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, e)| (*e).clone()).collect();
        let f = |v: &str| if v == drop { Some(Expr::var(keep)) } else { None };
        let Clause::Match(nm) = &mut out.clauses[ci] else { unreachable!() };
        nm.where_ = Expr::conjoin(rest);
        for p in &mut nm.patterns {
            subst_pattern(p, &f);
        }
        if let Some(w) = &mut nm.where_ {
            subst_expr(w, &f);
        }
        drop_bare_duplicates(nm, keep);
        let (_, tail) = out.clauses.split_at_mut(ci + 1);
        subst_forward(tail, &mut out.ret, &f);
        return Some(out);
    }
    None
}

/// Remove patterns that are just `(v)` when `v` also occurs in another pattern
/// of the same clause.
fn drop_bare_duplicates(m: &mut MatchClause, v: &str) {
    loop {
        let bare = |p: &Pattern| {
            p.chain.is_empty()
                && p.start.var.as_deref() == Some(v)
                && p.start.labels.is_empty()
                && p.start.props.is_empty()
        };
        let Some(i) = m.patterns.iter().position(bare) else { return };
        let elsewhere =
            m.patterns.iter().enumerate().any(|(j, p)| j != i && p.nodes().any(|n| n.var.as_deref() == Some(v)));
        if !elsewhere {
            return;
        }
        m.patterns.remove(i);
    }
}
