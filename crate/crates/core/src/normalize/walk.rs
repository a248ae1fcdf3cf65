//! Deep traversals over clauses that also enter EXISTS bodies.

use std::collections::BTreeSet;

use crate::frontend::*;

pub(crate) type Subst<'a> = &'a dyn Fn(&str) -> Option<Expr>;

pub(crate) fn subst_expr(e: &mut Expr, f: Subst) {
    e.rewrite(&mut |x| match x {
        Expr::Var(v, _) => {
            if let Some(r) = f(v) {
                *x = r;
            }
        }
        Expr::Exists(sub) => {
            for c in &mut sub.clauses {
                subst_clause(c, f);
            }
            if let Some(r) = &mut sub.ret {
                subst_projection(r, f);
            }
        }
        _ => {}
    });
}

/// Pattern variables are only renamed; a non-variable replacement is ignored.
pub(crate) fn subst_pattern(p: &mut Pattern, f: Subst) {
    let rename = |v: &mut Option<String>| {
        if let Some(name) = v {
            if let Some(Expr::Var(w, _)) = f(name) {
                *name = w;
            }
        }
    };
    rename(&mut p.start.var);
    for (_, e) in &mut p.start.props {
        subst_expr(e, f);
    }
    for (r, n) in &mut p.chain {
        rename(&mut r.var);
        rename(&mut n.var);
        for (_, e) in r.props.iter_mut().chain(n.props.iter_mut()) {
            subst_expr(e, f);
        }
    }
}

pub(crate) fn subst_clause(c: &mut Clause, f: Subst) {
    match c {
        Clause::Match(m) => {
            for p in &mut m.patterns {
                subst_pattern(p, f);
            }
            if let Some(w) = &mut m.where_ {
                subst_expr(w, f);
            }
        }
        Clause::With(p) => subst_projection(p, f),
        Clause::Unwind(u) => subst_expr(&mut u.expr, f),
    }
}

pub(crate) fn subst_projection(p: &mut Projection, f: Subst) {
    for i in &mut p.items {
        subst_expr(&mut i.expr, f);
    }
    for s in &mut p.order_by {
        subst_expr(&mut s.expr, f);
    }
    if let Some(w) = &mut p.where_ {
        subst_expr(w, f);
    }
}

/// Substitute through the clauses that follow a removed binding site, up to and
/// including the next WITH (after which the names are re-bound by aliases) or
/// the final RETURN.
pub(crate) fn subst_forward(clauses: &mut [Clause], ret: &mut Projection, f: Subst) {
    for c in clauses.iter_mut() {
        if let Clause::With(p) = c {
            subst_boundary(p, f, true);
            return;
        }
        subst_clause(c, f);
    }
    subst_boundary(ret, f, false);
}

/// A bare item `x` whose variable is replaced keeps its name as an alias when
/// later clauses (or this projection's ORDER BY / WHERE) may refer to it.
fn subst_boundary(p: &mut Projection, f: Subst, is_with: bool) {
    let mut order_names = BTreeSet::new();
    for s in &p.order_by {
        collect_refs(&s.expr, &mut order_names);
    }
    let plain = !p.distinct && !p.has_aggregate();
    for i in &mut p.items {
        if let (Expr::Var(v, _), None) = (&i.expr, &i.alias) {
            if f(v).is_some() && (is_with || order_names.contains(v)) {
                i.alias = Some(v.clone());
            }
        }
        subst_expr(&mut i.expr, f);
    }
    // ORDER BY resolves against output names first; only names that are not
    // outputs refer to the input scope.
    let outputs: BTreeSet<String> = p.items.iter().filter_map(|i| i.output_name().map(String::from)).collect();
    if plain {
        let g = |v: &str| if outputs.contains(v) { None } else { f(v) };
        for s in &mut p.order_by {
            subst_expr(&mut s.expr, &g);
        }
    }
}

/// Variables referenced in an expression, including inside EXISTS bodies.
pub(crate) fn collect_refs(e: &Expr, out: &mut BTreeSet<String>) {
    e.visit(&mut |x| match x {
        Expr::Var(v, _) => {
            out.insert(v.clone());
        }
        Expr::Exists(sub) => {
            for c in &sub.clauses {
                clause_refs(c, out);
            }
            if let Some(r) = &sub.ret {
                projection_refs(r, out);
            }
        }
        _ => {}
    });
}

/// Every variable name occurring in the clause, binding or referencing.
pub(crate) fn clause_refs(c: &Clause, out: &mut BTreeSet<String>) {
    match c {
        Clause::Match(m) => {
            for p in &m.patterns {
                pattern_refs(p, out);
            }
            if let Some(w) = &m.where_ {
                collect_refs(w, out);
            }
        }
        Clause::With(p) => projection_refs(p, out),
        Clause::Unwind(u) => {
            collect_refs(&u.expr, out);
            out.insert(u.alias.clone());
        }
    }
}

pub(crate) fn pattern_refs(p: &Pattern, out: &mut BTreeSet<String>) {
    for n in p.nodes() {
        out.extend(n.var.iter().cloned());
        for (_, e) in &n.props {
            collect_refs(e, out);
        }
    }
    for r in p.rels() {
        out.extend(r.var.iter().cloned());
        for (_, e) in &r.props {
            collect_refs(e, out);
        }
    }
}

pub(crate) fn projection_refs(p: &Projection, out: &mut BTreeSet<String>) {
    for i in &p.items {
        collect_refs(&i.expr, out);
        out.extend(i.alias.iter().cloned());
    }
    for s in &p.order_by {
        collect_refs(&s.expr, out);
    }
    if let Some(w) = &p.where_ {
        collect_refs(w, out);
    }
}

/// Names newly bound by the clauses (pattern variables not yet in scope,
/// UNWIND aliases, explicit aliases), starting from the names in `scope`.
pub(crate) fn bindings(
    clauses: &[Clause],
    ret: Option<&Projection>,
    scope: &BTreeSet<String>,
    out: &mut BTreeSet<String>,
) {
    let mut scope = scope.clone();
    let mut exprs: Vec<(&Expr, BTreeSet<String>)> = Vec::new();
    for c in clauses {
        match c {
            Clause::Match(m) => {
                for p in &m.patterns {
                    for v in p.nodes().filter_map(|n| n.var.as_ref()).chain(p.rels().filter_map(|r| r.var.as_ref())) {
                        if scope.insert(v.clone()) {
                            out.insert(v.clone());
                        }
                    }
                }
                for p in &m.patterns {
                    for n in p.nodes() {
                        exprs.extend(n.props.iter().map(|(_, e)| (e, scope.clone())));
                    }
                    for r in p.rels() {
                        exprs.extend(r.props.iter().map(|(_, e)| (e, scope.clone())));
                    }
                }
                exprs.extend(m.where_.iter().map(|e| (e, scope.clone())));
            }
            Clause::With(p) => {
                scope = projection_bindings(p, &scope, out, &mut exprs);
            }
            Clause::Unwind(u) => {
                exprs.push((&u.expr, scope.clone()));
                out.insert(u.alias.clone());
                scope.insert(u.alias.clone());
            }
        }
    }
    if let Some(p) = ret {
        projection_bindings(p, &scope, out, &mut exprs);
    }
    for (e, sc) in exprs {
        e.visit(&mut |x| {
            if let Expr::Exists(sub) = x {
                bindings(&sub.clauses, sub.ret.as_ref(), &sc, out);
            }
        });
    }
}

fn projection_bindings<'a>(
    p: &'a Projection,
    scope: &BTreeSet<String>,
    out: &mut BTreeSet<String>,
    exprs: &mut Vec<(&'a Expr, BTreeSet<String>)>,
) -> BTreeSet<String> {
    let mut next = if p.star { scope.clone() } else { BTreeSet::new() };
    for i in &p.items {
        exprs.push((&i.expr, scope.clone()));
        if let Some(a) = &i.alias {
            if !matches!(&i.expr, Expr::Var(v, _) if v == a) {
                out.insert(a.clone());
            }
        }
        if let Some(n) = i.output_name() {
            next.insert(n.to_string());
        }
    }
    exprs.extend(p.order_by.iter().map(|s| (&s.expr, scope.clone())));
    exprs.extend(p.where_.iter().map(|e| (e, next.clone())));
    next
}

pub(crate) fn contains_exists(e: &Expr) -> bool {
    let mut found = false;
    e.visit(&mut |x| found |= matches!(x, Expr::Exists(_)));
    found
}
