use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::{ErrorKind, FrontendError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Node,
    Rel,
    Value,
}

/// Variables visible at some point of a single query.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    vars: BTreeMap<String, VarKind>,
}

impl Scope {
    pub fn get(&self, v: &str) -> Option<VarKind> {
        self.vars.get(v).copied()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.vars.contains_key(v)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.vars.keys()
    }

    pub fn insert(&mut self, v: &str, k: VarKind) {
        self.vars.insert(v.to_string(), k);
    }
}

/// Validate variable references and relationship label declarations.
pub fn semantic_check(q: &Query) -> Result<(), FrontendError> {
    let mut arity = None;
    for s in q.branches() {
        check_single(s, &Scope::default())?;
        let n = s.ret.items.len() + usize::from(s.ret.star);
        if !s.ret.star {
            match arity {
                Some(a) if a != n => {
                    return Err(FrontendError {
                        kind: ErrorKind::Syntax,
                        span: Span::default(),
                        message: "UNION branches return different numbers of columns".into(),
                    });
                }
                _ => arity = Some(n),
            }
        }
    }
    Ok(())
}

fn check_single(s: &SingleQuery, outer: &Scope) -> Result<(), FrontendError> {
    let scope = check_clauses(&s.clauses, outer.clone())?;
    check_projection(&s.ret, &scope, false)?;
    Ok(())
}

/// Walk clauses, returning the scope that is visible afterwards.
pub fn check_clauses(clauses: &[Clause], mut scope: Scope) -> Result<Scope, FrontendError> {
    let mut rel_labels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for c in clauses {
        match c {
            Clause::Match(m) => {
                for p in &m.patterns {
                    bind_pattern(p, &mut scope, &mut rel_labels)?;
                }
                for p in &m.patterns {
                    for n in p.nodes() {
                        check_props(&n.props, &scope)?;
                    }
                    for r in p.rels() {
                        check_props(&r.props, &scope)?;
                    }
                }
                if let Some(w) = &m.where_ {
                    check_expr(w, &scope, false)?;
                }
            }
            Clause::With(p) => {
                scope = check_projection(p, &scope, true)?;
                rel_labels.retain(|v, _| scope.get(v) == Some(VarKind::Rel));
            }
            Clause::Unwind(u) => {
                check_expr(&u.expr, &scope, false)?;
                scope.insert(&u.alias, VarKind::Value);
            }
        }
    }
    Ok(scope)
}

fn bind_pattern(
    p: &Pattern,
    scope: &mut Scope,
    rel_labels: &mut BTreeMap<String, BTreeSet<String>>,
) -> Result<(), FrontendError> {
    for n in p.nodes() {
        if let Some(v) = &n.var {
            bind(scope, v, VarKind::Node, n.span)?;
        }
    }
    for r in p.rels() {
        if let Some(v) = &r.var {
            bind(scope, v, VarKind::Rel, r.span)?;
            if !r.labels.is_empty() {
                let set: BTreeSet<String> = r.labels.iter().cloned().collect();
                match rel_labels.get(v) {
                    Some(prev) if *prev != set => {
                        return Err(FrontendError {
                            kind: ErrorKind::ConflictingRelationshipLabels,
                            span: r.span,
                            message: format!("relationship variable `{v}` is declared with different labels"),
                        });
                    }
                    _ => {
                        rel_labels.insert(v.clone(), set);
                    }
                }
            }
        }
    }
    Ok(())
}

fn bind(scope: &mut Scope, v: &str, kind: VarKind, span: Span) -> Result<(), FrontendError> {
    match scope.get(v) {
        Some(k) if k != kind => Err(FrontendError {
            kind: ErrorKind::Syntax,
            span,
            message: format!("variable `{v}` is already bound with a different type"),
        }),
        _ => {
            scope.insert(v, kind);
            Ok(())
        }
    }
}

fn check_props(props: &[(String, Expr)], scope: &Scope) -> Result<(), FrontendError> {
    for (_, e) in props {
        check_expr(e, scope, false)?;
    }
    Ok(())
}

/// Check a WITH or RETURN projection; returns the scope after it.
fn check_projection(p: &Projection, scope: &Scope, is_with: bool) -> Result<Scope, FrontendError> {
    let mut next = if p.star { scope.clone() } else { Scope::default() };
    for item in &p.items {
        check_expr(&item.expr, scope, true)?;
        if is_with {
            match item.output_name() {
                Some(name) => {
                    let kind = match &item.expr {
                        Expr::Var(v, _) => scope.get(v).unwrap_or(VarKind::Value),
                        _ => VarKind::Value,
                    };
                    next.insert(name, kind);
                }
                None => {
                    return Err(FrontendError {
                        kind: ErrorKind::Syntax,
                        span: Span::default(),
                        message: "expressions in WITH must be aliased".into(),
                    });
                }
            }
        } else if let Some(name) = item.output_name() {
            let kind = match &item.expr {
                Expr::Var(v, _) if item.alias.is_none() => scope.get(v).unwrap_or(VarKind::Value),
                _ => VarKind::Value,
            };
            next.insert(name, kind);
        }
    }
    if p.star && scope.names().next().is_none() {
        return Err(FrontendError {
            kind: ErrorKind::Syntax,
            span: Span::default(),
            message: "`*` with no variables in scope".into(),
        });
    }
    // ORDER BY sees the projected names and, for plain projections, the input scope too.
    let mut order_scope = next.clone();
    if !p.distinct && !p.has_aggregate() {
        for v in scope.names() {
            if !order_scope.contains(v) {
                order_scope.insert(v, scope.get(v).unwrap());
            }
        }
    }
    for s in &p.order_by {
        check_expr(&s.expr, &order_scope, false)?;
    }
    if let Some(w) = &p.where_ {
        check_expr(w, &next, false)?;
    }
    Ok(next)
}

fn check_expr(e: &Expr, scope: &Scope, allow_agg: bool) -> Result<(), FrontendError> {
    let mut err = None;
    e.visit(&mut |x| {
        if err.is_some() {
            return;
        }
        match x {
            Expr::Var(v, span) if !scope.contains(v) => {
                err = Some(FrontendError {
                    kind: ErrorKind::UndefinedVariable,
                    span: *span,
                    message: format!("variable `{v}` is not defined"),
                });
            }
            Expr::Agg { .. } if !allow_agg => {
                err = Some(FrontendError {
                    kind: ErrorKind::Syntax,
                    span: Span::default(),
                    message: "aggregate used outside of a projection".into(),
                });
            }
            Expr::Exists(sub) => {
                let inner = check_clauses(&sub.clauses, scope.clone()).and_then(|sc| {
                    if let Some(r) = &sub.ret {
                        check_projection(r, &sc, false)?;
                    }
                    Ok(())
                });
                if let Err(e) = inner {
                    err = Some(e);
                }
            }
            _ => {}
        }
    });
    err.map_or(Ok(()), Err)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn check(s: &str) -> Result<(), FrontendError> {
        semantic_check(&parse(s).unwrap())
    }

    #[test]
    fn undefined_variable_in_where() {
        let e = check("MATCH (n) WHERE m.age = 1 RETURN n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::UndefinedVariable);
        assert_eq!(e.span.start, 16);
        assert_eq!(e.span.end, 17);
    }

    #[test]
    fn conflicting_labels() {
        let e = check("MATCH ()-[r:A]->()-[r:B]->() RETURN 1").unwrap_err();
        assert_eq!(e.kind, ErrorKind::ConflictingRelationshipLabels);
        assert!(check("MATCH ()-[r:A|B]->() MATCH ()-[r:B|A]->() RETURN 1").is_ok());
        assert!(check("MATCH ()-[r:A]->() MATCH ()-[r]->() RETURN 1").is_ok());
        let e = check("MATCH ()-[r:A]->() MATCH ()-[r:C]->() RETURN 1").unwrap_err();
        assert_eq!(e.kind, ErrorKind::ConflictingRelationshipLabels);
    }

    #[test]
    fn ok_cases() {
        for q in [
            "MATCH (n) RETURN n",
            "MATCH (n) WITH n.x AS x WHERE x > 1 RETURN x",
            "MATCH (n) WITH n ORDER BY n.x LIMIT 1 MATCH (n)-->(m) RETURN m",
            "UNWIND [1, 2] AS x RETURN x",
            "MATCH (n) RETURN n.x AS a ORDER BY a",
            "MATCH (n) RETURN n.x ORDER BY n.y",
            "MATCH (n) WHERE EXISTS { MATCH (n)-->(m) WHERE m.x = 1 } RETURN n",
            "MATCH (n) RETURN * UNION MATCH (m) RETURN m",
        ] {
            check(q).unwrap_or_else(|e| panic!("{q}: {e:?}"));
        }
    }

    #[test]
    fn with_limits_scope() {
        let e = check("MATCH (n), (m) WITH n RETURN m").unwrap_err();
        assert_eq!(e.kind, ErrorKind::UndefinedVariable);
        let e = check("MATCH (n) WITH n.x RETURN 1").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Syntax);
    }

    #[test]
    fn union_arity() {
        assert!(check("MATCH (n) RETURN n UNION MATCH (n) RETURN n, n").is_err());
    }

    #[test]
    fn check_is_pure() {
        let q = parse("MATCH (n) WHERE m.age = 1 RETURN n").unwrap();
        let before = q.clone();
        let a = semantic_check(&q).unwrap_err();
        let b = semantic_check(&q).unwrap_err();
        assert_eq!(a, b);
        assert_eq!(q, before);
    }
}
