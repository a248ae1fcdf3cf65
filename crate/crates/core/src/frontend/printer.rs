use std::fmt::Write;

use super::ast::*;

/// Render a query as canonical text that parses back to the same AST.
pub fn print(q: &Query) -> String {
    let mut out = String::new();
    query(&mut out, q);
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, 0);
    out
}

fn query(out: &mut String, q: &Query) {
    match q {
        Query::Single(s) => single(out, s),
        Query::Union { left, right, all } => {
            query(out, left);
            out.push_str(if *all { " UNION ALL " } else { " UNION " });
            query(out, right);
        }
    }
}

fn single(out: &mut String, s: &SingleQuery) {
    clauses(out, &s.clauses);
    out.push_str("RETURN ");
    projection(out, &s.ret);
}

fn clauses(out: &mut String, cs: &[Clause]) {
    for c in cs {
        clause(out, c);
        out.push(' ');
    }
}

fn clause(out: &mut String, c: &Clause) {
    match c {
        Clause::Match(m) => {
            if m.optional {
                out.push_str("OPTIONAL ");
            }
            out.push_str("MATCH ");
            for (i, p) in m.patterns.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                pattern(out, p);
            }
            if let Some(w) = &m.where_ {
                out.push_str(" WHERE ");
                expr(out, w, 0);
            }
        }
        Clause::With(p) => {
            out.push_str("WITH ");
            projection(out, p);
        }
        Clause::Unwind(u) => {
            out.push_str("UNWIND ");
            expr(out, &u.expr, 0);
            let _ = write!(out, " AS {}", u.alias);
        }
    }
}

fn projection(out: &mut String, p: &Projection) {
    if p.distinct {
        out.push_str("DISTINCT ");
    }
    let mut first = true;
    if p.star {
        out.push('*');
        first = false;
    }
    for item in &p.items {
        if !first {
            out.push_str(", ");
        }
        first = false;
        expr(out, &item.expr, 0);
        if let Some(a) = &item.alias {
            let _ = write!(out, " AS {a}");
        }
    }
    if !p.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        for (i, s) in p.order_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            expr(out, &s.expr, 0);
            if s.desc {
                out.push_str(" DESC");
            }
        }
    }
    if let Some(n) = p.skip {
        let _ = write!(out, " SKIP {n}");
    }
    if let Some(n) = p.limit {
        let _ = write!(out, " LIMIT {n}");
    }
    if let Some(w) = &p.where_ {
        out.push_str(" WHERE ");
        expr(out, w, 0);
    }
}

pub(crate) fn pattern(out: &mut String, p: &Pattern) {
    node(out, &p.start);
    for (r, n) in &p.chain {
        rel(out, r);
        node(out, n);
    }
}

fn node(out: &mut String, n: &NodePat) {
    out.push('(');
    if let Some(v) = &n.var {
        out.push_str(v);
    }
    for l in &n.labels {
        let _ = write!(out, ":{l}");
    }
    if !n.props.is_empty() {
        if n.var.is_some() || !n.labels.is_empty() {
            out.push(' ');
        }
        map(out, &n.props);
    }
    out.push(')');
}

fn rel(out: &mut String, r: &RelPat) {
    out.push_str(if r.dir == Direction::Left { "<-[" } else { "-[" });
    if let Some(v) = &r.var {
        out.push_str(v);
    }
    if !r.labels.is_empty() {
        let _ = write!(out, ":{}", r.labels.join("|"));
    }
    if let Some(range) = r.range {
        out.push('*');
        match (range.min, range.max) {
            (1, None) => {}
            (lo, None) => {
                let _ = write!(out, "{lo}..");
            }
            (lo, Some(hi)) => {
                let _ = write!(out, "{lo}..{hi}");
            }
        }
    }
    if !r.props.is_empty() {
        if r.var.is_some() || !r.labels.is_empty() || r.range.is_some() {
            out.push(' ');
        }
        map(out, &r.props);
    }
    out.push_str(if r.dir == Direction::Right { "]->" } else { "]-" });
}

fn map(out: &mut String, kv: &[(String, Expr)]) {
    out.push('{');
    for (i, (k, v)) in kv.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{k}: ");
        expr(out, v, 0);
    }
    out.push('}');
}

pub(crate) fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('\'');
    for c in s.chars() {
        if matches!(c, '\'' | '\\') {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('\'');
    q
}

// Binding strength: 1 OR, 2 AND, 3 NOT, 4 comparison / IS NULL, 5 unary sign, 6 atoms.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(..) => 3,
        Expr::Cmp(..) | Expr::IsNull(..) => 4,
        Expr::Neg(..) | Expr::Pos(..) => 5,
        Expr::Int(n) if *n < 0 => 5,
        _ => 6,
    }
}

fn expr(out: &mut String, e: &Expr, min: u8) {
    let p = prec(e);
    if p < min {
        out.push('(');
    }
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Str(s) => out.push_str(&quote(s)),
        Expr::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        Expr::Null => out.push_str("NULL"),
        Expr::List(xs) => {
            out.push('[');
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, x, 0);
            }
            out.push(']');
        }
        Expr::Map(kv) => map(out, kv),
        Expr::Var(v, _) => out.push_str(v),
        Expr::Prop(base, k) => {
            expr(out, base, 6);
            let _ = write!(out, ".{k}");
        }
        Expr::Cmp(op, a, b) => {
            expr(out, a, 5);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, b, 5);
        }
        Expr::And(a, b) => {
            expr(out, a, 2);
            out.push_str(" AND ");
            expr(out, b, 3);
        }
        Expr::Or(a, b) => {
            expr(out, a, 1);
            out.push_str(" OR ");
            expr(out, b, 2);
        }
        Expr::Not(a) => {
            out.push_str("NOT ");
            expr(out, a, 3);
        }
        Expr::IsNull(a, negated) => {
            expr(out, a, 5);
            out.push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
        }
        Expr::Neg(a) => {
            out.push('-');
            // `-5` would re-parse as a literal, so keep literal operands grouped.
            let min = if matches!(**a, Expr::Int(_)) { 7 } else { 5 };
            expr(out, a, min);
        }
        Expr::Pos(a) => {
            out.push('+');
            expr(out, a, 5);
        }
        Expr::Func(name, args) => {
            let _ = write!(out, "{name}(");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a, 0);
            }
            out.push(')');
        }
        Expr::Agg { kind, distinct, arg } => {
            let _ = write!(out, "{}(", kind.name());
            if *distinct {
                out.push_str("DISTINCT ");
            }
            match arg {
                Some(a) => expr(out, a, 0),
                None => out.push('*'),
            }
            out.push(')');
        }
        Expr::Exists(sub) => {
            out.push_str("EXISTS { ");
            clauses(out, &sub.clauses);
            if let Some(r) = &sub.ret {
                out.push_str("RETURN ");
                projection(out, r);
                out.push(' ');
            }
            out.push('}');
        }
    }
    if p < min {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn roundtrip(s: &str) -> String {
        let q = parse(s).unwrap();
        let text = print(&q);
        assert_eq!(parse(&text).unwrap(), q, "{text}");
        text
    }

    #[test]
    fn fixed_point() {
        assert_eq!(roundtrip("MATCH (n) RETURN n"), "MATCH (n) RETURN n");
    }

    #[test]
    fn undirected_form_kept() {
        assert_eq!(roundtrip("MATCH (a)-[]-(b) RETURN a"), "MATCH (a)-[]-(b) RETURN a");
    }

    #[test]
    fn assorted_shapes() {
        for s in [
            "MATCH (n:A:B {x: 1, y: 'q\\'s'})<-[r:T|U*2..3 {w: -4}]-(m) WHERE NOT (n.x = 1 OR m.y < 2) AND n.z IS NOT NULL RETURN DISTINCT n.x AS a, COUNT(*) ORDER BY a DESC, n.y SKIP 1 LIMIT 2",
            "OPTIONAL MATCH (n) WITH n, COLLECT(n.x) AS xs WHERE n.y > 0 UNWIND xs AS x RETURN *, x UNION ALL MATCH (m) RETURN m, m.x",
            "UNWIND [{c1: 0, c2: 1}, {c1: 2, c2: 3}] AS row RETURN row.c1, -(5), -n, +3",
            "MATCH (n) WHERE EXISTS { MATCH (n)-[*]->(m:K) WHERE m.p = TRUE } RETURN COUNT(DISTINCT n.k), toUpper(n.name)",
        ] {
            roundtrip(s);
        }
    }
}
