//! Splitting a query at inner `ORDER BY … LIMIT/SKIP` projections.

use crate::frontend::*;
use crate::gexpr::BagInput;
use crate::normalize::NormalizedAst;

/// One piece of a split query. Every segment but the first reads the rows of
/// its predecessor through `input`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub query: Query,
    pub input: Option<BagInput>,
}

/// Split before each WITH that sorts and truncates. A WITH that only sorts
/// loses its ORDER BY, since later clauses do not keep the order.
pub fn split_segments(n: &NormalizedAst) -> Vec<Segment> {
    let q = drop_inner_sorts(&n.ast);
    match &q {
        Query::Single(s) => split_single(s, None, 0),
        Query::Union { .. } => vec![Segment { query: q, input: None }],
    }
}

fn drop_inner_sorts(q: &Query) -> Query {
    let mut q = q.clone();
    for s in q.branches_mut() {
        for c in &mut s.clauses {
            if let Clause::With(p) = c {
                if p.skip.is_none() && p.limit.is_none() {
                    p.order_by.clear();
                }
            }
        }
    }
    q
}

fn split_single(s: &SingleQuery, input: Option<BagInput>, id: usize) -> Vec<Segment> {
    let cut = s.clauses.iter().position(|c| match c {
        Clause::With(p) => (p.skip.is_some() || p.limit.is_some()) && !p.order_by.is_empty() && !p.star,
        _ => false,
    });
    let Some(i) = cut else {
        return vec![Segment { query: Query::Single(s.clone()), input }];
    };
    let Clause::With(p) = &s.clauses[i] else { unreachable!() };
    let Ok(scope) = check_clauses(&s.clauses[..=i], input_scope(&input)) else {
        return vec![Segment { query: Query::Single(s.clone()), input }];
    };
    let names: Option<Vec<String>> = p.items.iter().map(|it| it.output_name().map(String::from)).collect();
    let Some(names) = names else {
        return vec![Segment { query: Query::Single(s.clone()), input }];
    };
    let head = SingleQuery { clauses: s.clauses[..i].to_vec(), ret: Projection { where_: None, ..p.clone() } };
    let vars: Vec<(String, VarKind)> =
        names.iter().map(|n| (n.clone(), scope.get(n).unwrap_or(VarKind::Value))).collect();
    let next = BagInput { id, positions: (0..vars.len()).collect(), vars };
    let mut clauses = Vec::new();
    if let Some(w) = &p.where_ {
        clauses.push(Clause::With(Projection {
            items: names.iter().map(|n| ProjItem { expr: Expr::var(n), alias: None }).collect(),
            where_: Some(w.clone()),
            ..Projection::default()
        }));
    }
    clauses.extend(s.clauses[i + 1..].iter().cloned());
    let tail = SingleQuery { clauses, ret: s.ret.clone() };
    let mut out = vec![Segment { query: Query::Single(head), input }];
    out.extend(split_single(&tail, Some(next), id + 1));
    out
}

fn input_scope(input: &Option<BagInput>) -> Scope {
    let mut scope = Scope::default();
    if let Some(inp) = input {
        for (n, k) in &inp.vars {
            scope.insert(n, *k);
        }
    }
    scope
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::normalize;

    fn split(q: &str) -> Vec<Segment> {
        split_segments(&normalize(&parse_checked(q).unwrap()).unwrap())
    }

    #[test]
    fn listing_pair_splits_in_two() {
        let segs = split("MATCH (n1) WITH n1 ORDER BY n1.p1 LIMIT 1 MATCH (n1)-[]->(n2) RETURN n2");
        assert_eq!(segs.len(), 2);
        assert_eq!(print(&segs[0].query), "MATCH (n1) RETURN n1 ORDER BY n1.p1 LIMIT 1");
        assert_eq!(print(&segs[1].query), "MATCH (n1)-[r1]->(n2) RETURN n2");
        let inp = segs[1].input.as_ref().unwrap();
        assert_eq!(inp.vars, vec![("n1".to_string(), VarKind::Node)]);
    }

    #[test]
    fn plain_query_is_one_segment() {
        let segs = split("MATCH (n) RETURN n");
        assert_eq!(segs.len(), 1);
        assert!(segs[0].input.is_none());
    }

    #[test]
    fn sort_without_limit_is_dropped() {
        let segs = split("MATCH (n) WITH n ORDER BY n.k WHERE n.k > 1 RETURN n");
        assert_eq!(segs.len(), 1);
        assert!(!print(&segs[0].query).contains("ORDER BY"));
    }

    #[test]
    fn where_after_limit_moves_to_next_segment() {
        let segs = split("MATCH (n) WITH n ORDER BY n.k SKIP 1 WHERE n.k > 1 RETURN n.p");
        assert_eq!(segs.len(), 2);
        assert_eq!(print(&segs[1].query), "WITH n1 WHERE n1.k > 1 RETURN n1.p");
    }
}
