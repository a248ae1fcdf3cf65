use super::*;
use crate::gexpr::Sort;

fn cfg() -> DecideConfig {
    DecideConfig::default()
}

fn check(q1: &str, q2: &str) -> Verdict {
    decide(q1, q2, &cfg()).unwrap()
}

fn compiled(q: &str) -> Compiled {
    build_query(&normalize(&parse_checked(q).unwrap()).unwrap().ast).unwrap()
}

fn z3(script: &SmtScript) -> SolverAnswer {
    run_solver(&cfg().solver, &script.text, Duration::from_secs(10)).unwrap()
}

#[test]
fn split_disjunction_is_unsat() {
    let a = compiled("MATCH (e) WHERE e.age < 10 OR e.age > 20 RETURN e.name");
    let b = compiled("MATCH (e) WHERE e.age < 10 RETURN e.name UNION ALL MATCH (e) WHERE e.age > 20 RETURN e.name");
    let (g1, g2) = (simplify(&a.g), simplify(&b.g));
    assert_ne!(g1, g2);
    let s = eliminate_summations(&g1, &g2, &[Sort::Val]);
    assert!(s.text.contains("lambda"), "{}", s.text);
    assert_eq!(z3(&s), SolverAnswer::Unsat, "{}", s.text);
}

#[test]
fn identical_expressions_are_unsat() {
    let a = compiled("MATCH (n)-[r]->(m) WHERE n.k > 1 RETURN DISTINCT m");
    let g = simplify(&a.g);
    let s = eliminate_summations(&g, &g, &[Sort::Ent]);
    assert!(s.text.ends_with("(check-sat)\n"));
    assert_eq!(z3(&s), SolverAnswer::Unsat);
}

#[test]
fn extra_predicate_is_sat_with_witness() {
    let v = check("MATCH (e) WHERE e.age = 59 RETURN e", "MATCH (e) RETURN e");
    assert_eq!(v.outcome, Outcome::NotEquivalent, "{v:?}");
    let w = v.witness.unwrap();
    assert!(!w.left.same_as(&w.right));
}

#[test]
fn reversed_direction_is_equivalent() {
    let v = check("MATCH (n)-[]->(m) RETURN n", "MATCH (m)<-[]-(n) RETURN n");
    assert_eq!(v.outcome, Outcome::Equivalent, "{v:?}");
}

#[test]
fn union_all_vs_union() {
    let v =
        check("MATCH (n) RETURN n.k UNION ALL MATCH (m) RETURN m.k", "MATCH (n) RETURN n.k UNION MATCH (m) RETURN m.k");
    assert_eq!(v.outcome, Outcome::NotEquivalent, "{v:?}");
}

#[test]
fn swapped_columns_are_mapped() {
    let v = check("MATCH (n1)-[]->(n2) RETURN n1, n2", "MATCH (n2)-[]->(n1) RETURN n2, n1");
    assert_eq!(v.outcome, Outcome::Equivalent, "{v:?}");
    let v = check("MATCH (a)<-[]-(b) RETURN b, a", "MATCH (a)-[]->(b) RETURN a, b");
    assert_eq!(v.mapping, Some(vec![0, 1]));
    let v = check("MATCH (a)-[]->(b) RETURN a, b", "MATCH (a)-[]->(b) RETURN b, a");
    assert_eq!(v.outcome, Outcome::Equivalent, "{v:?}");
    assert_eq!(v.mapping, Some(vec![1, 0]));
}

#[test]
fn nested_aggregate_is_unknown() {
    let v = check("MATCH (n) RETURN COUNT(SUM(n.k))", "MATCH (n) RETURN COUNT(SUM(n.k))");
    assert_eq!(v.outcome, Outcome::Unknown, "{v:?}");
}

#[test]
fn listing_pair_uses_two_segments() {
    let q1 = "MATCH (n1) WITH n1 ORDER BY n1.p1 LIMIT 1 MATCH (n1)-[]->(n2) RETURN n2";
    let q2 = "MATCH (n1) WITH n1 ORDER BY n1.p1 LIMIT 1 MATCH (n2)<-[]-(n1) RETURN n2";
    let v = check(q1, q2);
    assert_eq!((v.outcome, v.segments), (Outcome::Equivalent, 2), "{v:?}");
    let v = check(q1, "MATCH (n1) MATCH (n1)-[]->(n2) RETURN n2");
    assert_eq!(v.outcome, Outcome::Unknown);
    assert_eq!(v.reason.as_deref(), Some("segment count mismatch"));
}

#[test]
fn arity_mismatch_of_empty_queries() {
    let v = check("MATCH (n) WHERE n.k = 1 AND n.k = 2 RETURN n, n.k", "MATCH (n) WHERE n.k < 0 AND n.k > 0 RETURN n");
    assert_eq!(v.outcome, Outcome::Equivalent, "{v:?}");
    let v = check("MATCH (n) RETURN n, n.k", "MATCH (n) RETURN n");
    assert_eq!(v.outcome, Outcome::NotEquivalent, "{v:?}");
}

#[test]
fn missing_solver_is_an_error() {
    let c = DecideConfig { solver: vec!["/nonexistent/solver".into()], ..cfg() };
    let r = decide("MATCH (n) RETURN n", "MATCH (n) WHERE n.k = 1 RETURN n", &c);
    assert!(matches!(r, Err(DecideError::SolverUnavailable(_))));
}
