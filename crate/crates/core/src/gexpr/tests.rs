use super::*;
use crate::frontend::parse_checked;
use crate::normalize::normalize;
use crate::oracle::{enumerate_graphs, Bounds, PropertyGraph};

fn compile(s: &str) -> Compiled {
    build(&normalize(&parse_checked(s).unwrap()).unwrap()).unwrap()
}

fn simp(s: &str) -> String {
    simplify(&compile(s).g).to_string()
}

#[test]
fn distinct_projection_becomes_squash() {
    assert_eq!(
        simp("MATCH (p:Person) WITH DISTINCT p.name AS n RETURN n"),
        "‖Σ[e1](Lab(e1,Person)×Node(e1)×[e1.name ≡ t.0])‖"
    );
}

#[test]
fn pins_are_eliminated() {
    assert_eq!(simp("MATCH (a) RETURN a"), "Node(t.0)");
    assert_eq!(simp("MATCH (a) WHERE a.k > 1 RETURN a"), "Node(t.0)×[1 < t.0.k]");
    assert_eq!(simp("UNWIND [1, 2] AS x RETURN x"), "([1 ≡ t.0] + [2 ≡ t.0])");
}

#[test]
fn alpha_variants_print_identically() {
    let a = simp("MATCH (a)-[r]->(b)-[s]->(c) RETURN a, c");
    let b = simp("MATCH (c)<-[s]-(b)<-[r]-(a) RETURN a, c");
    assert_eq!(a, b);
}

#[test]
fn predicates_relocate_into_sums() {
    let a = simp("MATCH (a) WITH a, COUNT(*) AS c WHERE c > 0 RETURN a");
    assert!(!a.contains("Σ[e1](Node(e1))×"), "{a}");
}

#[test]
fn rels_in_one_match_are_distinct() {
    let c = compile("MATCH (a)-[r]->(b), (a)-[s]->(b) RETURN a");
    let g = PropertyGraph::parse("node 0 labels= props=\nnode 1 labels= props=\nrel 0 0 1 label=A props=").unwrap();
    assert_eq!(interpret(&c.g, &g, &[Value::Node(0)]).unwrap(), 0);
    let c = compile("MATCH (a)-[r]->(b) MATCH (a)-[s]->(b) RETURN a");
    assert_eq!(interpret(&c.g, &g, &[Value::Node(0)]).unwrap(), 1);
}

#[test]
fn empty_graph_gives_zero() {
    let g = PropertyGraph::default();
    for q in ["MATCH (a) RETURN a", "MATCH (a)-[r]->(b) RETURN r"] {
        let c = compile(q);
        assert_eq!(interpret(&simplify(&c.g), &g, &[Value::Null]).unwrap(), 0, "{q}");
    }
}

#[test]
fn interpret_refuses_solver_only_terms() {
    let c = compile("MATCH (a)-[*]->(b) RETURN b");
    assert!(!c.g.is_simple());
    let g = PropertyGraph::parse("node 0 labels= props=").unwrap();
    assert!(interpret(&c.g, &g, &[Value::Node(0)]).is_err());
}

/// `interpret` of the raw and simplified expressions matches the evaluator's
/// multiplicities on every small graph.
pub(crate) fn agrees_with_oracle(q: &str, max_nodes: usize, max_rels: usize, budget: usize) {
    let ast = parse_checked(q).unwrap();
    let n = normalize(&ast).unwrap();
    let c = build(&n).unwrap();
    assert_eq!(c.visible, c.columns.len(), "{q}: ordered queries are not compared");
    let b = Bounds::for_queries(&[&ast], max_nodes, max_rels);
    for g in enumerate_graphs(&b).take(budget) {
        let m = compare_multiplicities(&ast, &c, &g, &b.values).unwrap();
        assert_eq!(m, None, "{q}\n{g:?}\nraw {}\nsimp {}", c.g, simplify(&c.g));
    }
}

#[test]
fn matches_oracle_on_small_graphs() {
    for q in [
        "MATCH (a) RETURN a",
        "MATCH (a:A) WHERE a.k = 1 RETURN a.p",
        "MATCH (a)-[r]->(b) RETURN a, b",
        "MATCH (a)-[r:A]->(b) WHERE r.k >= 1 RETURN r",
        "MATCH (a)-[r]->(b), (b)-[s]->(c) RETURN a, c",
        "MATCH (a)-[r]->(a) RETURN a",
        "MATCH (a)--(b) RETURN a",
        "MATCH (a)-[*1..2]->(b) RETURN a, b",
        "MATCH (a) WHERE a.k > 0 OR NOT a.p = 1 RETURN a",
        "MATCH (a) WHERE a.k IS NULL RETURN a",
        "MATCH (a) WITH DISTINCT a.k AS k RETURN k",
        "MATCH (a) RETURN DISTINCT a.k",
        "MATCH (a) RETURN a.k, COUNT(*)",
        "MATCH (a) RETURN COUNT(a.k)",
        "MATCH (a) RETURN COUNT(DISTINCT a.k)",
        "MATCH (a) RETURN SUM(a.k)",
        "MATCH (a) RETURN a.p, MIN(a.k), MAX(a.k)",
        "MATCH (a) RETURN COLLECT(a.k)",
        "MATCH (a) WITH a, COUNT(*) AS c WHERE c > 0 RETURN a",
        "MATCH (a) OPTIONAL MATCH (a)-[r]->(b) RETURN a, b",
        "MATCH (a) OPTIONAL MATCH (a)-[r]->(b) WHERE b.k = 1 RETURN a, b.k",
        "UNWIND [1, 2, 2] AS x RETURN x",
        "MATCH (a) UNWIND [0, 1] AS x WITH a, x WHERE a.k = x RETURN a",
        "MATCH (a) RETURN a UNION MATCH (b)-[]->() RETURN b",
        "MATCH (a) RETURN a.k UNION ALL MATCH (b)-[]->() RETURN b.k",
        "MATCH (a) WITH a.k AS k, COLLECT(a) AS xs UNWIND xs AS y RETURN y",
        "MATCH (a) WHERE EXISTS { MATCH (a)-[]->() } RETURN a",
        "MATCH (a:A) OPTIONAL MATCH (a)<-[r]-(b) RETURN MAX(r.k)",
        "MATCH (a) OPTIONAL MATCH (a)-[r]-(b:B) RETURN b.k, MAX(b.p)",
        "MATCH (a) OPTIONAL MATCH (a)-[r]->(b) WITH DISTINCT r, a RETURN r",
        "MATCH (a) OPTIONAL MATCH (a)-[r]->(b) RETURN DISTINCT b.k",
        "UNWIND [1] AS x MATCH (a) WITH DISTINCT x RETURN x",
    ] {
        agrees_with_oracle(q, 2, 2, 3_000);
    }
}
