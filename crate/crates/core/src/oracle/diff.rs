use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::enumerate::{enumerate_graphs, sample_graph, Bounds};
use super::eval::{evaluate, EvalError, ResultBag};
use super::graph::PropertyGraph;
use crate::frontend::Query;

/// Which graphs a differential check visits: the exhaustive stream (smallest
/// graphs first) up to `exhaustive_budget`, then `samples` seeded random graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    pub max_nodes: usize,
    pub max_rels: usize,
    /// Fixed alphabets; derived from the queries when `None`.
    pub bounds: Option<Bounds>,
    pub exhaustive_budget: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_nodes: 3, max_rels: 3, bounds: None, exhaustive_budget: 20_000, samples: 2_000, seed: 0 }
    }
}

impl OracleConfig {
    pub fn bounds_for(&self, qs: &[&Query]) -> Bounds {
        match &self.bounds {
            Some(b) => b.clone(),
            None => Bounds::for_queries(qs, self.max_nodes, self.max_rels),
        }
    }

    /// Every graph the check visits, in order.
    pub fn graphs(&self, qs: &[&Query]) -> impl Iterator<Item = PropertyGraph> {
        let b = self.bounds_for(qs);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let sb = b.clone();
        enumerate_graphs(&b)
            .take(self.exhaustive_budget)
            .chain((0..self.samples).map(move |_| sample_graph(&sb, &mut rng)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffOutcome {
    AgreesUpToBound { graphs: usize },
    Counterexample { graph: PropertyGraph, left: ResultBag, right: ResultBag },
}

impl DiffOutcome {
    pub fn is_counterexample(&self) -> bool {
        matches!(self, DiffOutcome::Counterexample { .. })
    }
}

pub fn differential_check(q1: &Query, q2: &Query, cfg: &OracleConfig) -> Result<DiffOutcome, EvalError> {
    differential_check_mapped(q1, q2, None, cfg)
}

/// Like [`differential_check`], comparing column `i` of `q2` with column
/// `mapping[i]` of `q1`.
pub fn differential_check_mapped(
    q1: &Query,
    q2: &Query,
    mapping: Option<&[usize]>,
    cfg: &OracleConfig,
) -> Result<DiffOutcome, EvalError> {
    let mut seen = 0;
    for g in cfg.graphs(&[q1, q2]) {
        seen += 1;
        if let Some(out) = compare_on(q1, q2, mapping, &g)? {
            return Ok(out);
        }
    }
    Ok(DiffOutcome::AgreesUpToBound { graphs: seen })
}

/// Evaluate both queries on one graph; `Some` when the results differ.
pub fn compare_on(
    q1: &Query,
    q2: &Query,
    mapping: Option<&[usize]>,
    g: &PropertyGraph,
) -> Result<Option<DiffOutcome>, EvalError> {
    let left = run(q1, g)?;
    let right = run(q2, g)?;
    let differ = match (&left, &right) {
        (Ok(l), Ok(r)) => {
            let l = match mapping {
                Some(m) if m.len() == l.columns => l.permuted(m),
                _ => l.clone(),
            };
            !l.same_as(r)
        }
        (Err(_), Err(_)) => false,
        _ => true,
    };
    if !differ {
        return Ok(None);
    }
    let empty =
        |r: Result<ResultBag, EvalError>| r.unwrap_or(ResultBag { columns: 0, rows: Vec::new(), ordered: false });
    Ok(Some(DiffOutcome::Counterexample { graph: g.clone(), left: empty(left), right: empty(right) }))
}

/// Type errors are an observable outcome; unsupported constructs abort the check.
fn run(q: &Query, g: &PropertyGraph) -> Result<Result<ResultBag, EvalError>, EvalError> {
    match evaluate(q, g) {
        Err(e @ EvalError::Unsupported(_)) => Err(e),
        r => Ok(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_checked;

    fn check(a: &str, b: &str) -> DiffOutcome {
        let cfg =
            OracleConfig { max_nodes: 2, max_rels: 2, exhaustive_budget: 5_000, samples: 200, ..Default::default() };
        differential_check(&parse_checked(a).unwrap(), &parse_checked(b).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn reflexive() {
        let q = "MATCH (n)-[r]->(m) WHERE n.age > 3 RETURN n, COUNT(m)";
        assert!(!check(q, q).is_counterexample());
    }

    #[test]
    fn label_stripped_pair_has_single_node_witness() {
        match check("MATCH (n) RETURN n", "MATCH (n:Person) RETURN n") {
            DiffOutcome::Counterexample { graph, .. } => {
                assert_eq!(graph.nodes.len(), 1);
                assert!(graph.rels.is_empty());
                assert!(graph.nodes[0].labels.is_empty());
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn undirected_expansion_agrees() {
        let a = "MATCH (n1)-[r]-(n2) RETURN n1, n2";
        let b = "MATCH (n1)-[r]->(n2) RETURN n1, n2 UNION ALL MATCH (n1)<-[r]-(n2) RETURN n1, n2";
        assert!(!check(a, b).is_counterexample());
    }

    #[test]
    fn union_vs_union_all_differs() {
        let a = "MATCH (n) RETURN n.k UNION ALL MATCH (m) RETURN m.k";
        let b = "MATCH (n) RETURN n.k UNION MATCH (m) RETURN m.k";
        assert!(check(a, b).is_counterexample());
    }

    #[test]
    fn column_mapping_is_applied() {
        let a = parse_checked("MATCH (n1)-[r]->(n2) RETURN n1, n2").unwrap();
        let b = parse_checked("MATCH (n1)<-[r]-(n2) RETURN n1, n2").unwrap();
        let cfg =
            OracleConfig { max_nodes: 2, max_rels: 2, exhaustive_budget: 2_000, samples: 0, ..Default::default() };
        assert!(differential_check(&a, &b, &cfg).unwrap().is_counterexample());
        let swapped = differential_check_mapped(&a, &b, Some(&[1, 0]), &cfg).unwrap();
        assert!(!swapped.is_counterexample());
    }
}
