//! Rule-based rewriting of queries into a normal form.
//!
//! Rules are tried in the fixed order R1..R6 and at most one rule fires per
//! round, at its leftmost-outermost site, until none applies.

mod rename;
mod rules;
pub(crate) mod walk;

use std::fmt;

use thiserror::Error;

use crate::frontend::Query;

pub const DEFAULT_ROUND_CAP: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    /// Undirected relationship into two directed UNION ALL branches.
    R1UndirectedElim,
    /// Bounded variable-length relationship into one branch per length.
    R2VarLengthRewrite,
    /// `*` projection into the sorted list of in-scope variables.
    R3ReturnStar,
    /// Removal of pass-through and renaming WITH clauses.
    R4RedundantClauseElim,
    /// Canonical variable names.
    R5VariableStandardize,
    /// Merging of node variables related by `id(a) = id(b)`.
    R6IdEquality,
}

impl RuleId {
    pub const ALL: [RuleId; 6] = [
        RuleId::R1UndirectedElim,
        RuleId::R2VarLengthRewrite,
        RuleId::R3ReturnStar,
        RuleId::R4RedundantClauseElim,
        RuleId::R5VariableStandardize,
        RuleId::R6IdEquality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::R1UndirectedElim => "R1_UndirectedElim",
            RuleId::R2VarLengthRewrite => "R2_VarLengthRewrite",
            RuleId::R3ReturnStar => "R3_ReturnStar",
            RuleId::R4RedundantClauseElim => "R4_RedundantClauseElim",
            RuleId::R5VariableStandardize => "R5_VariableStandardize",
            RuleId::R6IdEquality => "R6_IdEquality",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub round: usize,
    pub rule: RuleId,
    pub site: String,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "round={} rule={} site={}", self.round, self.rule, self.site)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedAst {
    pub ast: Query,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("normalization did not reach a fixpoint within {0} rounds")]
    NormalizationBudgetExceeded(usize),
}

/// A single rewrite: the new query and the path of the rewritten site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub ast: Query,
    pub site: String,
}

/// Rewrite the leftmost-outermost site of `rule`; `None` when nothing matches.
pub fn apply_rule(rule: RuleId, q: &Query) -> Option<Applied> {
    let r = match rule {
        RuleId::R1UndirectedElim => rules::r1(q),
        RuleId::R2VarLengthRewrite => rules::r2(q),
        RuleId::R3ReturnStar => rules::r3(q),
        RuleId::R4RedundantClauseElim => rules::r4(q),
        RuleId::R5VariableStandardize => r5(q),
        RuleId::R6IdEquality => rules::r6(q),
    };
    r.map(|(ast, site)| Applied { ast, site })
}

fn r5(q: &Query) -> Option<(Query, String)> {
    let mut out = q.clone();
    for (bi, s) in out.branches_mut().into_iter().enumerate() {
        let renamed = rename::standardize(s);
        if renamed != *s {
            *s = renamed;
            return Some((out, format!("b{bi}")));
        }
    }
    None
}

pub fn normalize(q: &Query) -> Result<NormalizedAst, NormalizeError> {
    normalize_with_cap(q, DEFAULT_ROUND_CAP)
}

pub fn normalize_with_cap(q: &Query, cap: usize) -> Result<NormalizedAst, NormalizeError> {
    let mut ast = q.clone();
    let mut trace = Vec::new();
    for round in 1.. {
        let step = RuleId::ALL.iter().find_map(|&r| apply_rule(r, &ast).map(|a| (r, a)));
        let Some((rule, applied)) = step else { break };
        if round > cap {
            return Err(NormalizeError::NormalizationBudgetExceeded(cap));
        }
        ast = applied.ast;
        trace.push(TraceEntry { round, rule, site: applied.site });
    }
    Ok(NormalizedAst { ast, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_checked, print};

    fn norm(s: &str) -> NormalizedAst {
        normalize(&parse_checked(s).unwrap()).unwrap()
    }

    fn apply(rule: RuleId, s: &str) -> Option<String> {
        apply_rule(rule, &parse_checked(s).unwrap()).map(|a| print(&a.ast))
    }

    #[test]
    fn r1_table_row() {
        assert_eq!(
            apply(RuleId::R1UndirectedElim, "MATCH (n1)-[]-(n2) RETURN n1.name").unwrap(),
            "MATCH (n1)-[]->(n2) RETURN n1.name UNION ALL MATCH (n1)<-[]-(n2) RETURN n1.name"
        );
        assert_eq!(apply(RuleId::R1UndirectedElim, "MATCH (n1)-[]->(n2) RETURN n1"), None);
    }

    #[test]
    fn r1_and_r2_skip_aggregating_queries() {
        assert_eq!(apply(RuleId::R1UndirectedElim, "MATCH (a)--(b) RETURN COUNT(*)"), None);
        assert_eq!(apply(RuleId::R2VarLengthRewrite, "MATCH (a)-[*1..2]->(b) RETURN DISTINCT a"), None);
        assert_eq!(apply(RuleId::R1UndirectedElim, "OPTIONAL MATCH (a)--(b) RETURN a"), None);
    }

    #[test]
    fn r2_table_row() {
        let out = apply(RuleId::R2VarLengthRewrite, "MATCH (n1)-[*1..2]->(n2) RETURN n1").unwrap();
        assert_eq!(out, "MATCH (n1)-[]->(n2) RETURN n1 UNION ALL MATCH (n1)-[]->()-[]->(n2) RETURN n1");
        let three = apply(RuleId::R2VarLengthRewrite, "MATCH (a)-[:K*2..4]->(b) RETURN b").unwrap();
        assert_eq!(three.matches("UNION ALL").count(), 2);
        assert_eq!(apply(RuleId::R2VarLengthRewrite, "MATCH (a)-[*]->(b) RETURN a"), None);
        assert_eq!(apply(RuleId::R2VarLengthRewrite, "MATCH (a)-[p*1..2]->(b) RETURN p"), None);
    }

    #[test]
    fn r3_table_row() {
        assert_eq!(
            apply(RuleId::R3ReturnStar, "MATCH (x)-[z]->()-[y]->() RETURN *").unwrap(),
            "MATCH (x)-[z]->()-[y]->() RETURN x, y, z"
        );
    }

    #[test]
    fn r4_table_row() {
        assert_eq!(
            apply(RuleId::R4RedundantClauseElim, "MATCH (x) WITH x.name AS name RETURN name").unwrap(),
            "MATCH (x) RETURN x.name"
        );
        assert_eq!(
            apply(RuleId::R4RedundantClauseElim, "MATCH (x) WITH x AS y MATCH (y)-->(z) RETURN y, z").unwrap(),
            "MATCH (x) MATCH (x)-[]->(z) RETURN x, z"
        );
    }

    #[test]
    fn r4_refuses_unsafe_sites() {
        for q in [
            "MATCH (x) WITH DISTINCT x RETURN x",
            "MATCH (x) WITH x LIMIT 1 RETURN x",
            "MATCH (x), (y) WITH x MATCH (y) RETURN y",
            "MATCH (x) WITH x WHERE x.a = 1 RETURN x",
            "MATCH (x) WITH x, COUNT(*) AS c RETURN c",
        ] {
            assert_eq!(apply(RuleId::R4RedundantClauseElim, q), None, "{q}");
        }
    }

    #[test]
    fn r4_keeps_alias_for_order_by() {
        let out = apply(RuleId::R4RedundantClauseElim, "MATCH (x) WITH x.a AS a RETURN DISTINCT a ORDER BY a").unwrap();
        assert_eq!(out, "MATCH (x) RETURN DISTINCT x.a AS a ORDER BY a");
        let out = apply(RuleId::R4RedundantClauseElim, "MATCH (x) WITH x, x.a AS a WITH a, x RETURN a").unwrap();
        assert_eq!(out, "MATCH (x) WITH x.a AS a, x RETURN a");
    }

    #[test]
    fn r6_table_row() {
        let n = norm("MATCH (n1), (n2) WHERE id(n1) = id(n2) RETURN n2");
        assert_eq!(print(&n.ast), "MATCH (n1) RETURN n1");
    }

    #[test]
    fn r5_canonical_names() {
        let n = norm("MATCH (a)-[e]->(b) WITH b, a.x AS s ORDER BY s MATCH (b)<--(c) RETURN c, s AS out");
        assert_eq!(
            print(&n.ast),
            "MATCH (n1)-[r1]->(n2) WITH n2, n1.x AS v1 ORDER BY v1 MATCH (n2)<-[r2]-(n3) RETURN n3, v1 AS v2"
        );
    }

    #[test]
    fn alpha_equivalent_inputs_agree() {
        let a = norm("MATCH (p:Person)-[k:KNOWS]->(q) WHERE p.age > 3 RETURN q.name");
        let b = norm("MATCH (x:Person)-[y:KNOWS]->(z) WHERE x.age > 3 RETURN z.name");
        assert_eq!(a.ast, b.ast);
    }

    #[test]
    fn normal_input_has_empty_trace() {
        let n = norm("MATCH (n1)-[r1]->(n2) RETURN n1");
        assert!(n.trace.is_empty());
        let again = normalize(&norm("MATCH (a)-[*1..3]-(b) RETURN *").ast).unwrap();
        assert!(again.trace.is_empty());
    }

    #[test]
    fn trace_format_and_order() {
        let n = norm("MATCH (x)-[]-(y) RETURN *");
        let lines: Vec<String> = n.trace.iter().map(|t| t.to_string()).collect();
        assert_eq!(lines[0], "round=1 rule=R1_UndirectedElim site=b0/c0/p0/r0");
        assert!(lines.iter().any(|l| l.contains("R3_ReturnStar")));
        let r5 = n.trace.iter().position(|t| t.rule == RuleId::R5VariableStandardize).unwrap();
        assert!(n.trace[..r5].iter().all(|t| t.rule != RuleId::R6IdEquality));
    }

    #[test]
    fn budget_is_enforced() {
        let q = parse_checked("MATCH (a)--(b)--(c) RETURN a").unwrap();
        assert_eq!(normalize_with_cap(&q, 1), Err(NormalizeError::NormalizationBudgetExceeded(1)));
    }
}
