//! Decision procedure: normalize, split, compile, map columns, encode the
//! negated obligation, and ask an SMT solver. Satisfiable obligations are
//! only reported as non-equivalence when the oracle finds a witness graph.

mod mapping;
mod segments;
mod smt;
mod solver;

use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use mapping::{map_columns, same_sort_keys, ColumnMapping, MappingMethod, MappingPlan};
pub use segments::{split_segments, Segment};
pub use smt::{eliminate_summations, nonempty_script, SmtScript};
pub use solver::{run_solver, SolverAnswer, SolverUnavailable};

use crate::frontend::{parse_checked, Query};
use crate::gexpr::{build_query, build_segment, map_subterms, map_terms, simplify, Compiled, GExpr, Term};
use crate::normalize::normalize;
use crate::oracle::{differential_check_mapped, DiffOutcome, OracleConfig, PropertyGraph, ResultBag};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecideConfig {
    /// Solver command; the script is written to its stdin.
    pub solver: Vec<String>,
    /// Per solver call.
    pub timeout: Duration,
    pub oracle: OracleConfig,
    /// Column mappings tried per segment.
    pub max_mappings: usize,
    /// Keep every emitted script in the verdict.
    pub keep_scripts: bool,
}

impl Default for DecideConfig {
    fn default() -> Self {
        DecideConfig {
            solver: vec!["z3".into(), "-in".into(), "-smt2".into()],
            timeout: Duration::from_secs(10),
            oracle: OracleConfig::default(),
            max_mappings: 24,
            keep_scripts: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Equivalent,
    NotEquivalent,
    Unknown,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Equivalent => "Equivalent",
            Outcome::NotEquivalent => "NotEquivalent",
            Outcome::Unknown => "Unknown",
        })
    }
}

/// A graph on which the two queries return different results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub graph: PropertyGraph,
    pub left: ResultBag,
    pub right: ResultBag,
    /// Column pairing under which the results were compared.
    pub mapping: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub witness: Option<Witness>,
    pub reason: Option<String>,
    pub latency_ms: u64,
    /// Final-segment column mapping of an Equivalent verdict.
    pub mapping: Option<Vec<usize>>,
    pub segments: usize,
    /// Emitted scripts, when `keep_scripts` is set.
    pub scripts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error(transparent)]
    SolverUnavailable(#[from] SolverUnavailable),
}

/// Decide two query texts. Parse errors give an Unknown verdict.
pub fn decide(q1: &str, q2: &str, cfg: &DecideConfig) -> Result<Verdict, DecideError> {
    let start = Instant::now();
    let parsed = parse_checked(q1).and_then(|a| parse_checked(q2).map(|b| (a, b)));
    match parsed {
        Ok((a, b)) => {
            let mut v = decide_queries(&a, &b, cfg)?;
            v.latency_ms = start.elapsed().as_millis() as u64;
            Ok(v)
        }
        Err(e) => Ok(Verdict {
            outcome: Outcome::Unknown,
            witness: None,
            reason: Some(format!("frontend: {e}")),
            latency_ms: start.elapsed().as_millis() as u64,
            mapping: None,
            segments: 0,
            scripts: Vec::new(),
        }),
    }
}

enum SegResult {
    Unsat(Option<Vec<usize>>),
    /// Every mapping was satisfiable; the approximations explain why that
    /// may be spurious.
    Sat(Vec<String>),
    Unknown(String),
}

pub fn decide_queries(q1: &Query, q2: &Query, cfg: &DecideConfig) -> Result<Verdict, DecideError> {
    let start = Instant::now();
    let mut scripts = Vec::new();
    let verdict = |outcome, reason: Option<String>, witness, mapping, segments, scripts| Verdict {
        outcome,
        witness,
        reason,
        latency_ms: start.elapsed().as_millis() as u64,
        mapping,
        segments,
        scripts,
    };
    let (n1, n2) = match (normalize(q1), normalize(q2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Ok(verdict(Outcome::Unknown, Some(e.to_string()), None, None, 0, scripts)),
    };
    let (a1, a2) = align_order(&n1.ast, &n2.ast);
    let s1 = split_segments(&crate::normalize::NormalizedAst { ast: a1, trace: Vec::new() });
    let s2 = split_segments(&crate::normalize::NormalizedAst { ast: a2, trace: Vec::new() });
    if s1.len() != s2.len() {
        return Ok(verdict(Outcome::Unknown, Some("segment count mismatch".into()), None, None, s1.len(), scripts));
    }
    let segs = s1.len();
    let mut unknown: Option<String> = None;
    let mut sat: Option<Vec<String>> = None;
    let mut last_mapping = None;
    for (i, (x, y)) in s1.iter().zip(&s2).enumerate() {
        match prove_segment(x, y, cfg, &mut scripts)? {
            SegResult::Unsat(m) => {
                if i + 1 == segs {
                    last_mapping = m;
                }
            }
            SegResult::Sat(approx) => {
                sat.get_or_insert(approx);
            }
            SegResult::Unknown(r) => {
                unknown.get_or_insert(if segs > 1 { format!("segment {}: {r}", i + 1) } else { r });
            }
        }
    }
    if sat.is_none() && unknown.is_none() {
        return Ok(verdict(Outcome::Equivalent, None, None, last_mapping, segs, scripts));
    }
    let Some(approx) = sat else {
        return Ok(verdict(Outcome::Unknown, unknown, None, None, segs, scripts));
    };
    match oracle_witness(q1, q2, &s1, &s2, cfg) {
        Ok(Some(w)) => Ok(verdict(Outcome::NotEquivalent, None, Some(w), None, segs, scripts)),
        Ok(None) => {
            let mut reason = String::from("satisfiable, but the oracle found no counterexample");
            if !approx.is_empty() {
                reason.push_str(&format!(" (star elimination incomplete: {})", approx.join("; ")));
            }
            if let Some(u) = unknown {
                reason.push_str(&format!("; {u}"));
            }
            Ok(verdict(Outcome::Unknown, Some(reason), None, None, segs, scripts))
        }
        Err(e) => Ok(verdict(Outcome::Unknown, Some(format!("oracle: {e}")), None, None, segs, scripts)),
    }
}

/// When only one query sorts its final rows (without SKIP/LIMIT), the order
/// is not observable in a bag comparison and is dropped.
fn align_order(q1: &Query, q2: &Query) -> (Query, Query) {
    let sorted = |q: &Query| match q {
        Query::Single(s) => !s.ret.order_by.is_empty(),
        Query::Union { .. } => false,
    };
    let strip = |q: &Query| -> Query {
        let mut q = q.clone();
        if let Query::Single(s) = &mut q {
            if s.ret.skip.is_none() && s.ret.limit.is_none() {
                s.ret.order_by.clear();
            }
        }
        q
    };
    match (sorted(q1), sorted(q2)) {
        (true, false) => (strip(q1), q2.clone()),
        (false, true) => (q1.clone(), strip(q2)),
        _ => (q1.clone(), q2.clone()),
    }
}

fn compile(s: &Segment) -> Result<Compiled, String> {
    match &s.input {
        Some(inp) => build_segment(&s.query, inp),
        None => build_query(&s.query),
    }
    .map_err(|e| e.to_string())
}

/// Replace `t.j` of the second query by `t.perm[j]`; hidden columns keep
/// their index.
fn remap_columns(g: &GExpr, perm: &[usize]) -> GExpr {
    fn t(u: &Term, perm: &[usize]) -> Term {
        match u {
            Term::Col(j, s) if *j < perm.len() => Term::Col(perm[*j], *s),
            Term::Count(g) => Term::Count(Box::new(remap_columns(g, perm))),
            Term::Agg { kind, distinct, vars, body, arg } => Term::Agg {
                kind: *kind,
                distinct: *distinct,
                vars: vars.clone(),
                body: Box::new(remap_columns(body, perm)),
                arg: Box::new(t(arg, perm)),
            },
            _ => map_subterms(u, &mut |x| t(x, perm)),
        }
    }
    map_terms(g, &mut |u| t(u, perm))
}

fn prove_segment(
    x: &Segment,
    y: &Segment,
    cfg: &DecideConfig,
    scripts: &mut Vec<String>,
) -> Result<SegResult, DecideError> {
    let (c1, c2) = match (compile(x), compile(y)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Ok(SegResult::Unknown(e)),
    };
    let g1 = simplify(&c1.g);
    let ordered = c1.ordered || c2.ordered;
    let plan = map_columns(&c1.columns[..c1.visible], &c2.columns[..c2.visible], ordered, cfg.max_mappings);
    let sorts = |c: &Compiled| c.columns.iter().map(|c| c.sort).collect::<Vec<_>>();
    let candidates = match plan {
        MappingPlan::EmptyResultObligation => {
            let g2 = simplify(&c2.g);
            let mut approx = Vec::new();
            for (g, c) in [(&g1, &c1), (&g2, &c2)] {
                if *g == GExpr::Zero {
                    continue;
                }
                let script = nonempty_script(g, &sorts(c));
                match solve(&script, cfg, scripts)? {
                    SolverAnswer::Unsat => {}
                    SolverAnswer::Sat => {
                        approx.extend(script.approximations);
                        return Ok(SegResult::Sat(approx));
                    }
                    SolverAnswer::Unknown(r) => return Ok(SegResult::Unknown(r)),
                }
            }
            return Ok(SegResult::Unsat(None));
        }
        MappingPlan::Candidates(ms) => ms,
    };
    if ordered && !(c1.ordered && c2.ordered && same_sort_keys(&c1.columns, &c2.columns)) {
        return Ok(SegResult::Sat(vec!["ORDER BY keys differ".into()]));
    }
    let columns = sorts(&c1);
    let mut approx: Vec<String> = Vec::new();
    let mut unknown = None;
    for m in &candidates {
        let g2 = simplify(&remap_columns(&c2.g, &m.perm));
        if g1 == g2 {
            return Ok(SegResult::Unsat(Some(m.perm.clone())));
        }
        let script = eliminate_summations(&g1, &g2, &columns);
        match solve(&script, cfg, scripts)? {
            SolverAnswer::Unsat => return Ok(SegResult::Unsat(Some(m.perm.clone()))),
            SolverAnswer::Sat => {
                for a in script.approximations {
                    if !approx.contains(&a) {
                        approx.push(a);
                    }
                }
            }
            SolverAnswer::Unknown(r) => {
                unknown.get_or_insert(r);
            }
        }
    }
    Ok(match unknown {
        Some(r) => SegResult::Unknown(r),
        None => SegResult::Sat(approx),
    })
}

fn solve(script: &SmtScript, cfg: &DecideConfig, scripts: &mut Vec<String>) -> Result<SolverAnswer, DecideError> {
    if cfg.keep_scripts {
        scripts.push(script.text.clone());
    }
    Ok(run_solver(&cfg.solver, &script.text, cfg.timeout)?)
}

/// Oracle counterexample valid under every column pairing the decider could
/// pick, or `None` when some pairing agrees up to the bound.
pub fn distinguishing_witness(
    q1: &Query,
    q2: &Query,
    cfg: &DecideConfig,
) -> Result<Option<Witness>, crate::oracle::EvalError> {
    let (s1, s2) = match (normalize(q1), normalize(q2)) {
        (Ok(a), Ok(b)) => {
            let (a1, a2) = align_order(&a.ast, &b.ast);
            (
                split_segments(&crate::normalize::NormalizedAst { ast: a1, trace: Vec::new() }),
                split_segments(&crate::normalize::NormalizedAst { ast: a2, trace: Vec::new() }),
            )
        }
        _ => (Vec::new(), Vec::new()),
    };
    oracle_witness(q1, q2, &s1, &s2, cfg)
}

/// A counterexample under every column pairing the final segments admit.
fn oracle_witness(
    q1: &Query,
    q2: &Query,
    s1: &[Segment],
    s2: &[Segment],
    cfg: &DecideConfig,
) -> Result<Option<Witness>, crate::oracle::EvalError> {
    let mappings: Vec<Option<Vec<usize>>> = match (s1.last().map(compile), s2.last().map(compile)) {
        (Some(Ok(c1)), Some(Ok(c2))) => {
            match map_columns(
                &c1.columns[..c1.visible],
                &c2.columns[..c2.visible],
                c1.ordered || c2.ordered,
                cfg.max_mappings,
            ) {
                MappingPlan::Candidates(ms) => ms.into_iter().map(|m| Some(m.perm)).collect(),
                MappingPlan::EmptyResultObligation => vec![None],
            }
        }
        _ => vec![None],
    };
    let mut first = None;
    for m in mappings {
        match differential_check_mapped(q1, q2, m.as_deref(), &cfg.oracle)? {
            DiffOutcome::Counterexample { graph, left, right } => {
                first.get_or_insert(Witness { graph, left, right, mapping: m });
            }
            DiffOutcome::AgreesUpToBound { .. } => return Ok(None),
        }
    }
    Ok(first)
}

#[cfg(test)]
mod tests;
