//! Mutation of equivalent pairs into non-equivalent ones.
//!
//! Each mutant differs from its source query by exactly one rule application
//! and is kept only when the oracle finds a graph separating it from the
//! other query of the pair under every column pairing the decider may use.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decide::{distinguishing_witness, DecideConfig};
use crate::frontend::{parse_checked, print, Clause, Direction, Expr, Pattern, Projection, Query};
use crate::pairfile::{Expect, PairEntry, PairFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationRule {
    FlipDirection,
    ChangeValue,
    SwapUnion,
    ChangeLimitOrder,
    ToggleDistinct,
}

impl MutationRule {
    pub const ALL: [MutationRule; 5] = [
        MutationRule::FlipDirection,
        MutationRule::ChangeValue,
        MutationRule::SwapUnion,
        MutationRule::ChangeLimitOrder,
        MutationRule::ToggleDistinct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationRule::FlipDirection => "flip-direction",
            MutationRule::ChangeValue => "change-value",
            MutationRule::SwapUnion => "swap-union",
            MutationRule::ChangeLimitOrder => "change-limit-order",
            MutationRule::ToggleDistinct => "toggle-distinct",
        }
    }

    pub fn from_name(s: &str) -> Option<MutationRule> {
        MutationRule::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for MutationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every query obtained from `q` by one application of `rule`.
pub fn mutants(q: &Query, rule: MutationRule) -> Vec<Query> {
    let labels = label_vocabulary(q);
    let mut probe = q.clone();
    let mut n = 0;
    apply(&mut probe, rule, usize::MAX, &mut n, &labels);
    (0..n)
        .map(|k| {
            let mut m = q.clone();
            apply(&mut m, rule, k, &mut 0, &labels);
            m
        })
        .filter(|m| m != q)
        .collect()
}

fn apply(q: &mut Query, rule: MutationRule, target: usize, counter: &mut usize, labels: &[String]) {
    let hit = |counter: &mut usize| {
        let h = *counter == target;
        *counter += 1;
        h
    };
    match rule {
        MutationRule::SwapUnion => swap_union(q, &mut |c| hit(c), counter),
        MutationRule::FlipDirection => each_pattern(q, &mut |p| {
            for (r, _) in &mut p.chain {
                if r.dir != Direction::Both && hit(counter) {
                    r.dir = if r.dir == Direction::Right { Direction::Left } else { Direction::Right };
                }
            }
        }),
        MutationRule::ChangeValue => {
            each_pattern(q, &mut |p| {
                for n in std::iter::once(&mut p.start).chain(p.chain.iter_mut().map(|(_, n)| n)) {
                    for l in &mut n.labels {
                        if hit(counter) {
                            *l = other_label(l, labels);
                        }
                    }
                    for (_, v) in &mut n.props {
                        change_literals(v, &mut |c| hit(c), counter);
                    }
                }
                for (r, _) in &mut p.chain {
                    for l in &mut r.labels {
                        if hit(counter) {
                            *l = other_label(l, labels);
                        }
                    }
                    for (_, v) in &mut r.props {
                        change_literals(v, &mut |c| hit(c), counter);
                    }
                }
            });
            each_where(q, &mut |e| change_literals(e, &mut |c| hit(c), counter));
        }
        MutationRule::ChangeLimitOrder => each_projection(q, &mut |p| {
            if let Some(l) = &mut p.limit {
                if hit(counter) {
                    *l += 1;
                }
                if *l > 0 && hit(counter) {
                    *l -= 1;
                }
            }
            if let Some(s) = &mut p.skip {
                if hit(counter) {
                    *s += 1;
                }
            }
            for s in &mut p.order_by {
                if hit(counter) {
                    s.desc = !s.desc;
                }
            }
        }),
        MutationRule::ToggleDistinct => each_projection(q, &mut |p| {
            if hit(counter) {
                p.distinct = !p.distinct;
            }
        }),
    }
}

fn swap_union(q: &mut Query, hit: &mut dyn FnMut(&mut usize) -> bool, counter: &mut usize) {
    if let Query::Union { left, right, all } = q {
        if hit(counter) {
            *all = !*all;
        }
        swap_union(left, hit, counter);
        swap_union(right, hit, counter);
    }
}

fn change_literals(e: &mut Expr, hit: &mut dyn FnMut(&mut usize) -> bool, counter: &mut usize) {
    e.rewrite(&mut |x| match x {
        Expr::Int(n) if hit(counter) => *n += 1,
        Expr::Str(s) if hit(counter) => s.push('2'),
        _ => {}
    });
}

fn other_label(l: &str, labels: &[String]) -> String {
    labels.iter().find(|x| x.as_str() != l).cloned().unwrap_or_else(|| format!("{l}2"))
}

fn label_vocabulary(q: &Query) -> Vec<String> {
    let mut out = BTreeSet::new();
    let mut q = q.clone();
    each_pattern(&mut q, &mut |p| {
        for n in p.nodes() {
            out.extend(n.labels.iter().cloned());
        }
    });
    out.into_iter().collect()
}

fn each_projection(q: &mut Query, f: &mut dyn FnMut(&mut Projection)) {
    for b in q.branches_mut() {
        for c in &mut b.clauses {
            if let Clause::With(p) = c {
                f(p);
            }
        }
        f(&mut b.ret);
    }
}

fn each_pattern(q: &mut Query, f: &mut dyn FnMut(&mut Pattern)) {
    for b in q.branches_mut() {
        for c in &mut b.clauses {
            if let Clause::Match(m) = c {
                m.patterns.iter_mut().for_each(&mut *f);
            }
        }
    }
}

fn each_where(q: &mut Query, f: &mut dyn FnMut(&mut Expr)) {
    for b in q.branches_mut() {
        for c in &mut b.clauses {
            match c {
                Clause::Match(m) => m.where_.iter_mut().for_each(&mut *f),
                Clause::With(p) => p.where_.iter_mut().for_each(&mut *f),
                Clause::Unwind(_) => {}
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MutateReport {
    pub file: PairFile,
    /// Source pairs without an emitted mutant, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Mutate the second query of every pair not expected non-equivalent.
/// Rules are tried in a seeded random order; the first mutant the oracle
/// separates is emitted with its witness graph as `# witness:` lines.
pub fn mutate_pairs(pairs: &PairFile, seed: u64, cfg: &DecideConfig) -> MutateReport {
    let mut report = MutateReport::default();
    for (i, e) in pairs.entries.iter().enumerate() {
        if e.expect == Expect::NonEquivalent {
            report.skipped.push((e.id.clone(), "already non-equivalent".into()));
            continue;
        }
        match mutate_entry(e, seed.wrapping_add(i as u64), cfg) {
            Ok(m) => report.file.entries.push(m),
            Err(reason) => report.skipped.push((e.id.clone(), reason)),
        }
    }
    report
}

fn mutate_entry(e: &PairEntry, seed: u64, cfg: &DecideConfig) -> Result<PairEntry, String> {
    let (q1, q2) = match (parse_checked(&e.q1), parse_checked(&e.q2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(x), _) | (_, Err(x)) => return Err(format!("frontend: {x}")),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rules = MutationRule::ALL.to_vec();
    rules.shuffle(&mut rng);
    for rule in rules {
        let mut ms = mutants(&q2, rule);
        ms.shuffle(&mut rng);
        for m in ms {
            let text = print(&m);
            let Ok(m) = parse_checked(&text) else { continue };
            match distinguishing_witness(&q1, &m, cfg) {
                Ok(Some(w)) => {
                    let mut meta = vec![("rule".to_string(), rule.name().to_string())];
                    if let Some(p) = &w.mapping {
                        let p: Vec<String> = p.iter().map(usize::to_string).collect();
                        meta.push(("mapping".into(), p.join(",")));
                    }
                    meta.extend(w.graph.to_string().lines().map(|l| ("witness".to_string(), l.to_string())));
                    return Ok(PairEntry {
                        id: format!("{}~{}", e.id, rule.name()),
                        q1: e.q1.clone(),
                        q2: text,
                        expect: Expect::NonEquivalent,
                        meta,
                    });
                }
                Ok(None) | Err(_) => continue,
            }
        }
    }
    Err("no mutant separated by the oracle".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Query {
        parse_checked(s).unwrap()
    }

    fn texts(s: &str, rule: MutationRule) -> Vec<String> {
        mutants(&q(s), rule).iter().map(print).collect()
    }

    #[test]
    fn each_rule_has_sites() {
        let base =
            "MATCH (a:P)-[r]->(b) WHERE a.x = 1 RETURN DISTINCT b ORDER BY b.y LIMIT 2 UNION ALL MATCH (c) RETURN c";
        for rule in MutationRule::ALL {
            assert!(!mutants(&q(base), rule).is_empty(), "{rule}");
        }
    }

    #[test]
    fn single_site_changes() {
        assert_eq!(texts("MATCH (a)-[]->(b) RETURN a", MutationRule::FlipDirection), ["MATCH (a)<-[]-(b) RETURN a"]);
        assert!(texts("MATCH (a)-[]-(b) RETURN a", MutationRule::FlipDirection).is_empty());
        assert_eq!(
            texts("MATCH (a) RETURN a UNION MATCH (b) RETURN b", MutationRule::SwapUnion),
            ["MATCH (a) RETURN a UNION ALL MATCH (b) RETURN b"]
        );
        assert_eq!(
            texts("MATCH (a) WHERE a.x = 1 RETURN a", MutationRule::ChangeValue),
            ["MATCH (a) WHERE a.x = 2 RETURN a"]
        );
        assert_eq!(texts("MATCH (a:P)-[]->(b:Q) RETURN a", MutationRule::ChangeValue).len(), 2);
    }

    #[test]
    fn union_swap_is_emitted_with_witness() {
        let pairs = PairFile::parse("# id: u\nMATCH (a)-[]->(b) RETURN a UNION ALL MATCH (a)-[]->(b) RETURN a\n--\nMATCH (x)-[]->(y) RETURN x UNION ALL MATCH (x)-[]->(y) RETURN x\n").unwrap();
        let r = mutate_pairs(&pairs, 7, &DecideConfig::default());
        assert_eq!(r.file.entries.len(), 1, "{:?}", r.skipped);
        let e = &r.file.entries[0];
        assert_eq!(e.expect, Expect::NonEquivalent);
        assert!(e.meta("witness").count() > 0);
    }

    #[test]
    fn symmetric_flip_is_skipped() {
        // Flipping one side of a pattern whose both directions are matched
        // leaves the result unchanged.
        let pairs =
            PairFile::parse("MATCH (a)-[]->(b) RETURN COUNT(*)\n--\nMATCH (a)-[]->(b) RETURN COUNT(*)\n").unwrap();
        let r = mutate_pairs(&pairs, 1, &DecideConfig::default());
        if let Some(e) = r.file.entries.first() {
            assert_ne!(e.meta("rule").next(), Some("flip-direction"));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let pairs = PairFile::parse(
            "MATCH (a:P)-[]->(b) WHERE a.x = 1 RETURN a, b\n--\nMATCH (b)<-[]-(a:P) WHERE a.x = 1 RETURN a, b\n",
        )
        .unwrap();
        let a = mutate_pairs(&pairs, 3, &DecideConfig::default());
        let b = mutate_pairs(&pairs, 3, &DecideConfig::default());
        assert_eq!(a.file, b.file);
    }
}
