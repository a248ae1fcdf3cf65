//! Random query generation for property tests and fuzzing.
//!
//! Queries are drawn as a small structure and rendered to text. Rendering
//! options give the equivalence-preserving rewrites for free: variables can
//! be renamed, paths written in reverse, and multi-hop paths split into
//! comma-separated patterns of the same MATCH.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::frontend::{parse_checked, Query};
use crate::mutate::{mutants, MutationRule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    /// Leave out unbounded paths, built-in functions and ORDER BY.
    pub simple: bool,
    pub labels: Vec<String>,
    pub keys: Vec<String>,
    pub values: Vec<i64>,
    /// Upper bound on result columns.
    pub max_arity: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            simple: false,
            labels: vec!["A".into(), "B".into()],
            keys: vec!["k".into(), "p".into()],
            values: vec![0, 1, 2],
            max_arity: 2,
        }
    }
}

impl GenConfig {
    pub fn simple() -> Self {
        GenConfig { simple: true, ..GenConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Node,
    Rel,
    Val,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Right,
    Left,
    Both,
}

#[derive(Debug, Clone)]
struct NodeSpec {
    var: usize,
    label: Option<String>,
    prop: Option<(String, i64)>,
}

#[derive(Debug, Clone)]
struct Hop {
    var: usize,
    label: Option<String>,
    dir: Dir,
    /// `(min, max)`; `max == None` is unbounded.
    range: Option<(u32, Option<u32>)>,
    to: NodeSpec,
}

#[derive(Debug, Clone)]
struct PathSpec {
    start: NodeSpec,
    hops: Vec<Hop>,
}

#[derive(Debug, Clone)]
enum E {
    Var(usize),
    Prop(usize, String),
    Int(i64),
    Cmp(&'static str, Box<E>, Box<E>),
    And(Box<E>, Box<E>),
    Or(Box<E>, Box<E>),
    Not(Box<E>),
    IsNull(Box<E>, bool),
    Agg(&'static str, Option<Box<E>>),
    Func(&'static str, Vec<E>),
}

#[derive(Debug, Clone)]
struct MatchSpec {
    optional: bool,
    paths: Vec<PathSpec>,
    where_: Option<E>,
}

#[derive(Debug, Clone)]
enum ClauseSpec {
    Match(MatchSpec),
    Unwind(Vec<i64>, usize),
    /// Items are (expression, output variable).
    With {
        distinct: bool,
        items: Vec<(E, usize)>,
        where_: Option<E>,
    },
}

#[derive(Debug, Clone)]
struct BranchSpec {
    clauses: Vec<ClauseSpec>,
    distinct: bool,
    items: Vec<E>,
    order: Vec<(E, bool)>,
    limit: Option<i64>,
}

/// A generated query, renderable in several equivalent spellings.
#[derive(Debug, Clone)]
pub struct QuerySpec {
    branches: Vec<BranchSpec>,
    union_all: Vec<bool>,
    kinds: Vec<Kind>,
}

/// Spelling choices for [`QuerySpec::render`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Render {
    /// Use a second naming scheme for variables.
    pub rename: bool,
    /// Write every path right to left.
    pub reverse: bool,
    /// Write every multi-hop path as comma-separated one-hop patterns.
    pub split: bool,
    /// Swap the operands of every AND.
    pub commute: bool,
}

struct Builder<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    kinds: Vec<Kind>,
}

impl<R: Rng> Builder<'_, R> {
    fn var(&mut self, k: Kind) -> usize {
        self.kinds.push(k);
        self.kinds.len() - 1
    }

    fn label(&mut self, p: f64) -> Option<String> {
        self.rng.gen_bool(p).then(|| self.cfg.labels.choose(self.rng).unwrap().clone())
    }

    fn key(&mut self) -> String {
        self.cfg.keys.choose(self.rng).unwrap().clone()
    }

    fn value(&mut self) -> i64 {
        *self.cfg.values.choose(self.rng).unwrap()
    }

    fn node(&mut self, scope: &mut Vec<usize>, reuse: Option<usize>) -> NodeSpec {
        let var = match reuse {
            Some(v) => v,
            None => {
                let v = self.var(Kind::Node);
                scope.push(v);
                v
            }
        };
        let label = self.label(if reuse.is_some() { 0.1 } else { 0.4 });
        let prop = self.rng.gen_bool(0.12).then(|| (self.key(), self.value()));
        NodeSpec { var, label, prop }
    }

    fn path(&mut self, scope: &mut Vec<usize>, start: Option<usize>, max_hops: usize) -> PathSpec {
        let start = self.node(scope, start);
        let hops = self.rng.gen_range(0..=max_hops);
        let mut out = Vec::new();
        for _ in 0..hops {
            let dir = match self.rng.gen_range(0..10) {
                0..=3 => Dir::Right,
                4..=7 => Dir::Left,
                _ => Dir::Both,
            };
            let range = match self.rng.gen_range(0..12) {
                0 => Some((1, Some(2))),
                1 if !self.cfg.simple => Some((1, None)),
                _ => None,
            };
            // Variable-length relationships stay unnamed.
            let var = if range.is_some() { usize::MAX } else { self.var(Kind::Rel) };
            if var != usize::MAX {
                scope.push(var);
            }
            let label = self.label(0.5);
            let to = self.node(scope, None);
            out.push(Hop { var, label, dir, range, to });
        }
        PathSpec { start, hops: out }
    }

    fn of_kind(&mut self, scope: &[usize], k: Kind) -> Option<usize> {
        let c: Vec<usize> = scope.iter().copied().filter(|&v| self.kinds[v] == k).collect();
        c.choose(self.rng).copied()
    }

    fn entity(&mut self, scope: &[usize]) -> Option<usize> {
        let c: Vec<usize> = scope.iter().copied().filter(|&v| self.kinds[v] != Kind::Val).collect();
        c.choose(self.rng).copied()
    }

    fn atom(&mut self, scope: &[usize]) -> E {
        let Some(v) = self.entity(scope) else {
            return E::Cmp("=", Box::new(E::Int(1)), Box::new(E::Int(1)));
        };
        let lhs = E::Prop(v, self.key());
        match self.rng.gen_range(0..10) {
            0 => E::IsNull(Box::new(lhs), self.rng.gen()),
            1 => match self.entity(scope) {
                Some(w) => E::Cmp("=", Box::new(lhs), Box::new(E::Prop(w, self.key()))),
                None => E::IsNull(Box::new(lhs), false),
            },
            2 => match self.of_kind(scope, Kind::Val) {
                Some(x) => E::Cmp("=", Box::new(lhs), Box::new(E::Var(x))),
                None => E::Cmp("<>", Box::new(lhs), Box::new(E::Int(self.value()))),
            },
            3 if !self.cfg.simple => E::Cmp("=", Box::new(E::Func("abs", vec![lhs])), Box::new(E::Int(self.value()))),
            _ => {
                let op = *["=", "<>", "<", "<=", ">", ">="].choose(self.rng).unwrap();
                E::Cmp(op, Box::new(lhs), Box::new(E::Int(self.value())))
            }
        }
    }

    fn pred(&mut self, scope: &[usize], depth: usize) -> E {
        if depth == 0 || self.rng.gen_bool(0.5) {
            return self.atom(scope);
        }
        match self.rng.gen_range(0..3) {
            0 => E::And(Box::new(self.pred(scope, depth - 1)), Box::new(self.pred(scope, depth - 1))),
            1 => E::Or(Box::new(self.pred(scope, depth - 1)), Box::new(self.pred(scope, depth - 1))),
            _ => E::Not(Box::new(self.pred(scope, depth - 1))),
        }
    }

    fn item(&mut self, scope: &[usize]) -> E {
        let v = *scope.choose(self.rng).unwrap();
        if self.kinds[v] == Kind::Val || self.rng.gen_bool(0.5) {
            E::Var(v)
        } else {
            E::Prop(v, self.key())
        }
    }

    fn agg(&mut self, scope: &[usize]) -> E {
        let arg = |b: &mut Self| match b.entity(scope) {
            Some(v) => Some(Box::new(E::Prop(v, b.key()))),
            None => None,
        };
        match self.rng.gen_range(0..5) {
            0 => E::Agg("COUNT", None),
            1 => E::Agg("COUNT", arg(self)),
            2 => E::Agg("SUM", arg(self)),
            3 => E::Agg("MIN", arg(self)),
            _ => E::Agg("MAX", arg(self)),
        }
    }

    fn branch(&mut self, arity: usize, may_order: bool) -> BranchSpec {
        let mut scope = Vec::new();
        let mut clauses = Vec::new();
        if self.rng.gen_bool(0.12) {
            let x = self.var(Kind::Val);
            let n = self.rng.gen_range(1..=3);
            let list: Vec<i64> = (0..n).map(|_| self.value()).collect();
            clauses.push(ClauseSpec::Unwind(list, x));
            scope.push(x);
        }
        let mut paths = vec![self.path(&mut scope, None, 2)];
        if self.rng.gen_bool(0.25) {
            let shared = self.rng.gen_bool(0.6).then(|| self.of_kind(&scope, Kind::Node)).flatten();
            paths.push(self.path(&mut scope, shared, 1));
        }
        let where_ = self.rng.gen_bool(0.5).then(|| self.pred(&scope, 2));
        clauses.push(ClauseSpec::Match(MatchSpec { optional: false, paths, where_ }));
        for optional in [true, false] {
            if self.rng.gen_bool(if optional { 0.15 } else { 0.12 }) {
                let from = self.of_kind(&scope, Kind::Node);
                let mut inner = scope.clone();
                let mut p = self.path(&mut inner, from, 1);
                if p.hops.is_empty() && from.is_some() {
                    continue;
                }
                if optional {
                    p.start.label = None;
                    p.start.prop = None;
                }
                let new: Vec<usize> = inner[scope.len()..].to_vec();
                let where_ = (self.rng.gen_bool(0.4) && !new.is_empty()).then(|| self.atom(&new));
                scope = inner;
                clauses.push(ClauseSpec::Match(MatchSpec { optional, paths: vec![p], where_ }));
            }
        }
        if self.rng.gen_bool(0.25) {
            let mut keep: Vec<usize> = scope.clone();
            keep.shuffle(self.rng);
            keep.truncate(self.rng.gen_range(1..=2.min(keep.len())));
            let mut items: Vec<(E, usize)> = keep.iter().map(|&v| (E::Var(v), v)).collect();
            let mut next = keep.clone();
            let (distinct, where_) = match self.rng.gen_range(0..3) {
                0 => (true, None),
                1 => {
                    let a = self.var(Kind::Val);
                    items.push((E::Agg("COUNT", None), a));
                    next.push(a);
                    let w = self.rng.gen_bool(0.5).then(|| E::Cmp(">", Box::new(E::Var(a)), Box::new(E::Int(1))));
                    (false, w)
                }
                _ => (false, Some(self.pred(&keep, 1))),
            };
            clauses.push(ClauseSpec::With { distinct, items, where_ });
            scope = next;
        }
        let mut items: Vec<E> = (0..arity).map(|_| self.item(&scope)).collect();
        if self.rng.gen_bool(0.25) {
            let i = self.rng.gen_range(0..arity);
            items[i] = self.agg(&scope);
        }
        let distinct = self.rng.gen_bool(0.2);
        let (order, limit) = if may_order && !self.cfg.simple && self.rng.gen_bool(0.15) {
            let o: Vec<(E, bool)> = items.iter().map(|e| (e.clone(), self.rng.gen())).collect();
            (o, Some(self.rng.gen_range(1..=2)))
        } else {
            (Vec::new(), None)
        };
        BranchSpec { clauses, distinct, items, order, limit }
    }
}

impl QuerySpec {
    pub fn random<R: Rng>(rng: &mut R, cfg: &GenConfig) -> QuerySpec {
        let mut b = Builder { rng, cfg, kinds: Vec::new() };
        let arity = b.rng.gen_range(1..=cfg.max_arity.max(1));
        let n = if b.rng.gen_bool(0.15) { 2 } else { 1 };
        let branches: Vec<BranchSpec> = (0..n).map(|_| b.branch(arity, n == 1)).collect();
        let union_all = (1..n).map(|_| b.rng.gen()).collect();
        QuerySpec { branches, union_all, kinds: b.kinds }
    }

    pub fn render(&self, r: &Render) -> String {
        let mut out = String::new();
        for (i, b) in self.branches.iter().enumerate() {
            if i > 0 {
                out.push_str(if self.union_all[i - 1] { " UNION ALL " } else { " UNION " });
            }
            self.branch(b, r, &mut out);
        }
        out
    }

    fn name(&self, v: usize, r: &Render) -> String {
        let (n, e, x) = if r.rename { ("a", "e", "u") } else { ("n", "r", "v") };
        let p = match self.kinds[v] {
            Kind::Node => n,
            Kind::Rel => e,
            Kind::Val => x,
        };
        format!("{p}{}", if r.rename { v + 7 } else { v })
    }

    fn branch(&self, b: &BranchSpec, r: &Render, out: &mut String) {
        let mut parts = Vec::new();
        for c in &b.clauses {
            let mut s = String::new();
            match c {
                ClauseSpec::Match(m) => {
                    s.push_str(if m.optional { "OPTIONAL MATCH " } else { "MATCH " });
                    let mut pats = Vec::new();
                    for p in &m.paths {
                        pats.extend(self.path(p, r));
                    }
                    s.push_str(&pats.join(", "));
                    if let Some(w) = &m.where_ {
                        let _ = write!(s, " WHERE {}", self.expr(w, r));
                    }
                }
                ClauseSpec::Unwind(list, x) => {
                    let l: Vec<String> = list.iter().map(i64::to_string).collect();
                    let _ = write!(s, "UNWIND [{}] AS {}", l.join(", "), self.name(*x, r));
                }
                ClauseSpec::With { distinct, items, where_ } => {
                    s.push_str(if *distinct { "WITH DISTINCT " } else { "WITH " });
                    let it: Vec<String> = items
                        .iter()
                        .map(|(e, v)| match e {
                            E::Var(w) if w == v => self.name(*v, r),
                            e => format!("{} AS {}", self.expr(e, r), self.name(*v, r)),
                        })
                        .collect();
                    s.push_str(&it.join(", "));
                    if let Some(w) = where_ {
                        let _ = write!(s, " WHERE {}", self.expr(w, r));
                    }
                }
            }
            parts.push(s);
        }
        let items: Vec<String> =
            b.items.iter().enumerate().map(|(j, e)| format!("{} AS c{j}", self.expr(e, r))).collect();
        let mut ret = format!("RETURN {}{}", if b.distinct { "DISTINCT " } else { "" }, items.join(", "));
        if !b.order.is_empty() {
            let o: Vec<String> = b
                .order
                .iter()
                .enumerate()
                .map(|(j, (_, desc))| format!("c{j}{}", if *desc { " DESC" } else { "" }))
                .collect();
            let _ = write!(ret, " ORDER BY {}", o.join(", "));
        }
        if let Some(l) = b.limit {
            let _ = write!(ret, " LIMIT {l}");
        }
        parts.push(ret);
        out.push_str(&parts.join(" "));
    }

    fn node(&self, n: &NodeSpec, r: &Render) -> String {
        let mut s = format!("({}", self.name(n.var, r));
        if let Some(l) = &n.label {
            let _ = write!(s, ":{l}");
        }
        if let Some((k, v)) = &n.prop {
            let _ = write!(s, " {{{k}: {v}}}");
        }
        s.push(')');
        s
    }

    fn rel(&self, h: &Hop, reversed: bool, r: &Render) -> (String, String) {
        let mut inner = String::new();
        if h.var != usize::MAX {
            inner.push_str(&self.name(h.var, r));
        }
        if let Some(l) = &h.label {
            let _ = write!(inner, ":{l}");
        }
        match h.range {
            Some((lo, Some(hi))) => {
                let _ = write!(inner, "*{lo}..{hi}");
            }
            Some((_, None)) => inner.push('*'),
            None => {}
        }
        let dir = match (h.dir, reversed) {
            (Dir::Both, _) => Dir::Both,
            (Dir::Right, false) | (Dir::Left, true) => Dir::Right,
            _ => Dir::Left,
        };
        match dir {
            Dir::Right => ("-[".into(), format!("{inner}]->")),
            Dir::Left => ("<-[".into(), format!("{inner}]-")),
            Dir::Both => ("-[".into(), format!("{inner}]-")),
        }
    }

    /// One or more pattern texts for a path.
    fn path(&self, p: &PathSpec, r: &Render) -> Vec<String> {
        let mut nodes = vec![&p.start];
        nodes.extend(p.hops.iter().map(|h| &h.to));
        let mut hops: Vec<&Hop> = p.hops.iter().collect();
        if r.reverse {
            nodes.reverse();
            hops.reverse();
        }
        let step = |i: usize| {
            let (a, b) = self.rel(hops[i], r.reverse, r);
            format!("{a}{b}")
        };
        if r.split && hops.len() > 1 {
            (0..hops.len())
                .map(|i| format!("{}{}{}", self.node(nodes[i], r), step(i), self.node(nodes[i + 1], r)))
                .collect()
        } else {
            let mut s = self.node(nodes[0], r);
            for i in 0..hops.len() {
                s.push_str(&step(i));
                s.push_str(&self.node(nodes[i + 1], r));
            }
            vec![s]
        }
    }

    fn expr(&self, e: &E, r: &Render) -> String {
        match e {
            E::Var(v) => self.name(*v, r),
            E::Prop(v, k) => format!("{}.{k}", self.name(*v, r)),
            E::Int(n) => n.to_string(),
            E::Cmp(op, a, b) => format!("{} {op} {}", self.expr(a, r), self.expr(b, r)),
            E::And(a, b) if r.commute => format!("({} AND {})", self.expr(b, r), self.expr(a, r)),
            E::And(a, b) => format!("({} AND {})", self.expr(a, r), self.expr(b, r)),
            E::Or(a, b) => format!("({} OR {})", self.expr(a, r), self.expr(b, r)),
            E::Not(a) => format!("NOT ({})", self.expr(a, r)),
            E::IsNull(a, not) => format!("{} IS {}NULL", self.expr(a, r), if *not { "NOT " } else { "" }),
            E::Agg(k, None) => format!("{k}(*)"),
            E::Agg(k, Some(a)) => format!("{k}({})", self.expr(a, r)),
            E::Func(f, xs) => {
                let a: Vec<String> = xs.iter().map(|x| self.expr(x, r)).collect();
                format!("{f}({})", a.join(", "))
            }
        }
    }
}

/// A random query that passes the frontend checks.
pub fn random_query<R: Rng>(rng: &mut R, cfg: &GenConfig) -> (String, Query) {
    loop {
        let spec = QuerySpec::random(rng, cfg);
        let text = spec.render(&Render::default());
        if let Ok(q) = parse_checked(&text) {
            return (text, q);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// Same query spelled differently; equivalent by construction.
    Rewrite,
    /// One mutation applied to the second query.
    Mutant,
    /// Two unrelated queries.
    Independent,
}

/// A random pair of query texts, both passing the frontend checks.
pub fn random_pair<R: Rng>(rng: &mut R, cfg: &GenConfig) -> (String, String, PairKind) {
    loop {
        let spec = QuerySpec::random(rng, cfg);
        let q1 = spec.render(&Render::default());
        let Ok(a) = parse_checked(&q1) else { continue };
        let kind = match rng.gen_range(0..10) {
            0..=3 => PairKind::Rewrite,
            4..=7 => PairKind::Mutant,
            _ => PairKind::Independent,
        };
        let q2 = match kind {
            PairKind::Rewrite => {
                let r = Render { rename: rng.gen(), reverse: rng.gen(), split: rng.gen(), commute: rng.gen() };
                spec.render(&r)
            }
            PairKind::Mutant => {
                let rule = *MutationRule::ALL.choose(rng).unwrap();
                match mutants(&a, rule).choose(rng) {
                    Some(m) => crate::frontend::print(m),
                    None => continue,
                }
            }
            PairKind::Independent => random_query(rng, cfg).0,
        };
        if parse_checked(&q2).is_ok() {
            return (q1, q2, kind);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn renderings_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ok = 0;
        for _ in 0..300 {
            let spec = QuerySpec::random(&mut rng, &GenConfig::default());
            let base = spec.render(&Render::default());
            if parse_checked(&base).is_err() {
                continue;
            }
            ok += 1;
            for r in [
                Render { rename: true, ..Render::default() },
                Render { reverse: true, ..Render::default() },
                Render { split: true, commute: true, ..Render::default() },
            ] {
                let t = spec.render(&r);
                assert!(parse_checked(&t).is_ok(), "{base}\n{t}\n{:?}", parse_checked(&t));
            }
        }
        assert!(ok > 200, "{ok}");
    }

    #[test]
    fn simple_queries_avoid_unbounded_paths_and_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let (t, _) = random_query(&mut rng, &GenConfig::simple());
            assert!(!t.contains("*]") && !t.contains("ORDER BY") && !t.contains("abs("), "{t}");
        }
    }

    #[test]
    fn split_and_reverse_spellings() {
        let spec = QuerySpec {
            branches: vec![BranchSpec {
                clauses: vec![ClauseSpec::Match(MatchSpec {
                    optional: false,
                    paths: vec![PathSpec {
                        start: NodeSpec { var: 0, label: Some("A".into()), prop: None },
                        hops: vec![
                            Hop {
                                var: 1,
                                label: None,
                                dir: Dir::Right,
                                range: None,
                                to: NodeSpec { var: 2, label: None, prop: None },
                            },
                            Hop {
                                var: 3,
                                label: None,
                                dir: Dir::Left,
                                range: None,
                                to: NodeSpec { var: 4, label: None, prop: None },
                            },
                        ],
                    }],
                    where_: None,
                })],
                distinct: false,
                items: vec![E::Var(0)],
                order: Vec::new(),
                limit: None,
            }],
            union_all: Vec::new(),
            kinds: vec![Kind::Node, Kind::Rel, Kind::Node, Kind::Rel, Kind::Node],
        };
        assert_eq!(spec.render(&Render::default()), "MATCH (n0:A)-[r1]->(n2)<-[r3]-(n4) RETURN n0 AS c0");
        assert_eq!(
            spec.render(&Render { reverse: true, ..Render::default() }),
            "MATCH (n4)-[r3]->(n2)<-[r1]-(n0:A) RETURN n0 AS c0"
        );
        assert_eq!(
            spec.render(&Render { split: true, ..Render::default() }),
            "MATCH (n0:A)-[r1]->(n2), (n2)<-[r3]-(n4) RETURN n0 AS c0"
        );
    }
}
