//! G-expressions: U-semiring terms giving the multiplicity of a tuple `t` in
//! a query result over an unspecified property graph.
//!
//! `build` compiles a normalized query, `simplify` rewrites to a canonical
//! form, and `interpret` evaluates a term on a concrete graph.

mod agree;
mod build;
mod interpret;
mod simplify;

use std::collections::BTreeSet;
use std::fmt;

use crate::frontend::{AggKind, CmpOp, Direction};
use crate::oracle::Value;

pub use agree::{candidate_tuples, compare_multiplicities, Mismatch};
pub use build::{build, build_query, build_segment, BagInput, Column, ColumnType, Compiled, UnsupportedFeature};
pub use interpret::{interpret, NotInterpretable};
pub use simplify::simplify;
pub(crate) use simplify::{map_subterms, map_terms, subst_g};

/// Sort of a variable or term: graph entity (or the null entity) vs value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Ent,
    Val,
}

/// Summation variable. Pattern variables range over entities; temporaries
/// (`temp`) stand for projected values and are pinned by `[v ≡ x]` atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub id: u32,
    pub sort: Sort,
    pub temp: bool,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.temp {
            write!(f, "v{}", self.id)
        } else {
            write!(f, "e{}", self.id)
        }
    }
}

/// Signature of an unbounded variable-length relationship pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathSig {
    pub labels: Vec<String>,
    /// `Right` or `Both`; left-pointing paths are stored reversed.
    pub dir: Direction,
    pub min: u32,
    pub props: Vec<(String, Value)>,
}

impl fmt::Display for PathSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.labels.join("|"))?;
        write!(f, "*{}{}", self.min, if self.dir == Direction::Both { "-" } else { ">" })?;
        for (k, v) in &self.props {
            write!(f, ",{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    /// Column `i` of the result tuple.
    Col(usize, Sort),
    /// The null entity bound by an unmatched OPTIONAL MATCH.
    Nil,
    Const(Value),
    Prop(Box<Term>, String),
    /// Source node of a relationship (`in(r)`).
    Src(Box<Term>),
    /// Target node of a relationship (`out(r)`).
    Dst(Box<Term>),
    /// Uninterpreted built-in function.
    Func(String, Vec<Term>),
    /// Integer value of a G-expression (COUNT, SUM).
    Count(Box<GExpr>),
    /// Aggregate left uninterpreted by the solver encoding.
    Agg {
        kind: AggKind,
        distinct: bool,
        vars: Vec<Var>,
        body: Box<GExpr>,
        arg: Box<Term>,
    },
    Limit,
    Skip,
}

impl Term {
    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort,
            Term::Col(_, s) => *s,
            Term::Nil | Term::Src(_) | Term::Dst(_) => Sort::Ent,
            _ => Sort::Val,
        }
    }

    pub fn int(n: i64) -> Term {
        Term::Const(Value::Int(n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    /// Cypher comparison; false when the comparison is null.
    Cmp(CmpOp, Term, Term),
    /// Identity, with null equal to null. Used for projection and grouping.
    Same(Term, Term),
    IsNull(Term),
    NotNull(Term),
}

/// Uninterpreted predicates over entities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pred {
    Node(Term),
    Rel(Term),
    Lab(Term, String),
    /// Entity standing for one path of an unbounded variable-length pattern.
    Path(PathSig, Term),
    /// A relationship or path shares a relationship with another path.
    Overlap(Term, Term),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GExpr {
    Zero,
    One,
    Nat(u64),
    Add(Vec<GExpr>),
    Mul(Vec<GExpr>),
    Squash(Box<GExpr>),
    Not(Box<GExpr>),
    Bracket(Atom),
    App(Pred),
    Sum(Vec<Var>, Box<GExpr>),
    /// Integer value of a term, 0 unless it is an integer.
    IntVal(Term),
    /// Multiplicity of a row in the output of an earlier query segment.
    Bag(usize, Vec<Term>),
}

impl GExpr {
    pub fn add(mut xs: Vec<GExpr>) -> GExpr {
        xs.retain(|x| *x != GExpr::Zero);
        match xs.len() {
            0 => GExpr::Zero,
            1 => xs.pop().unwrap(),
            _ => GExpr::Add(xs),
        }
    }

    pub fn mul(mut xs: Vec<GExpr>) -> GExpr {
        if xs.contains(&GExpr::Zero) {
            return GExpr::Zero;
        }
        xs.retain(|x| *x != GExpr::One);
        match xs.len() {
            0 => GExpr::One,
            1 => xs.pop().unwrap(),
            _ => GExpr::Mul(xs),
        }
    }

    pub fn sum(vars: Vec<Var>, body: GExpr) -> GExpr {
        if vars.is_empty() || body == GExpr::Zero {
            body
        } else {
            GExpr::Sum(vars, Box::new(body))
        }
    }

    pub fn squash(x: GExpr) -> GExpr {
        GExpr::Squash(Box::new(x))
    }

    pub fn not(x: GExpr) -> GExpr {
        GExpr::Not(Box::new(x))
    }

    pub fn same(a: Term, b: Term) -> GExpr {
        GExpr::Bracket(Atom::Same(a, b))
    }

    /// True when the value is always 0 or 1.
    pub fn is_boolean(&self) -> bool {
        match self {
            GExpr::Zero | GExpr::One | GExpr::Squash(_) | GExpr::Not(_) | GExpr::Bracket(_) | GExpr::App(_) => true,
            GExpr::Mul(xs) => xs.iter().all(GExpr::is_boolean),
            _ => false,
        }
    }

    /// Variables occurring free.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        fv_g(self, &mut out);
        out
    }

    /// Whether the expression contains a construct `interpret` rejects.
    pub fn is_simple(&self) -> bool {
        let mut ok = true;
        visit_g(self, &mut |x| match x {
            Visit::G(GExpr::Bag(..) | GExpr::App(Pred::Path(..) | Pred::Overlap(..))) => ok = false,
            Visit::T(Term::Func(..) | Term::Limit | Term::Skip) => ok = false,
            _ => {}
        });
        ok
    }
}

/// Node met by [`visit_g`].
pub(crate) enum Visit<'a> {
    G(&'a GExpr),
    T(&'a Term),
}

/// Pre-order walk over every G-expression and term, including binders' bodies.
pub(crate) fn visit_g<'a>(g: &'a GExpr, f: &mut dyn FnMut(Visit<'a>)) {
    f(Visit::G(g));
    match g {
        GExpr::Add(xs) | GExpr::Mul(xs) => xs.iter().for_each(|x| visit_g(x, f)),
        GExpr::Squash(x) | GExpr::Not(x) | GExpr::Sum(_, x) => visit_g(x, f),
        GExpr::Bracket(a) => match a {
            Atom::Cmp(_, x, y) | Atom::Same(x, y) => {
                visit_t(x, f);
                visit_t(y, f);
            }
            Atom::IsNull(x) | Atom::NotNull(x) => visit_t(x, f),
        },
        GExpr::App(p) => match p {
            Pred::Node(x) | Pred::Rel(x) | Pred::Lab(x, _) | Pred::Path(_, x) => visit_t(x, f),
            Pred::Overlap(x, y) => {
                visit_t(x, f);
                visit_t(y, f);
            }
        },
        GExpr::IntVal(t) => visit_t(t, f),
        GExpr::Bag(_, ts) => ts.iter().for_each(|t| visit_t(t, f)),
        GExpr::Zero | GExpr::One | GExpr::Nat(_) => {}
    }
}

pub(crate) fn visit_t<'a>(t: &'a Term, f: &mut dyn FnMut(Visit<'a>)) {
    f(Visit::T(t));
    match t {
        Term::Prop(x, _) | Term::Src(x) | Term::Dst(x) => visit_t(x, f),
        Term::Func(_, xs) => xs.iter().for_each(|x| visit_t(x, f)),
        Term::Count(g) => visit_g(g, f),
        Term::Agg { body, arg, .. } => {
            visit_g(body, f);
            visit_t(arg, f);
        }
        _ => {}
    }
}

fn fv_g(g: &GExpr, out: &mut BTreeSet<Var>) {
    match g {
        GExpr::Add(xs) | GExpr::Mul(xs) => xs.iter().for_each(|x| fv_g(x, out)),
        GExpr::Squash(x) | GExpr::Not(x) => fv_g(x, out),
        GExpr::Sum(vs, x) => {
            let mut inner = BTreeSet::new();
            fv_g(x, &mut inner);
            for v in vs {
                inner.remove(v);
            }
            out.extend(inner);
        }
        GExpr::Bracket(a) => match a {
            Atom::Cmp(_, x, y) | Atom::Same(x, y) => {
                fv_t(x, out);
                fv_t(y, out);
            }
            Atom::IsNull(x) | Atom::NotNull(x) => fv_t(x, out),
        },
        GExpr::App(p) => match p {
            Pred::Node(x) | Pred::Rel(x) | Pred::Lab(x, _) | Pred::Path(_, x) => fv_t(x, out),
            Pred::Overlap(x, y) => {
                fv_t(x, out);
                fv_t(y, out);
            }
        },
        GExpr::IntVal(t) => fv_t(t, out),
        GExpr::Bag(_, ts) => ts.iter().for_each(|t| fv_t(t, out)),
        GExpr::Zero | GExpr::One | GExpr::Nat(_) => {}
    }
}

pub(crate) fn fv_t(t: &Term, out: &mut BTreeSet<Var>) {
    match t {
        Term::Var(v) => {
            out.insert(*v);
        }
        Term::Prop(x, _) | Term::Src(x) | Term::Dst(x) => fv_t(x, out),
        Term::Func(_, xs) => xs.iter().for_each(|x| fv_t(x, out)),
        Term::Count(g) => fv_g(g, out),
        Term::Agg { vars, body, arg, .. } => {
            let mut inner = BTreeSet::new();
            fv_g(body, &mut inner);
            fv_t(arg, &mut inner);
            for v in vars {
                inner.remove(v);
            }
            out.extend(inner);
        }
        _ => {}
    }
}

impl Term {
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        fv_t(self, &mut out);
        out
    }
}

fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T], sep: &str) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Col(i, _) => write!(f, "t.{i}"),
            Term::Nil => f.write_str("nil"),
            Term::Const(v) => write!(f, "{v}"),
            Term::Prop(x, k) => write!(f, "{x}.{k}"),
            Term::Src(x) => write!(f, "in({x})"),
            Term::Dst(x) => write!(f, "out({x})"),
            Term::Func(n, xs) => {
                write!(f, "{n}(")?;
                list(f, xs, ",")?;
                f.write_str(")")
            }
            Term::Count(g) => write!(f, "#({g})"),
            Term::Agg { kind, distinct, vars, body, arg } => {
                write!(f, "{}{}[", kind.name(), if *distinct { "_DISTINCT" } else { "" })?;
                list(f, vars, ",")?;
                write!(f, "]({body}; {arg})")
            }
            Term::Limit => f.write_str("limit"),
            Term::Skip => f.write_str("skip"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Cmp(op, a, b) => write!(f, "[{a} {} {b}]", op.symbol()),
            Atom::Same(a, b) => write!(f, "[{a} ≡ {b}]"),
            Atom::IsNull(a) => write!(f, "[{a} is null]"),
            Atom::NotNull(a) => write!(f, "[{a} is not null]"),
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Node(x) => write!(f, "Node({x})"),
            Pred::Rel(x) => write!(f, "Rel({x})"),
            Pred::Lab(x, l) => write!(f, "Lab({x},{l})"),
            Pred::Path(s, x) => write!(f, "UNBOUNDED[{s}]({x})"),
            Pred::Overlap(x, y) => write!(f, "overlap({x},{y})"),
        }
    }
}

impl fmt::Display for GExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GExpr::Zero => f.write_str("0"),
            GExpr::One => f.write_str("1"),
            GExpr::Nat(n) => write!(f, "{n}"),
            GExpr::Add(xs) => {
                f.write_str("(")?;
                list(f, xs, " + ")?;
                f.write_str(")")
            }
            GExpr::Mul(xs) => list(f, xs, "×"),
            GExpr::Squash(x) => write!(f, "‖{x}‖"),
            GExpr::Not(x) => write!(f, "not({x})"),
            GExpr::Bracket(a) => write!(f, "{a}"),
            GExpr::App(p) => write!(f, "{p}"),
            GExpr::Sum(vs, body) => {
                f.write_str("Σ[")?;
                list(f, vs, ",")?;
                write!(f, "]({body})")
            }
            GExpr::IntVal(t) => write!(f, "val({t})"),
            GExpr::Bag(i, ts) => {
                write!(f, "W{i}(")?;
                list(f, ts, ",")?;
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests;
