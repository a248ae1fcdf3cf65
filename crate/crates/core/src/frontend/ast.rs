use std::fmt;
use std::hash::{Hash, Hasher};

/// Byte range in the source text.
///
/// Spans are carried for error reporting only: they compare equal and hash to
/// nothing, so two ASTs that differ only in source positions are equal.
#[derive(Clone, Copy, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Debug for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Single(SingleQuery),
    Union { left: Box<Query>, right: Box<Query>, all: bool },
}

impl Query {
    /// The single queries of a union tree, left to right.
    pub fn branches(&self) -> Vec<&SingleQuery> {
        let mut out = Vec::new();
        fn go<'a>(q: &'a Query, out: &mut Vec<&'a SingleQuery>) {
            match q {
                Query::Single(s) => out.push(s),
                Query::Union { left, right, .. } => {
                    go(left, out);
                    go(right, out);
                }
            }
        }
        go(self, &mut out);
        out
    }

    pub fn branches_mut(&mut self) -> Vec<&mut SingleQuery> {
        let mut out = Vec::new();
        fn go<'a>(q: &'a mut Query, out: &mut Vec<&'a mut SingleQuery>) {
            match q {
                Query::Single(s) => out.push(s),
                Query::Union { left, right, .. } => {
                    go(left, out);
                    go(right, out);
                }
            }
        }
        go(self, &mut out);
        out
    }

    pub fn is_union(&self) -> bool {
        matches!(self, Query::Union { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SingleQuery {
    pub clauses: Vec<Clause>,
    pub ret: Projection,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Clause {
    Match(MatchClause),
    With(Projection),
    Unwind(Unwind),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchClause {
    pub optional: bool,
    pub patterns: Vec<Pattern>,
    pub where_: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Unwind {
    pub expr: Expr,
    pub alias: String,
    pub span: Span,
}

/// Shared shape of WITH and RETURN. `where_` is only ever set on WITH.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Projection {
    pub distinct: bool,
    pub star: bool,
    pub items: Vec<ProjItem>,
    pub order_by: Vec<SortItem>,
    pub skip: Option<i64>,
    pub limit: Option<i64>,
    pub where_: Option<Expr>,
}

impl Projection {
    pub fn has_aggregate(&self) -> bool {
        self.items.iter().any(|i| i.expr.contains_aggregate())
    }

    /// True when the projection only renames or passes rows through.
    pub fn is_row_wise(&self) -> bool {
        !self.distinct
            && self.order_by.is_empty()
            && self.skip.is_none()
            && self.limit.is_none()
            && !self.has_aggregate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProjItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

impl ProjItem {
    /// Name under which the item is visible to later clauses, if any.
    pub fn output_name(&self) -> Option<&str> {
        match (&self.alias, &self.expr) {
            (Some(a), _) => Some(a),
            (None, Expr::Var(v, _)) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortItem {
    pub expr: Expr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub start: NodePat,
    pub chain: Vec<(RelPat, NodePat)>,
}

impl Pattern {
    pub fn nodes(&self) -> impl Iterator<Item = &NodePat> {
        std::iter::once(&self.start).chain(self.chain.iter().map(|(_, n)| n))
    }

    pub fn rels(&self) -> impl Iterator<Item = &RelPat> {
        self.chain.iter().map(|(r, _)| r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodePat {
    pub var: Option<String>,
    pub labels: Vec<String>,
    pub props: Vec<(String, Expr)>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `(a)-[]->(b)`
    Right,
    /// `(a)<-[]-(b)`
    Left,
    /// `(a)-[]-(b)`
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Range {
    pub min: u32,
    /// `None` means unbounded.
    pub max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelPat {
    pub var: Option<String>,
    /// Alternatives: the relationship must carry one of these labels.
    pub labels: Vec<String>,
    pub props: Vec<(String, Expr)>,
    pub dir: Direction,
    pub range: Option<Range>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// Operator with swapped operands: `a < b` iff `b > a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            o => o,
        }
    }

    /// Operator for the negated comparison on non-null operands.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggKind {
    Collect,
    Count,
    Sum,
    Max,
    Min,
    Avg,
}

impl AggKind {
    pub fn name(self) -> &'static str {
        match self {
            AggKind::Collect => "COLLECT",
            AggKind::Count => "COUNT",
            AggKind::Sum => "SUM",
            AggKind::Max => "MAX",
            AggKind::Min => "MIN",
            AggKind::Avg => "AVG",
        }
    }

    pub fn from_name(s: &str) -> Option<AggKind> {
        Some(match s.to_ascii_uppercase().as_str() {
            "COLLECT" => AggKind::Collect,
            "COUNT" => AggKind::Count,
            "SUM" => AggKind::Sum,
            "MAX" => AggKind::Max,
            "MIN" => AggKind::Min,
            "AVG" => AggKind::Avg,
            _ => return None,
        })
    }
}

/// Body of `EXISTS { ... }`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubQuery {
    pub clauses: Vec<Clause>,
    pub ret: Option<Projection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
    List(Vec<Expr>),
    Map(Vec<(String, Expr)>),
    Var(String, Span),
    Prop(Box<Expr>, String),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    /// `e IS NULL` (false) or `e IS NOT NULL` (true).
    IsNull(Box<Expr>, bool),
    Neg(Box<Expr>),
    Pos(Box<Expr>),
    Func(String, Vec<Expr>),
    /// `arg == None` is `COUNT(*)`.
    Agg {
        kind: AggKind,
        distinct: bool,
        arg: Option<Box<Expr>>,
    },
    Exists(Box<SubQuery>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string(), Span::default())
    }

    pub fn prop(var: &str, key: &str) -> Expr {
        Expr::Prop(Box::new(Expr::var(var)), key.to_string())
    }

    pub fn cmp(op: CmpOp, l: Expr, r: Expr) -> Expr {
        Expr::Cmp(op, Box::new(l), Box::new(r))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::And(Box::new(l), Box::new(r))
    }

    pub fn contains_aggregate(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Agg { .. }) {
                found = true;
            }
        });
        found
    }

    /// Pre-order walk that does not descend into EXISTS bodies.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::List(xs) | Expr::Func(_, xs) => xs.iter().for_each(|x| x.visit(f)),
            Expr::Map(kv) => kv.iter().for_each(|(_, x)| x.visit(f)),
            Expr::Prop(e, _) | Expr::Not(e) | Expr::IsNull(e, _) | Expr::Neg(e) | Expr::Pos(e) => e.visit(f),
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Agg { arg: Some(a), .. } => a.visit(f),
            _ => {}
        }
    }

    /// Mutable post-order rewrite, again not descending into EXISTS bodies.
    pub fn rewrite(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Expr::List(xs) | Expr::Func(_, xs) => xs.iter_mut().for_each(|x| x.rewrite(f)),
            Expr::Map(kv) => kv.iter_mut().for_each(|(_, x)| x.rewrite(f)),
            Expr::Prop(e, _) | Expr::Not(e) | Expr::IsNull(e, _) | Expr::Neg(e) | Expr::Pos(e) => e.rewrite(f),
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.rewrite(f);
                b.rewrite(f);
            }
            Expr::Agg { arg: Some(a), .. } => a.rewrite(f),
            _ => {}
        }
        f(self);
    }

    /// Split a conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            e => vec![e],
        }
    }

    pub fn conjoin(parts: Vec<Expr>) -> Option<Expr> {
        parts.into_iter().reduce(Expr::and)
    }

    pub fn is_literal(&self) -> bool {
        match self {
            Expr::Int(_) | Expr::Str(_) | Expr::Bool(_) | Expr::Null => true,
            Expr::List(xs) => xs.iter().all(Expr::is_literal),
            Expr::Map(kv) => kv.iter().all(|(_, x)| x.is_literal()),
            _ => false,
        }
    }
}
