//! Rewriting of G-expressions into a canonical sum-of-products form.
//!
//! Every rewrite preserves the value of the expression on every graph and
//! tuple. Besides the pin elimination, predicate relocation, deduplication
//! and `[x ≡ x]` removal, the normal form distributes products over sums,
//! splits summations over `+`, pulls factors that do not mention the bound
//! variables out of a summation, merges nested summations, and names bound
//! variables canonically so that equal subterms print identically.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::*;
use crate::frontend::CmpOp;

/// Ids at or above this are not yet canonical.
const RAW: u32 = 1_000_000;
/// Above this many monomials a product is kept factored.
const MAX_MONOMIALS: usize = 512;
/// Above this many candidate namings a summation keeps its first one.
const MAX_NAMINGS: usize = 720;

pub fn simplify(g: &GExpr) -> GExpr {
    let g = relocate(g);
    let mut s = Simp { next: RAW };
    let g = s.rename_g(&g, &HashMap::new());
    let p = s.poly(&g);
    let g = from_poly(p);
    Canon::default().g(&g, 0)
}

#[derive(Debug, Clone)]
struct Mono {
    coef: u64,
    factors: Vec<GExpr>,
}

type Poly = Vec<Mono>;

fn one() -> Poly {
    vec![Mono { coef: 1, factors: Vec::new() }]
}

fn factor(g: GExpr) -> Poly {
    vec![Mono { coef: 1, factors: vec![g] }]
}

fn from_mono(m: Mono) -> GExpr {
    let mut xs = Vec::new();
    if m.coef != 1 {
        xs.push(GExpr::Nat(m.coef));
    }
    xs.extend(m.factors);
    GExpr::mul(xs)
}

fn from_poly(p: Poly) -> GExpr {
    let mut xs: Vec<GExpr> = p.into_iter().map(from_mono).collect();
    xs.sort_by_cached_key(|x| x.to_string());
    GExpr::add(xs)
}

/// Move factors that mention a variable bound by a sibling summation into it.
fn relocate(g: &GExpr) -> GExpr {
    match g {
        GExpr::Mul(xs) => {
            let mut xs: Vec<GExpr> = xs.iter().map(relocate).collect();
            let binders = |x: &GExpr| -> Option<BTreeSet<Var>> {
                match x {
                    GExpr::Sum(vs, _) => Some(vs.iter().copied().collect()),
                    GExpr::Squash(y) | GExpr::Not(y) => match &**y {
                        GExpr::Sum(vs, _) => Some(vs.iter().copied().collect()),
                        _ => None,
                    },
                    _ => None,
                }
            };
            let mut i = 0;
            while i < xs.len() {
                let fv = xs[i].free_vars();
                let target = (0..xs.len()).find(|&j| j != i && binders(&xs[j]).is_some_and(|b| !b.is_disjoint(&fv)));
                match target {
                    Some(j) => {
                        let f = xs.remove(i);
                        let j = if j > i { j - 1 } else { j };
                        push_into_sum(&mut xs[j], f);
                        i = 0;
                    }
                    None => i += 1,
                }
            }
            GExpr::Mul(xs)
        }
        GExpr::Add(xs) => GExpr::Add(xs.iter().map(relocate).collect()),
        GExpr::Squash(x) => GExpr::squash(relocate(x)),
        GExpr::Not(x) => GExpr::not(relocate(x)),
        GExpr::Sum(vs, b) => GExpr::Sum(vs.clone(), Box::new(relocate(b))),
        other => other.clone(),
    }
}

fn push_into_sum(target: &mut GExpr, f: GExpr) {
    match target {
        GExpr::Sum(_, body) => {
            let b = std::mem::replace(&mut **body, GExpr::One);
            **body = GExpr::mul(vec![b, f]);
        }
        GExpr::Squash(y) | GExpr::Not(y) => push_into_sum(y, f),
        _ => unreachable!("target has binders"),
    }
}

struct Simp {
    next: u32,
}

impl Simp {
    fn fresh(&mut self, v: Var) -> Var {
        self.next += 1;
        Var { id: self.next, ..v }
    }

    /// Copy with every binder renamed to a fresh id.
    fn rename_g(&mut self, g: &GExpr, m: &HashMap<Var, Var>) -> GExpr {
        match g {
            GExpr::Add(xs) => GExpr::Add(xs.iter().map(|x| self.rename_g(x, m)).collect()),
            GExpr::Mul(xs) => GExpr::Mul(xs.iter().map(|x| self.rename_g(x, m)).collect()),
            GExpr::Squash(x) => GExpr::squash(self.rename_g(x, m)),
            GExpr::Not(x) => GExpr::not(self.rename_g(x, m)),
            GExpr::Sum(vs, b) => {
                let mut m = m.clone();
                let nvs: Vec<Var> = vs
                    .iter()
                    .map(|v| {
                        let n = self.fresh(*v);
                        m.insert(*v, n);
                        n
                    })
                    .collect();
                GExpr::Sum(nvs, Box::new(self.rename_g(b, &m)))
            }
            _ => map_terms(g, &mut |t| self.rename_t(t, m)),
        }
    }

    fn rename_t(&mut self, t: &Term, m: &HashMap<Var, Var>) -> Term {
        match t {
            Term::Var(v) => Term::Var(*m.get(v).unwrap_or(v)),
            Term::Count(g) => Term::Count(Box::new(self.rename_g(g, m))),
            Term::Agg { kind, distinct, vars, body, arg } => {
                let mut m = m.clone();
                let nvs: Vec<Var> = vars
                    .iter()
                    .map(|v| {
                        let n = self.fresh(*v);
                        m.insert(*v, n);
                        n
                    })
                    .collect();
                Term::Agg {
                    kind: *kind,
                    distinct: *distinct,
                    vars: nvs,
                    body: Box::new(self.rename_g(body, &m)),
                    arg: Box::new(self.rename_t(arg, &m)),
                }
            }
            _ => map_subterms(t, &mut |x| self.rename_t(x, m)),
        }
    }

    fn poly(&mut self, g: &GExpr) -> Poly {
        match g {
            GExpr::Zero => Vec::new(),
            GExpr::One => one(),
            GExpr::Nat(0) => Vec::new(),
            GExpr::Nat(n) => vec![Mono { coef: *n, factors: Vec::new() }],
            GExpr::Add(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    out.extend(self.poly(x));
                }
                combine(out)
            }
            GExpr::Mul(xs) => {
                let mut acc = one();
                for x in xs {
                    let p = self.poly(x);
                    if p.is_empty() {
                        return Vec::new();
                    }
                    if acc.len() * p.len() > MAX_MONOMIALS {
                        // Keep the factor whole rather than expanding.
                        let whole = from_poly(p);
                        for m in &mut acc {
                            m.factors.push(whole.clone());
                        }
                        continue;
                    }
                    let mut next = Vec::with_capacity(acc.len() * p.len());
                    for a in &acc {
                        for b in &p {
                            let mut factors = a.factors.clone();
                            factors.extend(b.factors.iter().cloned());
                            next.push(Mono { coef: a.coef * b.coef, factors });
                        }
                    }
                    acc = next;
                }
                let mut out = Vec::new();
                for m in acc {
                    out.extend(self.finish(m));
                }
                combine(out)
            }
            GExpr::Squash(x) => {
                let p = self.poly(x);
                self.squash(p)
            }
            GExpr::Not(x) => {
                let p = self.poly(x);
                self.not(p)
            }
            GExpr::Bracket(a) => self.atom(a),
            GExpr::App(p) => {
                let p = match p {
                    Pred::Node(x) => Pred::Node(self.term(x)),
                    Pred::Rel(x) => Pred::Rel(self.term(x)),
                    Pred::Lab(x, l) => Pred::Lab(self.term(x), l.clone()),
                    Pred::Path(s, x) => Pred::Path(s.clone(), self.term(x)),
                    Pred::Overlap(x, y) => Pred::Overlap(self.term(x), self.term(y)),
                };
                match &p {
                    Pred::Node(Term::Nil)
                    | Pred::Rel(Term::Nil)
                    | Pred::Lab(Term::Nil, _)
                    | Pred::Path(_, Term::Nil) => Vec::new(),
                    _ => factor(GExpr::App(p)),
                }
            }
            GExpr::Sum(vs, b) => {
                let body = self.poly(b);
                let mut out = Vec::new();
                for m in body {
                    out.extend(self.sum_mono(vs.clone(), m));
                }
                combine(out)
            }
            GExpr::IntVal(t) => match self.term(t) {
                Term::Const(Value::Int(n)) if n > 0 => vec![Mono { coef: n as u64, factors: Vec::new() }],
                Term::Const(Value::Int(n)) if n < 0 => factor(GExpr::IntVal(Term::int(n))),
                Term::Const(_) => Vec::new(),
                t => factor(GExpr::IntVal(t)),
            },
            GExpr::Bag(i, ts) => factor(GExpr::Bag(*i, ts.iter().map(|t| self.term(t)).collect())),
        }
    }

    /// Normalize a product's factors: merge summations, dedup boolean factors.
    fn finish(&mut self, m: Mono) -> Poly {
        let mut sums: Vec<(Vec<Var>, Vec<GExpr>)> = Vec::new();
        let mut rest = Vec::new();
        for f in m.factors {
            match f {
                GExpr::Sum(vs, b) => sums.push((vs, flat_mul(*b))),
                GExpr::Zero => return Vec::new(),
                GExpr::One => {}
                f => rest.push(f),
            }
        }
        if sums.len() > 1 {
            // Σx A × Σy B = Σx,y A×B; rename apart in case of copies.
            let mut vars = Vec::new();
            let mut body = Vec::new();
            for (vs, b) in sums {
                let g = self.rename_g(&GExpr::Sum(vs, Box::new(GExpr::mul(b))), &HashMap::new());
                let GExpr::Sum(vs, b) = g else { unreachable!() };
                vars.extend(vs);
                body.extend(flat_mul(*b));
            }
            rest.extend(body);
            return self.sum_mono(vars, Mono { coef: m.coef, factors: rest });
        }
        if let Some((vs, b)) = sums.pop() {
            rest.push(GExpr::Sum(vs, Box::new(GExpr::mul(b))));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for f in rest {
            let key = f.to_string();
            if f.is_boolean() && !seen.insert(key) {
                continue;
            }
            out.push(f);
        }
        out.sort_by_cached_key(|f| f.to_string());
        vec![Mono { coef: m.coef, factors: out }]
    }

    fn sum_mono(&mut self, mut vars: Vec<Var>, m: Mono) -> Poly {
        let mut factors = Vec::new();
        for f in m.factors {
            match f {
                GExpr::Sum(ws, b) => {
                    vars.extend(ws);
                    factors.extend(flat_mul(*b));
                }
                f => factors.push(f),
            }
        }
        let bound: BTreeSet<Var> = vars.iter().copied().collect();
        // Pin elimination.
        for (i, f) in factors.iter().enumerate() {
            let Some((x, t, extra)) = pin(f, &bound) else { continue };
            let mut rest = factors.clone();
            rest.remove(i);
            if let Some(e) = extra {
                rest.push(e);
            }
            let rest: Vec<GExpr> = rest.iter().map(|g| subst_g(g, x, &t)).collect();
            let vars: Vec<Var> = vars.into_iter().filter(|v| *v != x).collect();
            let body = GExpr::mul(rest);
            let mut p = Vec::new();
            for mm in self.poly(&body) {
                p.extend(self.sum_mono(vars.clone(), mm));
            }
            return p.into_iter().map(|mm| Mono { coef: mm.coef * m.coef, factors: mm.factors }).collect();
        }
        // [a ≡ b] with `b` free of the binders: `a` may be replaced by `b`
        // in the other factors.
        if !vars.is_empty() {
            let mut changed = false;
            for i in 0..factors.len() {
                let GExpr::Bracket(Atom::Same(x, y)) = &factors[i] else { continue };
                let bound_in = |t: &Term| !t.free_vars().is_disjoint(&bound);
                let (from, to) = match (bound_in(x), bound_in(y)) {
                    (true, false) if !matches!(x, Term::Var(_)) => (x.clone(), y.clone()),
                    (false, true) if !matches!(y, Term::Var(_)) => (y.clone(), x.clone()),
                    _ => continue,
                };
                for (j, f) in factors.iter_mut().enumerate() {
                    if j != i {
                        let g = replace_term(f, &from, &to);
                        if g != *f {
                            *f = g;
                            changed = true;
                        }
                    }
                }
            }
            if changed {
                let body = GExpr::mul(factors);
                let mut p = Vec::new();
                for mm in self.poly(&body) {
                    p.extend(self.sum_mono(vars.clone(), mm));
                }
                return p.into_iter().map(|mm| Mono { coef: mm.coef * m.coef, factors: mm.factors }).collect();
            }
        }
        let mut outside = Vec::new();
        let mut inside = Vec::new();
        for f in factors {
            if f.free_vars().is_disjoint(&bound) {
                outside.push(f);
            } else {
                inside.push(f);
            }
        }
        if !vars.is_empty() {
            let mut seen = BTreeSet::new();
            inside.retain(|f| !f.is_boolean() || seen.insert(f.to_string()));
            inside.sort_by_cached_key(|f| f.to_string());
            outside.push(GExpr::Sum(vars, Box::new(GExpr::mul(inside))));
        } else {
            outside.extend(inside);
        }
        self.finish(Mono { coef: m.coef, factors: outside })
    }

    fn squash(&mut self, p: Poly) -> Poly {
        if p.is_empty() {
            return p;
        }
        if p.len() == 1 {
            let m = p.into_iter().next().unwrap();
            let (bools, others): (Vec<GExpr>, Vec<GExpr>) = m.factors.into_iter().partition(GExpr::is_boolean);
            let mut factors = bools;
            if !others.is_empty() {
                factors.push(GExpr::squash(GExpr::mul(others)));
            }
            return self.finish(Mono { coef: 1, factors });
        }
        match self.disjuncts(p) {
            None => one(),
            Some(ds) => factor(GExpr::squash(ds)),
        }
    }

    fn not(&mut self, p: Poly) -> Poly {
        if p.is_empty() {
            return one();
        }
        match self.disjuncts(p) {
            None => Vec::new(),
            Some(GExpr::Not(x)) => {
                // not(not(X)) = ‖X‖
                self.squash(vec![Mono { coef: 1, factors: vec![*x] }])
            }
            Some(ds) => factor(GExpr::not(ds)),
        }
    }

    /// Canonical argument of a squash or not; `None` when it is positive constant.
    fn disjuncts(&mut self, p: Poly) -> Option<GExpr> {
        let mut parts: BTreeMap<String, GExpr> = BTreeMap::new();
        for m in p {
            if m.factors.is_empty() {
                return None;
            }
            if let [GExpr::Squash(x)] = m.factors.as_slice() {
                for part in add_parts(x) {
                    parts.insert(part.to_string(), part);
                }
                continue;
            }
            let g = GExpr::mul(m.factors);
            parts.insert(g.to_string(), g);
        }
        Some(GExpr::add(parts.into_values().collect()))
    }

    fn atom(&mut self, a: &Atom) -> Poly {
        let t = |b: bool| if b { one() } else { Vec::new() };
        match a {
            Atom::Same(x, y) => {
                let (x, y) = (self.term(x), self.term(y));
                if x == y {
                    return one();
                }
                if let (Some(a), Some(b)) = (value_of(&x), value_of(&y)) {
                    return t(a == b);
                }
                let (x, y) = ordered(x, y);
                factor(GExpr::Bracket(Atom::Same(x, y)))
            }
            Atom::Cmp(op, x, y) => {
                let (x, y) = (self.term(x), self.term(y));
                if is_null_const(&x) || is_null_const(&y) {
                    return Vec::new();
                }
                if let (Some(a), Some(b)) = (value_of(&x), value_of(&y)) {
                    return t(cmp_values(*op, &a, &b) == Some(true));
                }
                let ent = x.sort() == Sort::Ent || y.sort() == Sort::Ent;
                if ent {
                    let both = x.sort() == Sort::Ent && y.sort() == Sort::Ent;
                    return match op {
                        CmpOp::Eq if both && x == y => factor(GExpr::Bracket(Atom::NotNull(x))),
                        CmpOp::Eq if !both && (is_const(&x) || is_const(&y)) => Vec::new(),
                        CmpOp::Ne if !both && is_const(&x) => self.atom(&Atom::NotNull(y)),
                        CmpOp::Ne if !both && is_const(&y) => self.atom(&Atom::NotNull(x)),
                        CmpOp::Eq | CmpOp::Ne => {
                            let (x, y) = ordered(x, y);
                            factor(GExpr::Bracket(Atom::Cmp(*op, x, y)))
                        }
                        _ => Vec::new(),
                    };
                }
                let (op, x, y) = match op {
                    CmpOp::Gt | CmpOp::Ge => (op.flip(), y, x),
                    CmpOp::Eq | CmpOp::Ne => {
                        let (x, y) = ordered(x, y);
                        (*op, x, y)
                    }
                    _ => (*op, x, y),
                };
                factor(GExpr::Bracket(Atom::Cmp(op, x, y)))
            }
            Atom::IsNull(x) => {
                let x = self.term(x);
                match null_status(&x) {
                    Some(b) => t(b),
                    None => factor(GExpr::Bracket(Atom::IsNull(x))),
                }
            }
            Atom::NotNull(x) => {
                let x = self.term(x);
                match null_status(&x) {
                    Some(b) => t(!b),
                    None => factor(GExpr::Bracket(Atom::NotNull(x))),
                }
            }
        }
    }

    fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::Prop(x, k) => match self.term(x) {
                Term::Nil => Term::Const(Value::Null),
                x => Term::Prop(Box::new(x), k.clone()),
            },
            Term::Count(g) => {
                let p = self.poly(g);
                if p.is_empty() {
                    return Term::int(0);
                }
                if let [Mono { coef, factors }] = p.as_slice() {
                    if factors.is_empty() {
                        return Term::int(*coef as i64);
                    }
                }
                Term::Count(Box::new(from_poly(p)))
            }
            Term::Agg { kind, distinct, vars, body, arg } => Term::Agg {
                kind: *kind,
                distinct: *distinct,
                vars: vars.clone(),
                body: Box::new(from_poly(self.poly(body))),
                arg: Box::new(self.term(arg)),
            },
            _ => map_subterms(t, &mut |x| self.term(x)),
        }
    }
}

/// Adjacent identical monomials merged into one with summed coefficient.
fn combine(p: Poly) -> Poly {
    let mut map: BTreeMap<String, Mono> = BTreeMap::new();
    for m in p {
        let key = GExpr::mul(m.factors.clone()).to_string();
        match map.get_mut(&key) {
            Some(e) => e.coef += m.coef,
            None => {
                map.insert(key, m);
            }
        }
    }
    map.into_values().collect()
}

fn flat_mul(g: GExpr) -> Vec<GExpr> {
    match g {
        GExpr::Mul(xs) => xs.into_iter().flat_map(flat_mul).collect(),
        GExpr::One => Vec::new(),
        g => vec![g],
    }
}

fn add_parts(g: &GExpr) -> Vec<GExpr> {
    match g {
        GExpr::Add(xs) => xs.iter().flat_map(add_parts).collect(),
        g => vec![g.clone()],
    }
}

/// A factor fixing a bound variable: `(x, t, extra factor)` with `x := t`.
fn pin(f: &GExpr, bound: &BTreeSet<Var>) -> Option<(Var, Term, Option<GExpr>)> {
    let GExpr::Bracket(a) = f else { return None };
    let try_pair = |x: &Term, y: &Term| -> Option<Var> {
        let Term::Var(v) = x else { return None };
        if !bound.contains(v) || v.sort != y.sort() || y.free_vars().contains(v) {
            return None;
        }
        Some(*v)
    };
    match a {
        Atom::Same(x, y) => {
            if let Some(v) = try_pair(x, y) {
                return Some((v, y.clone(), None));
            }
            try_pair(y, x).map(|v| (v, x.clone(), None))
        }
        Atom::Cmp(CmpOp::Eq, x, y) if x.sort() == Sort::Ent && y.sort() == Sort::Ent => {
            if let Some(v) = try_pair(x, y) {
                return Some((v, y.clone(), Some(GExpr::Bracket(Atom::NotNull(y.clone())))));
            }
            try_pair(y, x).map(|v| (v, x.clone(), Some(GExpr::Bracket(Atom::NotNull(x.clone())))))
        }
        _ => None,
    }
}

fn is_const(t: &Term) -> bool {
    matches!(t, Term::Const(_))
}

fn is_null_const(t: &Term) -> bool {
    matches!(t, Term::Const(Value::Null))
}

fn value_of(t: &Term) -> Option<Value> {
    match t {
        Term::Const(v) => Some(v.clone()),
        _ => None,
    }
}

fn null_status(t: &Term) -> Option<bool> {
    match t {
        Term::Const(v) => Some(v.is_null()),
        Term::Nil => Some(true),
        Term::Count(_) => Some(false),
        _ => None,
    }
}

pub(crate) fn cmp_values(op: CmpOp, a: &Value, b: &Value) -> Option<bool> {
    match op {
        CmpOp::Eq => a.cypher_eq(b),
        CmpOp::Ne => a.cypher_eq(b).map(|x| !x),
        CmpOp::Lt => a.cypher_cmp(b).map(|o| o.is_lt()),
        CmpOp::Le => a.cypher_cmp(b).map(|o| o.is_le()),
        CmpOp::Gt => a.cypher_cmp(b).map(|o| o.is_gt()),
        CmpOp::Ge => a.cypher_cmp(b).map(|o| o.is_ge()),
    }
}

/// Put the operands of a symmetric atom in print order.
fn orient(g: GExpr) -> GExpr {
    match g {
        GExpr::Bracket(Atom::Same(x, y)) => {
            let (x, y) = ordered(x, y);
            GExpr::Bracket(Atom::Same(x, y))
        }
        GExpr::Bracket(Atom::Cmp(op @ (CmpOp::Eq | CmpOp::Ne), x, y)) => {
            let (x, y) = ordered(x, y);
            GExpr::Bracket(Atom::Cmp(op, x, y))
        }
        g => g,
    }
}

fn ordered(x: Term, y: Term) -> (Term, Term) {
    if x.to_string() <= y.to_string() {
        (x, y)
    } else {
        (y, x)
    }
}

/// Replace every occurrence of the term `from` by `to`.
fn replace_term(g: &GExpr, from: &Term, to: &Term) -> GExpr {
    fn t(u: &Term, from: &Term, to: &Term) -> Term {
        if u == from {
            to.clone()
        } else {
            map_subterms(u, &mut |x| t(x, from, to))
        }
    }
    map_terms(g, &mut |u| t(u, from, to))
}

/// Apply `f` to the direct subterms of a term.
pub(crate) fn map_subterms(t: &Term, f: &mut dyn FnMut(&Term) -> Term) -> Term {
    match t {
        Term::Prop(x, k) => Term::Prop(Box::new(f(x)), k.clone()),
        Term::Src(x) => Term::Src(Box::new(f(x))),
        Term::Dst(x) => Term::Dst(Box::new(f(x))),
        Term::Func(n, xs) => Term::Func(n.clone(), xs.iter().map(|x| f(x)).collect()),
        other => other.clone(),
    }
}

/// Apply `f` to the terms directly inside an atom, predicate or leaf factor;
/// recurses through Add/Mul/Squash/Not/Sum.
pub(crate) fn map_terms(g: &GExpr, f: &mut dyn FnMut(&Term) -> Term) -> GExpr {
    match g {
        GExpr::Add(xs) => GExpr::Add(xs.iter().map(|x| map_terms(x, f)).collect()),
        GExpr::Mul(xs) => GExpr::Mul(xs.iter().map(|x| map_terms(x, f)).collect()),
        GExpr::Squash(x) => GExpr::squash(map_terms(x, f)),
        GExpr::Not(x) => GExpr::not(map_terms(x, f)),
        GExpr::Sum(vs, b) => GExpr::Sum(vs.clone(), Box::new(map_terms(b, f))),
        GExpr::Bracket(a) => GExpr::Bracket(match a {
            Atom::Cmp(op, x, y) => Atom::Cmp(*op, f(x), f(y)),
            Atom::Same(x, y) => Atom::Same(f(x), f(y)),
            Atom::IsNull(x) => Atom::IsNull(f(x)),
            Atom::NotNull(x) => Atom::NotNull(f(x)),
        }),
        GExpr::App(p) => GExpr::App(match p {
            Pred::Node(x) => Pred::Node(f(x)),
            Pred::Rel(x) => Pred::Rel(f(x)),
            Pred::Lab(x, l) => Pred::Lab(f(x), l.clone()),
            Pred::Path(s, x) => Pred::Path(s.clone(), f(x)),
            Pred::Overlap(x, y) => Pred::Overlap(f(x), f(y)),
        }),
        GExpr::IntVal(t) => GExpr::IntVal(f(t)),
        GExpr::Bag(i, ts) => GExpr::Bag(*i, ts.iter().map(|t| f(t)).collect()),
        GExpr::Zero | GExpr::One | GExpr::Nat(_) => g.clone(),
    }
}

/// Substitute `x := t`. Binders are assumed distinct from the variables of `t`.
pub(crate) fn subst_g(g: &GExpr, x: Var, t: &Term) -> GExpr {
    map_terms(g, &mut |u| subst_t(u, x, t))
}

pub(crate) fn subst_t(u: &Term, x: Var, t: &Term) -> Term {
    match u {
        Term::Var(v) if *v == x => t.clone(),
        Term::Count(g) => Term::Count(Box::new(subst_g(g, x, t))),
        Term::Agg { kind, distinct, vars, body, arg } => Term::Agg {
            kind: *kind,
            distinct: *distinct,
            vars: vars.clone(),
            body: Box::new(subst_g(body, x, t)),
            arg: Box::new(subst_t(arg, x, t)),
        },
        _ => map_subterms(u, &mut |y| subst_t(y, x, t)),
    }
}

/// Canonical naming of bound variables.
#[derive(Default)]
struct Canon;

impl Canon {
    fn g(&mut self, g: &GExpr, base: u32) -> GExpr {
        match g {
            GExpr::Add(xs) => {
                let mut ys: Vec<GExpr> = xs.iter().map(|x| self.g(x, base)).collect();
                ys.sort_by_cached_key(|y| y.to_string());
                GExpr::Add(ys)
            }
            GExpr::Mul(xs) => {
                let mut ys: Vec<GExpr> = xs.iter().map(|x| self.g(x, base)).collect();
                ys.sort_by_cached_key(|y| y.to_string());
                GExpr::Mul(ys)
            }
            GExpr::Squash(x) => GExpr::squash(self.g(x, base)),
            GExpr::Not(x) => GExpr::not(self.g(x, base)),
            GExpr::Sum(vs, b) => {
                let (nvs, nb, _) = self.binder(vs, &[(**b).clone()], base);
                GExpr::Sum(nvs, Box::new(nb.into_iter().next().unwrap()))
            }
            _ => orient(map_terms(g, &mut |t| self.t(t, base))),
        }
    }

    fn t(&mut self, t: &Term, base: u32) -> Term {
        match t {
            Term::Count(g) => Term::Count(Box::new(self.g(g, base))),
            Term::Agg { kind, distinct, vars, body, arg } => {
                // The argument rides along as a pseudo factor.
                let carrier = GExpr::IntVal((**arg).clone());
                let (nvs, mut parts, _) = self.binder(vars, &[(**body).clone(), carrier], base);
                let GExpr::IntVal(narg) = parts.pop().unwrap() else { unreachable!() };
                Term::Agg {
                    kind: *kind,
                    distinct: *distinct,
                    vars: nvs,
                    body: Box::new(parts.pop().unwrap()),
                    arg: Box::new(narg),
                }
            }
            _ => map_subterms(t, &mut |x| self.t(x, base)),
        }
    }

    /// Rename `vars` to `base+1..` choosing the naming with the smallest print.
    fn binder(&mut self, vars: &[Var], parts: &[GExpr], base: u32) -> (Vec<Var>, Vec<GExpr>, String) {
        let k = vars.len() as u32;
        // Order variables by a naming-independent signature first.
        let sig = |v: &Var| -> String {
            let mut names = HashMap::new();
            for w in vars {
                names.insert(*w, if w == v { "#".to_string() } else { "_".to_string() });
            }
            let mut fs: Vec<String> =
                parts.iter().flat_map(|p| flat_mul(p.clone())).map(|f| shape(&f, &names)).collect();
            fs.sort();
            format!("{}{}", if v.temp { "v" } else { "e" }, fs.join("×"))
        };
        let mut keyed: Vec<(String, Var)> = vars.iter().map(|v| (sig(v), *v)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        // Tie groups are resolved by trying their permutations.
        let mut groups: Vec<Vec<Var>> = Vec::new();
        for (i, (s, v)) in keyed.iter().enumerate() {
            if i > 0 && keyed[i - 1].0 == *s {
                groups.last_mut().unwrap().push(*v);
            } else {
                groups.push(vec![*v]);
            }
        }
        let mut orders: Vec<Vec<Var>> = vec![Vec::new()];
        for grp in &groups {
            let perms = permutations(grp);
            if orders.len() * perms.len() > MAX_NAMINGS {
                for o in &mut orders {
                    o.extend(grp.iter().copied());
                }
                continue;
            }
            let mut next = Vec::new();
            for o in &orders {
                for p in &perms {
                    let mut o = o.clone();
                    o.extend(p.iter().copied());
                    next.push(o);
                }
            }
            orders = next;
        }
        let mut best: Option<(String, Vec<Var>, Vec<GExpr>)> = None;
        for order in orders {
            let nvs: Vec<Var> = order.iter().enumerate().map(|(i, v)| Var { id: base + 1 + i as u32, ..*v }).collect();
            let mut ps = Vec::new();
            for p in parts {
                let mut q = p.clone();
                for (old, new) in order.iter().zip(&nvs) {
                    q = subst_g(&q, *old, &Term::Var(*new));
                }
                ps.push(self.g(&q, base + k));
            }
            let mut printed_vars = nvs.clone();
            printed_vars.sort();
            let key = format!(
                "{:?}|{}",
                printed_vars.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";")
            );
            if best.as_ref().is_none_or(|b| key < b.0) {
                best = Some((key, printed_vars, ps));
            }
        }
        let (key, nvs, ps) = best.expect("at least one naming");
        (nvs, ps, key)
    }
}

fn permutations(xs: &[Var]) -> Vec<Vec<Var>> {
    if xs.len() <= 1 {
        return vec![xs.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let mut rest = xs.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Print with the given variables renamed and raw bound variables hidden.
fn shape(g: &GExpr, names: &HashMap<Var, String>) -> String {
    let mut s = g.to_string();
    // Longest names first so `e1000012` is not clobbered by `e100001`.
    let mut all: Vec<(String, String)> = Vec::new();
    let mut vars = BTreeSet::new();
    visit_g(g, &mut |x| match x {
        Visit::G(GExpr::Sum(vs, _)) | Visit::T(Term::Agg { vars: vs, .. }) => vars.extend(vs.iter().copied()),
        Visit::T(Term::Var(v)) => {
            vars.insert(*v);
        }
        _ => {}
    });
    for v in vars {
        if let Some(n) = names.get(&v) {
            all.push((v.to_string(), n.clone()));
        } else if v.id >= RAW {
            all.push((v.to_string(), "_".into()));
        }
    }
    all.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
    for (from, to) in all {
        s = s.replace(&from, &to);
    }
    s
}
