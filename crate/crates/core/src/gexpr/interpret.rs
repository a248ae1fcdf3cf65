//! Concrete evaluation of a G-expression on a property graph.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::simplify::cmp_values;
use super::*;
use crate::oracle::{aggregate, PropertyGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not interpretable: {0}")]
pub struct NotInterpretable(pub String);

type R<T> = Result<T, NotInterpretable>;

fn refuse<T>(what: impl Into<String>) -> R<T> {
    Err(NotInterpretable(what.into()))
}

/// Multiplicity `g(t)` on `graph`. Entity variables range over the nodes and
/// relationships plus null; value temporaries over the values their pins
/// produce.
pub fn interpret(g: &GExpr, graph: &PropertyGraph, t: &[Value]) -> R<u64> {
    let mut universe: Vec<Value> = graph.nodes.iter().map(|n| Value::Node(n.id)).collect();
    universe.extend(graph.rels.iter().map(|r| Value::Rel(r.id)));
    universe.push(Value::Null);
    let it = Interp { graph, t, universe, resolving: RefCell::default() };
    let n = it.g(g, &mut Env::new())?;
    u64::try_from(n).map_err(|_| NotInterpretable(format!("negative multiplicity {n}")))
}

type Env = HashMap<Var, Value>;

struct Interp<'a> {
    graph: &'a PropertyGraph,
    t: &'a [Value],
    universe: Vec<Value>,
    resolving: RefCell<Vec<Var>>,
}

fn factors(g: &GExpr) -> Vec<&GExpr> {
    match g {
        GExpr::Mul(xs) => xs.iter().flat_map(factors).collect(),
        g => vec![g],
    }
}

impl Interp<'_> {
    fn g(&self, g: &GExpr, env: &mut Env) -> R<i128> {
        Ok(match g {
            GExpr::Zero => 0,
            GExpr::One => 1,
            GExpr::Nat(n) => *n as i128,
            GExpr::Add(xs) => {
                let mut s = 0;
                for x in xs {
                    s += self.g(x, env)?;
                }
                s
            }
            GExpr::Mul(xs) => {
                let mut p = 1;
                for x in xs {
                    p *= self.g(x, env)?;
                    if p == 0 {
                        break;
                    }
                }
                p
            }
            GExpr::Squash(x) => (self.g(x, env)? > 0) as i128,
            GExpr::Not(x) => (self.g(x, env)? == 0) as i128,
            GExpr::Bracket(a) => self.atom(a, env)? as i128,
            GExpr::App(p) => self.pred(p, env)? as i128,
            GExpr::Sum(vs, body) => {
                let mut total = 0;
                self.each(vs, body, env, &mut |_, w| {
                    total += w;
                    Ok(())
                })?;
                total
            }
            GExpr::IntVal(t) => match self.term(t, env)? {
                Value::Int(n) => n as i128,
                _ => 0,
            },
            GExpr::Bag(..) => return refuse("segment input bag"),
        })
    }

    /// Call `f` with every assignment of `vars` and its nonzero body value.
    fn each(&self, vars: &[Var], body: &GExpr, env: &mut Env, f: &mut dyn FnMut(&Env, i128) -> R<()>) -> R<()> {
        // Entity variables first so temporaries see their pins' inputs.
        let mut order: Vec<Var> = vars.iter().copied().filter(|v| !v.temp).collect();
        order.extend(vars.iter().copied().filter(|v| v.temp));
        let fs = factors(body);
        let pos: HashMap<Var, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut ready: Vec<Vec<&GExpr>> = vec![Vec::new(); order.len() + 1];
        for x in &fs {
            let level = x.free_vars().iter().filter_map(|v| pos.get(v)).map(|i| i + 1).max().unwrap_or(0);
            ready[level].push(x);
        }
        let mut w = 1;
        for x in &ready[0] {
            w *= self.g(x, env)?;
            if w == 0 {
                return Ok(());
            }
        }
        self.level(&order, &ready, &fs, 0, w, env, f)
    }

    #[allow(clippy::too_many_arguments)]
    fn level(
        &self,
        order: &[Var],
        ready: &[Vec<&GExpr>],
        all: &[&GExpr],
        i: usize,
        w: i128,
        env: &mut Env,
        f: &mut dyn FnMut(&Env, i128) -> R<()>,
    ) -> R<()> {
        if i == order.len() {
            return f(env, w);
        }
        let v = order[i];
        let domain: Vec<Value> = if v.temp { self.candidates(v, all, env)? } else { self.universe.clone() };
        let prev = env.remove(&v);
        for val in domain {
            env.insert(v, val);
            let mut w2 = w;
            for x in &ready[i + 1] {
                w2 *= self.g(x, env)?;
                if w2 == 0 {
                    break;
                }
            }
            if w2 != 0 {
                self.level(order, ready, all, i + 1, w2, env, f)?;
            }
        }
        env.remove(&v);
        if let Some(p) = prev {
            env.insert(v, p);
        }
        Ok(())
    }

    /// Values a temporary can take: those of the terms it is pinned to.
    fn candidates(&self, v: Var, scope: &[&GExpr], env: &mut Env) -> R<Vec<Value>> {
        if v.sort == Sort::Ent {
            return Ok(self.universe.clone());
        }
        let mut pins = Vec::new();
        let mut binders: HashMap<Var, Vec<GExpr>> = HashMap::new();
        for x in scope {
            collect_pins(x, v, &mut pins, &mut binders);
        }
        // A pin back to a temporary still being resolved adds no values.
        let open = self.resolving.borrow().clone();
        pins.retain(|p| !p.free_vars().iter().any(|w| open.contains(w)));
        if pins.is_empty() {
            return refuse(format!("temporary {v} has no pin"));
        }
        self.resolving.borrow_mut().push(v);
        let mut out = BTreeSet::new();
        let r = pins.iter().try_for_each(|p| self.values_of(p, &binders, env, &mut out));
        self.resolving.borrow_mut().pop();
        r?;
        Ok(out.into_iter().collect())
    }

    /// All values of `t` over assignments of its unassigned variables.
    fn values_of(
        &self,
        t: &Term,
        binders: &HashMap<Var, Vec<GExpr>>,
        env: &mut Env,
        out: &mut BTreeSet<Value>,
    ) -> R<()> {
        let free: Vec<Var> = t.free_vars().into_iter().filter(|v| !env.contains_key(v)).collect();
        let Some((&v, _)) = free.split_first() else {
            out.insert(self.term(t, env)?);
            return Ok(());
        };
        let domain = if v.temp {
            let scope: Vec<&GExpr> = binders.get(&v).map(|b| b.iter().collect()).unwrap_or_default();
            self.candidates(v, &scope, env)?
        } else {
            self.universe.clone()
        };
        for val in domain {
            env.insert(v, val);
            self.values_of(t, binders, env, out)?;
        }
        env.remove(&v);
        Ok(())
    }

    fn atom(&self, a: &Atom, env: &mut Env) -> R<bool> {
        Ok(match a {
            Atom::Cmp(op, x, y) => {
                let (x, y) = (self.term(x, env)?, self.term(y, env)?);
                cmp_values(*op, &x, &y) == Some(true)
            }
            Atom::Same(x, y) => self.term(x, env)? == self.term(y, env)?,
            Atom::IsNull(x) => self.term(x, env)?.is_null(),
            Atom::NotNull(x) => !self.term(x, env)?.is_null(),
        })
    }

    fn pred(&self, p: &Pred, env: &mut Env) -> R<bool> {
        Ok(match p {
            Pred::Node(x) => matches!(self.term(x, env)?, Value::Node(_)),
            Pred::Rel(x) => matches!(self.term(x, env)?, Value::Rel(_)),
            Pred::Lab(x, l) => match self.term(x, env)? {
                Value::Node(id) => self.graph.node(id).is_some_and(|n| n.labels.contains(l)),
                Value::Rel(id) => self.graph.rel(id).is_some_and(|r| r.label == *l),
                _ => false,
            },
            Pred::Path(..) => return refuse("UNBOUNDED"),
            Pred::Overlap(..) => return refuse("path overlap"),
        })
    }

    fn term(&self, t: &Term, env: &mut Env) -> R<Value> {
        Ok(match t {
            Term::Var(v) => match env.get(v) {
                Some(x) => x.clone(),
                None => return refuse(format!("free variable {v}")),
            },
            Term::Col(i, _) => match self.t.get(*i) {
                Some(x) => x.clone(),
                None => return refuse(format!("tuple has no column {i}")),
            },
            Term::Nil => Value::Null,
            Term::Const(v) => v.clone(),
            Term::Prop(x, k) => match self.term(x, env)? {
                Value::Node(id) => self.graph.node(id).and_then(|n| n.props.get(k)).cloned().unwrap_or(Value::Null),
                Value::Rel(id) => self.graph.rel(id).and_then(|r| r.props.get(k)).cloned().unwrap_or(Value::Null),
                Value::Map(m) => m.get(k).cloned().unwrap_or(Value::Null),
                _ => Value::Null,
            },
            Term::Src(x) => match self.term(x, env)? {
                Value::Rel(id) => self.graph.rel(id).map_or(Value::Null, |r| Value::Node(r.src)),
                _ => Value::Null,
            },
            Term::Dst(x) => match self.term(x, env)? {
                Value::Rel(id) => self.graph.rel(id).map_or(Value::Null, |r| Value::Node(r.dst)),
                _ => Value::Null,
            },
            Term::Func(name, _) => return refuse(format!("built-in function {name}")),
            Term::Count(g) => {
                let n = self.g(g, env)?;
                Value::Int(i64::try_from(n).map_err(|_| NotInterpretable("count overflow".into()))?)
            }
            Term::Agg { kind, distinct, vars, body, arg } => {
                let mut vals = Vec::new();
                self.each(vars, body, env, &mut |e, w| {
                    let mut e = e.clone();
                    let v = self.term(arg, &mut e)?;
                    if !v.is_null() {
                        for _ in 0..w {
                            vals.push(v.clone());
                        }
                    }
                    Ok(())
                })?;
                if *distinct {
                    let mut seen = BTreeSet::new();
                    vals.retain(|v| seen.insert(v.clone()));
                }
                aggregate(*kind, vals)
            }
            Term::Limit | Term::Skip => return refuse("ORDER BY/LIMIT/SKIP tag"),
        })
    }
}

/// Terms `x` with `[v ≡ x]` somewhere under `g`, and the bodies of the
/// summations met on the way (for temporaries occurring in those terms).
fn collect_pins(g: &GExpr, v: Var, pins: &mut Vec<Term>, binders: &mut HashMap<Var, Vec<GExpr>>) {
    visit_g(g, &mut |x| match x {
        Visit::G(GExpr::Bracket(Atom::Same(a, b))) => {
            for (p, q) in [(a, b), (b, a)] {
                if *p == Term::Var(v) && !q.free_vars().contains(&v) {
                    pins.push(q.clone());
                }
            }
        }
        Visit::G(GExpr::Sum(vs, body)) | Visit::T(Term::Agg { vars: vs, body, .. }) => {
            for w in vs {
                binders.entry(*w).or_default().extend(factors(body).into_iter().cloned());
            }
        }
        _ => {}
    });
}
