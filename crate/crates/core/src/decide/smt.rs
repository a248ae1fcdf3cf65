//! SMT-LIB 2 encoding of an equivalence (or non-emptiness) obligation.
//!
//! Entities are an uninterpreted sort `E` with a null entity `nil`; values
//! are a datatype with one constructor per runtime kind. Summations are
//! replaced by integer variables:
//!
//! * a closed summation becomes a constant `s<k>`, shared by every occurrence
//!   with the same canonical print;
//! * closed summations over the same binder sorts and weight are tied
//!   together by generator vectors: for each nonzero `u` in `{0,1}^m` a
//!   multiplier `λ_u ≥ 0`, and `λ_u > 0` forces a Skolem witness whose
//!   guards evaluate to `u`;
//! * a summation with free variables becomes an uninterpreted integer
//!   function of them, constrained only at the ground applications met.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use crate::frontend::CmpOp;
use crate::gexpr::{subst_g, Atom, GExpr, Pred, Sort, Term, Var};
use crate::oracle::Value;

/// Largest group of summations encoded with a full generator set.
const GENERATOR_CAP: usize = 7;
/// Bound on witness instantiations for summations with free variables.
const NESTED_CAP: usize = 4_000;
/// Placeholder ids for the parameters of a summation with free variables.
const PARAM: u32 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub text: String,
    /// Where the encoding over-approximates; a satisfiable answer is then
    /// inconclusive on its own.
    pub approximations: Vec<String>,
}

/// Script asserting `∃t. g1(t) ≠ g2(t)`, `columns` giving the sort of each
/// `t.i`.
pub fn eliminate_summations(g1: &GExpr, g2: &GExpr, columns: &[Sort]) -> SmtScript {
    let mut e = Enc::default();
    e.prepare(&[g1, g2]);
    let a = e.int(g1, &HashMap::new());
    let b = e.int(g2, &HashMap::new());
    e.asserts.push(format!("(not (= {a} {b}))"));
    e.finish(columns)
}

/// Script asserting `∃t. g(t) > 0`.
pub fn nonempty_script(g: &GExpr, columns: &[Sort]) -> SmtScript {
    let mut e = Enc::default();
    e.prepare(&[g]);
    let a = e.int(g, &HashMap::new());
    e.asserts.push(format!("(> {a} 0)"));
    e.finish(columns)
}

type Env = HashMap<Var, String>;

struct Closed {
    sym: String,
    vars: Vec<Var>,
    body: GExpr,
}

struct Nested {
    sym: String,
    params: Vec<Var>,
    vars: Vec<Var>,
    body: GExpr,
    nonneg: bool,
}

#[derive(Default)]
struct Enc {
    decls: Vec<String>,
    asserts: Vec<String>,
    symbols: HashMap<String, String>,
    closed: Vec<Closed>,
    closed_by_key: HashMap<String, usize>,
    nested: Vec<Nested>,
    nested_by_key: HashMap<String, usize>,
    pending: Vec<(usize, Vec<String>)>,
    apps: HashSet<String>,
    bags: BTreeSet<String>,
    others: BTreeMap<Value, usize>,
    fresh: usize,
    approximations: BTreeSet<String>,
}

fn is_nonneg(g: &GExpr) -> bool {
    match g {
        GExpr::IntVal(_) => false,
        GExpr::Add(xs) | GExpr::Mul(xs) => xs.iter().all(is_nonneg),
        GExpr::Sum(_, b) => is_nonneg(b),
        _ => true,
    }
}

fn factors(g: &GExpr) -> Vec<&GExpr> {
    match g {
        GExpr::Mul(xs) => xs.iter().flat_map(factors).collect(),
        GExpr::One => Vec::new(),
        g => vec![g],
    }
}

fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::Ent => "E",
        Sort::Val => "Val",
    }
}

fn sorts_key(vs: &[Var]) -> String {
    vs.iter().map(|v| if v.sort == Sort::Ent { 'E' } else { 'V' }).collect()
}

/// Rename binders to `1..=k`, the form shared by every closed occurrence.
fn rebase(vs: &[Var], body: &GExpr) -> (Vec<Var>, GExpr) {
    let mut b = body.clone();
    let mut nvs = Vec::new();
    // Through high ids first so that no rename captures another binder.
    let tmp: Vec<Var> = vs.iter().enumerate().map(|(i, v)| Var { id: PARAM * 2 + i as u32, ..*v }).collect();
    for (v, t) in vs.iter().zip(&tmp) {
        b = subst_g(&b, *v, &Term::Var(*t));
    }
    for (i, t) in tmp.iter().enumerate() {
        let n = Var { id: i as u32 + 1, ..*t };
        b = subst_g(&b, *t, &Term::Var(n));
        nvs.push(n);
    }
    (nvs, b)
}

fn smt_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\"\""),
            ' '..='~' if c != '\\' => out.push(c),
            c => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
        }
    }
    out.push('"');
    out
}

fn and(xs: Vec<String>) -> String {
    match xs.len() {
        0 => "true".into(),
        1 => xs.into_iter().next().unwrap(),
        _ => format!("(and {})", xs.join(" ")),
    }
}

impl Enc {
    fn declare(&mut self, key: String, make: impl FnOnce(&str) -> String, prefix: &str) -> String {
        if let Some(s) = self.symbols.get(&key) {
            return s.clone();
        }
        let sym = format!("{prefix}{}", self.symbols.len());
        self.decls.push(make(&sym));
        self.symbols.insert(key, sym.clone());
        sym
    }

    fn fresh_const(&mut self, prefix: &str, sort: &str) -> String {
        self.fresh += 1;
        let sym = format!("{prefix}!{}", self.fresh);
        self.decls.push(format!("(declare-const {sym} {sort})"));
        sym
    }

    /// Register every closed summation so that they can be grouped.
    fn prepare(&mut self, gs: &[&GExpr]) {
        for g in gs {
            crate::gexpr::visit_g(g, &mut |x| {
                if let crate::gexpr::Visit::G(s @ GExpr::Sum(vs, body)) = x {
                    if s.free_vars().is_empty() {
                        self.closed_sum(vs, body);
                    }
                }
            });
        }
    }

    fn closed_sum(&mut self, vs: &[Var], body: &GExpr) -> String {
        let (vs, body) = rebase(vs, body);
        let key = format!("{}|{}", sorts_key(&vs), GExpr::Sum(vs.clone(), Box::new(body.clone())));
        if let Some(&i) = self.closed_by_key.get(&key) {
            return self.closed[i].sym.clone();
        }
        let sym = format!("s{}", self.closed.len());
        self.closed_by_key.insert(key, self.closed.len());
        self.closed.push(Closed { sym: sym.clone(), vars: vs, body });
        sym
    }

    fn nested_sum(&mut self, vs: &[Var], body: &GExpr, env: &Env) -> String {
        let g = GExpr::Sum(vs.to_vec(), Box::new(body.clone()));
        let params: Vec<Var> = g.free_vars().into_iter().collect();
        let mut abstracted = g.clone();
        for (i, p) in params.iter().enumerate() {
            abstracted = subst_g(&abstracted, *p, &Term::Var(Var { id: PARAM + i as u32, ..*p }));
        }
        let key = format!("{}|{}|{abstracted}", sorts_key(&params), sorts_key(vs));
        let idx = match self.nested_by_key.get(&key) {
            Some(&i) => i,
            None => {
                let sym = format!("n{}", self.nested.len());
                let args: Vec<&str> = params.iter().map(|p| sort_name(p.sort)).collect();
                self.decls.push(format!("(declare-fun {sym} ({}) Int)", args.join(" ")));
                self.nested_by_key.insert(key, self.nested.len());
                self.nested.push(Nested {
                    sym,
                    params: params.clone(),
                    vars: vs.to_vec(),
                    body: body.clone(),
                    nonneg: is_nonneg(body),
                });
                self.nested.len() - 1
            }
        };
        let args: Vec<String> = params.iter().map(|p| env[p].clone()).collect();
        let app = format!("({} {})", self.nested[idx].sym, args.join(" "));
        if self.apps.insert(app.clone()) {
            self.pending.push((idx, args));
        }
        app
    }

    fn int(&mut self, g: &GExpr, env: &Env) -> String {
        match g {
            GExpr::Zero => "0".into(),
            GExpr::One => "1".into(),
            GExpr::Nat(n) => n.to_string(),
            GExpr::Add(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| self.int(x, env)).collect();
                format!("(+ {})", parts.join(" "))
            }
            GExpr::Mul(xs) => {
                let mut bools = Vec::new();
                let mut ints = Vec::new();
                for x in xs {
                    if x.is_boolean() {
                        bools.push(self.boolean(x, env));
                    } else {
                        ints.push(self.int(x, env));
                    }
                }
                let prod = match ints.len() {
                    0 => "1".to_string(),
                    1 => ints.pop().unwrap(),
                    _ => format!("(* {})", ints.join(" ")),
                };
                if bools.is_empty() {
                    prod
                } else {
                    format!("(ite {} {prod} 0)", and(bools))
                }
            }
            GExpr::Squash(_) | GExpr::Not(_) | GExpr::Bracket(_) | GExpr::App(_) => {
                format!("(ite {} 1 0)", self.boolean(g, env))
            }
            GExpr::Sum(vs, body) => {
                if g.free_vars().is_empty() {
                    self.closed_sum(vs, body)
                } else {
                    self.nested_sum(vs, body, env)
                }
            }
            GExpr::IntVal(t) => {
                let x = self.val(t, env);
                format!("(ite ((_ is vint) {x}) (vi {x}) 0)")
            }
            GExpr::Bag(id, ts) => {
                let mut sorts = Vec::new();
                let mut args = Vec::new();
                for t in ts {
                    let (s, k) = self.term(t, env);
                    sorts.push(sort_name(k));
                    args.push(s);
                }
                let sym = self.declare(
                    format!("bag:{id}:{}", sorts.join(",")),
                    |s| format!("(declare-fun {s} ({}) Int)", sorts.join(" ")),
                    &format!("w{id}_"),
                );
                let app = format!("({sym} {})", args.join(" "));
                self.bags.insert(app.clone());
                app
            }
        }
    }

    fn boolean(&mut self, g: &GExpr, env: &Env) -> String {
        match g {
            GExpr::One => "true".into(),
            GExpr::Zero => "false".into(),
            GExpr::Squash(x) if x.is_boolean() => self.boolean(x, env),
            GExpr::Squash(x) => format!("(> {} 0)", self.int(x, env)),
            GExpr::Not(x) if x.is_boolean() => format!("(not {})", self.boolean(x, env)),
            GExpr::Not(x) => format!("(= {} 0)", self.int(x, env)),
            GExpr::Mul(xs) if g.is_boolean() => {
                let parts = xs.iter().map(|x| self.boolean(x, env)).collect();
                and(parts)
            }
            GExpr::Bracket(a) => self.atom(a, env),
            GExpr::App(p) => self.pred(p, env),
            g => format!("(> {} 0)", self.int(g, env)),
        }
    }

    fn atom(&mut self, a: &Atom, env: &Env) -> String {
        match a {
            Atom::Cmp(op, x, y) => {
                let (xs, xk) = self.term(x, env);
                let (ys, yk) = self.term(y, env);
                if xk == Sort::Ent && yk == Sort::Ent {
                    let nn = format!("(not (= {xs} nil)) (not (= {ys} nil))");
                    return match op {
                        CmpOp::Eq => format!("(and {nn} (= {xs} {ys}))"),
                        CmpOp::Ne => format!("(and {nn} (not (= {xs} {ys})))"),
                        _ => "false".into(),
                    };
                }
                let xs = lift(xs, xk);
                let ys = lift(ys, yk);
                match op {
                    CmpOp::Eq => format!("(veq {xs} {ys})"),
                    CmpOp::Ne => format!("(vne {xs} {ys})"),
                    CmpOp::Lt => format!("(vlt {xs} {ys})"),
                    CmpOp::Le => format!("(vle {xs} {ys})"),
                    CmpOp::Gt => format!("(vlt {ys} {xs})"),
                    CmpOp::Ge => format!("(vle {ys} {xs})"),
                }
            }
            Atom::Same(x, y) => {
                let (xs, xk) = self.term(x, env);
                let (ys, yk) = self.term(y, env);
                if xk == yk {
                    format!("(= {xs} {ys})")
                } else {
                    format!("(= {} {})", lift(xs, xk), lift(ys, yk))
                }
            }
            Atom::IsNull(x) => self.null_test(x, env),
            Atom::NotNull(x) => format!("(not {})", self.null_test(x, env)),
        }
    }

    fn null_test(&mut self, x: &Term, env: &Env) -> String {
        match self.term(x, env) {
            (s, Sort::Ent) => format!("(= {s} nil)"),
            (s, Sort::Val) => format!("(= {s} vnull)"),
        }
    }

    fn pred(&mut self, p: &Pred, env: &Env) -> String {
        match p {
            Pred::Node(x) => format!("(node {})", self.ent(x, env)),
            Pred::Rel(x) => format!("(rel {})", self.ent(x, env)),
            Pred::Lab(x, l) => {
                let sym = self.declare(
                    format!("lab:{l}"),
                    |s| format!("(declare-fun {s} (E) Bool)\n(assert (not ({s} nil)))"),
                    "lab",
                );
                format!("({sym} {})", self.ent(x, env))
            }
            Pred::Path(sig, x) => {
                let sym = self.declare(format!("path:{sig}"), |s| format!("(declare-fun {s} (E) Bool)"), "path");
                format!("({sym} {})", self.ent(x, env))
            }
            Pred::Overlap(x, y) => {
                let sym = self.declare("overlap".into(), |s| format!("(declare-fun {s} (E E) Bool)"), "ov");
                format!("({sym} {} {})", self.ent(x, env), self.ent(y, env))
            }
        }
    }

    fn ent(&mut self, t: &Term, env: &Env) -> String {
        match self.term(t, env) {
            (s, Sort::Ent) => s,
            (s, Sort::Val) => format!("(ite ((_ is vent) {s}) (ve {s}) nil)"),
        }
    }

    fn val(&mut self, t: &Term, env: &Env) -> String {
        let (s, k) = self.term(t, env);
        lift(s, k)
    }

    fn term(&mut self, t: &Term, env: &Env) -> (String, Sort) {
        match t {
            Term::Var(v) => (env.get(v).unwrap_or_else(|| panic!("unbound {v}")).clone(), v.sort),
            Term::Col(i, s) => (format!("t{i}"), *s),
            Term::Nil => ("nil".into(), Sort::Ent),
            Term::Const(v) => (self.constant(v), Sort::Val),
            Term::Prop(x, k) => {
                let (xs, xk) = self.term(x, env);
                let sym = match xk {
                    Sort::Ent => self.declare(
                        format!("prop:{k}"),
                        |s| format!("(declare-fun {s} (E) Val)\n(assert (= ({s} nil) vnull))"),
                        "p",
                    ),
                    Sort::Val => self.declare(
                        format!("vprop:{k}"),
                        |s| format!("(declare-fun {s} (Val) Val)\n(assert (= ({s} vnull) vnull))"),
                        "vp",
                    ),
                };
                (format!("({sym} {xs})"), Sort::Val)
            }
            Term::Src(x) => (format!("(src {})", self.ent(x, env)), Sort::Ent),
            Term::Dst(x) => (format!("(dst {})", self.ent(x, env)), Sort::Ent),
            Term::Func(name, xs) => {
                let mut sorts = Vec::new();
                let mut args = Vec::new();
                for x in xs {
                    let (s, k) = self.term(x, env);
                    sorts.push(sort_name(k));
                    args.push(s);
                }
                let sym = self.declare(
                    format!("fn:{name}:{}", sorts.join(",")),
                    |s| format!("(declare-fun {s} ({}) Val)", sorts.join(" ")),
                    "f",
                );
                if args.is_empty() {
                    (sym, Sort::Val)
                } else {
                    (format!("({sym} {})", args.join(" ")), Sort::Val)
                }
            }
            Term::Count(g) => (format!("(vint {})", self.int(g, env)), Sort::Val),
            Term::Agg { .. } => {
                let params: Vec<Var> = t.free_vars().into_iter().collect();
                let mut abstracted = GExpr::IntVal(t.clone());
                for (i, p) in params.iter().enumerate() {
                    abstracted = subst_g(&abstracted, *p, &Term::Var(Var { id: PARAM + i as u32, ..*p }));
                }
                let sorts: Vec<&str> = params.iter().map(|p| sort_name(p.sort)).collect();
                let sym = self.declare(
                    format!("agg:{}|{abstracted}", sorts_key(&params)),
                    |s| format!("(declare-fun {s} ({}) Val)", sorts.join(" ")),
                    "a",
                );
                if params.is_empty() {
                    (sym, Sort::Val)
                } else {
                    let args: Vec<String> = params.iter().map(|p| env[p].clone()).collect();
                    (format!("({sym} {})", args.join(" ")), Sort::Val)
                }
            }
            Term::Limit => ("limit".into(), Sort::Val),
            Term::Skip => ("skip".into(), Sort::Val),
        }
    }

    fn constant(&mut self, v: &Value) -> String {
        match v {
            Value::Int(n) if *n < 0 => format!("(vint (- {}))", n.unsigned_abs()),
            Value::Int(n) => format!("(vint {n})"),
            Value::Str(s) => format!("(vstr {})", smt_string(s)),
            Value::Bool(b) => format!("(vbool {b})"),
            Value::Null => "vnull".into(),
            other => {
                let n = self.others.len();
                let k = *self.others.entry(other.clone()).or_insert(n);
                format!("(vother {k})")
            }
        }
    }

    /// Skolem constants for `vars`, extending `env`.
    fn skolems(&mut self, vars: &[Var], env: &mut Env) {
        for v in vars {
            let c = self.fresh_const("x", sort_name(v.sort));
            env.insert(*v, c);
        }
    }

    /// Generator constraints for the closed summations.
    fn generators(&mut self) {
        let mut groups: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
        let mut signed = Vec::new();
        for (i, c) in self.closed.iter().enumerate() {
            if !is_nonneg(&c.body) {
                signed.push(i);
                continue;
            }
            let weight: Vec<String> =
                factors(&c.body).into_iter().filter(|f| !f.is_boolean()).map(|f| f.to_string()).collect();
            groups.entry((sorts_key(&c.vars), weight.join("×"))).or_default().push(i);
        }
        for i in signed {
            let (sym, vars, body) = {
                let c = &self.closed[i];
                (c.sym.clone(), c.vars.clone(), c.body.clone())
            };
            self.decls.push(format!("(declare-const {sym} Int)"));
            let mut env = Env::new();
            self.skolems(&vars, &mut env);
            let b = self.int(&body, &env);
            self.asserts.push(format!("(=> (not (= {sym} 0)) (not (= {b} 0)))"));
        }
        for (_, members) in groups {
            if members.len() > GENERATOR_CAP {
                self.approximations.insert(format!(
                    "{} summations over one binder shape split into groups of {GENERATOR_CAP}",
                    members.len()
                ));
            }
            for chunk in members.chunks(GENERATOR_CAP) {
                self.generator_group(chunk);
            }
        }
    }

    fn generator_group(&mut self, members: &[usize]) {
        let vars = self.closed[members[0]].vars.clone();
        let mut guards: Vec<GExpr> = Vec::new();
        let mut weight: Vec<GExpr> = Vec::new();
        for (j, &i) in members.iter().enumerate() {
            let fs = factors(&self.closed[i].body);
            guards.push(GExpr::mul(fs.iter().filter(|f| f.is_boolean()).map(|f| (*f).clone()).collect()));
            if j == 0 {
                weight = fs.iter().filter(|f| !f.is_boolean()).map(|f| (*f).clone()).collect();
            }
            let sym = self.closed[i].sym.clone();
            self.decls.push(format!("(declare-const {sym} Int)"));
        }
        let m = members.len();
        let mut parts: Vec<Vec<String>> = vec![Vec::new(); m];
        for u in 1u32..(1 << m) {
            let lam = self.fresh_const("lambda", "Int");
            self.asserts.push(format!("(>= {lam} 0)"));
            // Members agree on binder sorts but may differ in the temp flag,
            // so each gets its own map onto the shared witnesses.
            let mut env0 = Env::new();
            self.skolems(&vars, &mut env0);
            let consts: Vec<String> = vars.iter().map(|v| env0[v].clone()).collect();
            let envs: Vec<Env> = members
                .iter()
                .map(|&i| self.closed[i].vars.iter().copied().zip(consts.iter().cloned()).collect())
                .collect();
            let mut conds = Vec::new();
            for (j, g) in guards.iter().enumerate() {
                let b = self.boolean(g, &envs[j]);
                if u & (1 << j) != 0 {
                    conds.push(b);
                    parts[j].push(lam.clone());
                } else {
                    conds.push(format!("(not {b})"));
                }
            }
            if !weight.is_empty() {
                let w = self.int(&GExpr::mul(weight.clone()), &envs[0]);
                conds.push(format!("(> {w} 0)"));
            }
            self.asserts.push(format!("(=> (> {lam} 0) {})", and(conds)));
        }
        for (j, &i) in members.iter().enumerate() {
            let sum = match parts[j].len() {
                0 => "0".to_string(),
                1 => parts[j][0].clone(),
                _ => format!("(+ {})", parts[j].join(" ")),
            };
            self.asserts.push(format!("(= {} {sum})", self.closed[i].sym));
        }
    }

    /// Constraints for ground applications of non-closed summations.
    fn nested_witnesses(&mut self) {
        let mut done = 0;
        while let Some((idx, args)) = self.pending.pop() {
            let n = &self.nested[idx];
            let app = format!("({} {})", n.sym, args.join(" "));
            let (params, vars, body, nonneg) = (n.params.clone(), n.vars.clone(), n.body.clone(), n.nonneg);
            if nonneg {
                self.asserts.push(format!("(>= {app} 0)"));
            }
            done += 1;
            if done > NESTED_CAP {
                self.approximations.insert("witness budget for nested summations exhausted".into());
                continue;
            }
            let mut env: Env = params.iter().copied().zip(args).collect();
            self.skolems(&vars, &mut env);
            let b = self.int(&body, &env);
            if nonneg {
                self.asserts.push(format!("(=> (> {app} 0) (> {b} 0))"));
            } else {
                self.asserts.push(format!("(=> (not (= {app} 0)) (not (= {b} 0)))"));
            }
        }
        if !self.nested.is_empty() {
            self.approximations.insert("summations with free variables are uninterpreted".into());
        }
    }

    fn finish(mut self, columns: &[Sort]) -> SmtScript {
        let closed_before = self.closed.len();
        self.generators();
        // Bodies can mention closed summations not met by `prepare` only if
        // they were created while encoding, which `prepare` rules out.
        debug_assert_eq!(closed_before, self.closed.len());
        self.nested_witnesses();
        for b in std::mem::take(&mut self.bags) {
            self.asserts.push(format!("(>= {b} 0)"));
        }
        if !self.symbols.keys().all(|k| !k.starts_with("fn:")) {
            self.approximations.insert("built-in functions are uninterpreted".into());
        }
        if self.symbols.keys().any(|k| k.starts_with("agg:")) {
            self.approximations.insert("aggregates other than COUNT and SUM are uninterpreted".into());
        }
        if self.symbols.keys().any(|k| k.starts_with("path:")) {
            self.approximations.insert("arbitrary-length paths are uninterpreted".into());
        }
        // A relationship carries exactly one type.
        let mut labs: Vec<&String> =
            self.symbols.iter().filter(|(k, _)| k.starts_with("lab:")).map(|(_, s)| s).collect();
        labs.sort();
        for (i, a) in labs.iter().enumerate() {
            for b in &labs[i + 1..] {
                self.asserts.push(format!(
                    "(forall ((e E)) (! (=> (and (rel e) ({a} e)) (not ({b} e))) :pattern (({a} e) ({b} e))))"
                ));
            }
        }
        let mut text = String::from(PRELUDE);
        for (i, s) in columns.iter().enumerate() {
            let _ = writeln!(text, "(declare-const t{i} {})", sort_name(*s));
        }
        for d in &self.decls {
            text.push_str(d);
            text.push('\n');
        }
        for a in &self.asserts {
            let _ = writeln!(text, "(assert {a})");
        }
        text.push_str("(check-sat)\n");
        SmtScript { text, approximations: self.approximations.into_iter().collect() }
    }
}

fn lift(s: String, k: Sort) -> String {
    match k {
        Sort::Val => s,
        Sort::Ent => format!("(ev {s})"),
    }
}

const PRELUDE: &str = "\
(set-logic ALL)
(declare-sort E 0)
(declare-datatypes ((Val 0)) (((vnull) (vint (vi Int)) (vstr (vs String)) (vbool (vb Bool)) (vent (ve E)) (vother (vo Int)))))
(declare-const nil E)
(declare-fun kind (E) Int)
(assert (= (kind nil) 0))
(define-fun node ((x E)) Bool (= (kind x) 1))
(define-fun rel ((x E)) Bool (= (kind x) 2))
(declare-fun src (E) E)
(declare-fun dst (E) E)
(define-fun ev ((x E)) Val (ite (= x nil) vnull (vent x)))
(declare-fun oeq (Int Int) Bool)
(declare-fun one (Int Int) Bool)
(define-fun nonnull ((a Val) (b Val)) Bool (and (not (= a vnull)) (not (= b vnull))))
(define-fun others ((a Val) (b Val)) Bool (and ((_ is vother) a) ((_ is vother) b)))
(define-fun veq ((a Val) (b Val)) Bool (and (nonnull a b) (ite (others a b) (oeq (vo a) (vo b)) (= a b))))
(define-fun vne ((a Val) (b Val)) Bool (and (nonnull a b) (ite (others a b) (one (vo a) (vo b)) (not (= a b)))))
(define-fun vlt ((a Val) (b Val)) Bool (or (and ((_ is vint) a) ((_ is vint) b) (< (vi a) (vi b))) (and ((_ is vstr) a) ((_ is vstr) b) (str.< (vs a) (vs b)))))
(define-fun vle ((a Val) (b Val)) Bool (or (and ((_ is vint) a) ((_ is vint) b) (<= (vi a) (vi b))) (and ((_ is vstr) a) ((_ is vstr) b) (str.<= (vs a) (vs b)))))
(declare-const limit Val)
(declare-const skip Val)
";
