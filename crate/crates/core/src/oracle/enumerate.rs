use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::graph::{Node, PropertyGraph, Rel};
use super::value::Value;
use crate::frontend::*;

/// Size limits and alphabets for generated graphs. Relationship types are
/// drawn from the same label alphabet as node labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub max_nodes: usize,
    pub max_rels: usize,
    pub labels: Vec<String>,
    pub keys: Vec<String>,
    pub values: Vec<Value>,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_nodes: 3,
            max_rels: 3,
            labels: vec!["A".into(), "B".into()],
            keys: vec!["k".into(), "p".into()],
            values: vec![Value::Int(0), Value::Int(1), Value::Int(2)],
        }
    }
}

impl Bounds {
    /// Alphabets taken from the labels, keys and constants the queries mention.
    ///
    /// Each integer constant `c` contributes `c` and `c + 1` so that strict and
    /// non-strict comparisons can be told apart.
    pub fn for_queries(qs: &[&Query], max_nodes: usize, max_rels: usize) -> Bounds {
        let mut v = Vocab::default();
        for q in qs {
            for s in q.branches() {
                v.single(s);
            }
        }
        let mut labels: Vec<String> = v.labels.into_iter().collect();
        if labels.is_empty() {
            labels.push("A".into());
        }
        let keys: Vec<String> = v.keys.into_iter().collect();
        let mut values: BTreeSet<Value> = BTreeSet::new();
        for c in v.values {
            if let Value::Int(n) = c {
                if let Some(m) = n.checked_add(1) {
                    values.insert(Value::Int(m));
                }
            }
            values.insert(c);
        }
        if values.is_empty() {
            values.insert(Value::Int(0));
            values.insert(Value::Int(1));
        }
        Bounds { max_nodes, max_rels, labels, keys, values: values.into_iter().collect() }
    }

    fn node_decorations(&self) -> usize {
        (1usize << self.labels.len()) * self.prop_choices()
    }

    fn prop_choices(&self) -> usize {
        (self.values.len() + 1).pow(self.keys.len() as u32)
    }

    fn props(&self, mut code: usize) -> BTreeMap<String, Value> {
        let base = self.values.len() + 1;
        let mut out = BTreeMap::new();
        for k in &self.keys {
            let c = code % base;
            code /= base;
            if c > 0 {
                out.insert(k.clone(), self.values[c - 1].clone());
            }
        }
        out
    }

    fn node(&self, id: u32, deco: usize) -> Node {
        let nl = 1usize << self.labels.len();
        let mask = deco % nl;
        let labels = (0..self.labels.len()).filter(|i| mask & (1 << i) != 0).map(|i| self.labels[i].clone()).collect();
        Node { id, labels, props: self.props(deco / nl) }
    }

    fn rel(&self, id: u32, n: usize, deco: usize) -> Rel {
        let (src, dst, label, props) = self.split_rel(n, deco);
        Rel { id, src: src as u32, dst: dst as u32, label: self.labels[label].clone(), props: self.props(props) }
    }

    fn rel_decorations(&self, n: usize) -> usize {
        n * n * self.labels.len() * self.prop_choices()
    }

    fn split_rel(&self, n: usize, deco: usize) -> (usize, usize, usize, usize) {
        let p = self.prop_choices();
        let l = self.labels.len();
        let props = deco % p;
        let rest = deco / p;
        let label = rest % l;
        let rest = rest / l;
        (rest / n, rest % n, label, props)
    }

    fn join_rel(&self, n: usize, src: usize, dst: usize, label: usize, props: usize) -> usize {
        ((src * n + dst) * self.labels.len() + label) * self.prop_choices() + props
    }

    fn build(&self, nodes: &[usize], rels: &[usize]) -> PropertyGraph {
        let n = nodes.len();
        PropertyGraph {
            nodes: nodes.iter().enumerate().map(|(i, &d)| self.node(i as u32, d)).collect(),
            rels: rels.iter().enumerate().map(|(i, &d)| self.rel(i as u32, n, d)).collect(),
        }
    }

    /// True when `rels` is the least sorted relationship list among all node
    /// renamings that keep the (sorted) node decoration sequence fixed.
    fn is_canonical(&self, nodes: &[usize], rels: &[usize]) -> bool {
        let n = nodes.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut image = Vec::with_capacity(rels.len());
        loop {
            if !next_block_permutation(&mut perm, nodes) {
                return true;
            }
            image.clear();
            for &r in rels {
                let (s, d, l, p) = self.split_rel(n, r);
                image.push(self.join_rel(n, perm[s], perm[d], l, p));
            }
            image.sort_unstable();
            if image.as_slice() < rels {
                return false;
            }
        }
    }
}

/// Advance `perm` to the next permutation that only moves nodes among equal
/// decorations. Returns false once every such permutation has been visited.
fn next_block_permutation(perm: &mut [usize], decos: &[usize]) -> bool {
    let n = perm.len();
    let mut start = 0;
    let mut blocks = Vec::new();
    while start < n {
        let mut end = start + 1;
        while end < n && decos[end] == decos[start] {
            end += 1;
        }
        blocks.push((start, end));
        start = end;
    }
    // Odometer over blocks, least significant block last.
    for &(s, e) in blocks.iter().rev() {
        if next_permutation(&mut perm[s..e]) {
            return true;
        }
        // Wrapped around: block is back to sorted order, carry on.
    }
    false
}

fn next_permutation(xs: &mut [usize]) -> bool {
    let n = xs.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        xs.reverse();
        return false;
    }
    let mut j = n - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

/// Advance a non-decreasing sequence over `0..limit`; false when exhausted.
fn next_multiset(xs: &mut [usize], limit: usize) -> bool {
    let k = xs.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if xs[i] + 1 < limit {
            let v = xs[i] + 1;
            for x in &mut xs[i..] {
                *x = v;
            }
            return true;
        }
    }
    false
}

/// Lazy, deterministic stream of all graphs within the bounds, one per
/// isomorphism class, ordered by total entity count.
pub struct GraphStream {
    bounds: Bounds,
    sizes: Vec<(usize, usize)>,
    size_idx: usize,
    nodes: Vec<usize>,
    rels: Vec<usize>,
    fresh: bool,
}

pub fn enumerate_graphs(bounds: &Bounds) -> GraphStream {
    let mut sizes = Vec::new();
    for total in 0..=bounds.max_nodes + bounds.max_rels {
        for n in 0..=bounds.max_nodes.min(total) {
            let m = total - n;
            if m <= bounds.max_rels && (m == 0 || (n > 0 && !bounds.labels.is_empty())) {
                sizes.push((n, m));
            }
        }
    }
    GraphStream { bounds: bounds.clone(), sizes, size_idx: 0, nodes: Vec::new(), rels: Vec::new(), fresh: true }
}

impl GraphStream {
    fn advance(&mut self) -> bool {
        loop {
            let Some(&(n, m)) = self.sizes.get(self.size_idx) else { return false };
            if self.fresh {
                self.fresh = false;
                self.nodes = vec![0; n];
                self.rels = vec![0; m];
                return true;
            }
            if next_multiset(&mut self.rels, self.bounds.rel_decorations(n)) {
                return true;
            }
            if next_multiset(&mut self.nodes, self.bounds.node_decorations()) {
                self.rels = vec![0; m];
                return true;
            }
            self.size_idx += 1;
            self.fresh = true;
        }
    }
}

impl Iterator for GraphStream {
    type Item = PropertyGraph;

    fn next(&mut self) -> Option<PropertyGraph> {
        while self.advance() {
            if self.bounds.is_canonical(&self.nodes, &self.rels) {
                return Some(self.bounds.build(&self.nodes, &self.rels));
            }
        }
        None
    }
}

/// Uniformly chosen sizes and decorations within the bounds.
pub fn sample_graph<R: Rng>(bounds: &Bounds, rng: &mut R) -> PropertyGraph {
    let n = rng.gen_range(0..=bounds.max_nodes);
    let m = if n == 0 || bounds.labels.is_empty() { 0 } else { rng.gen_range(0..=bounds.max_rels) };
    let nodes: Vec<usize> = (0..n).map(|_| rng.gen_range(0..bounds.node_decorations())).collect();
    let rels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..bounds.rel_decorations(n))).collect();
    bounds.build(&nodes, &rels)
}

#[derive(Default)]
struct Vocab {
    labels: BTreeSet<String>,
    keys: BTreeSet<String>,
    values: BTreeSet<Value>,
}

impl Vocab {
    fn single(&mut self, s: &SingleQuery) {
        self.clauses(&s.clauses);
        self.projection(&s.ret);
    }

    fn clauses(&mut self, cs: &[Clause]) {
        for c in cs {
            match c {
                Clause::Match(m) => {
                    for p in &m.patterns {
                        for n in p.nodes() {
                            self.labels.extend(n.labels.iter().cloned());
                            self.props(&n.props);
                        }
                        for r in p.rels() {
                            self.labels.extend(r.labels.iter().cloned());
                            self.props(&r.props);
                        }
                    }
                    if let Some(w) = &m.where_ {
                        self.expr(w);
                    }
                }
                Clause::With(p) => self.projection(p),
                Clause::Unwind(u) => self.expr(&u.expr),
            }
        }
    }

    fn props(&mut self, ps: &[(String, Expr)]) {
        for (k, e) in ps {
            self.keys.insert(k.clone());
            self.expr(e);
        }
    }

    fn projection(&mut self, p: &Projection) {
        for i in &p.items {
            self.expr(&i.expr);
        }
        for s in &p.order_by {
            self.expr(&s.expr);
        }
        if let Some(w) = &p.where_ {
            self.expr(w);
        }
    }

    fn expr(&mut self, e: &Expr) {
        e.visit(&mut |x| match x {
            Expr::Prop(base, k) if !matches!(**base, Expr::Map(_)) => {
                self.keys.insert(k.clone());
            }
            Expr::Int(n) => {
                self.values.insert(Value::Int(*n));
            }
            Expr::Str(s) => {
                self.values.insert(Value::Str(s.clone()));
            }
            Expr::Bool(b) => {
                self.values.insert(Value::Bool(*b));
            }
            Expr::Exists(sub) => {
                self.clauses(&sub.clauses);
                if let Some(r) = &sub.ret {
                    self.projection(r);
                }
            }
            _ => {}
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn bounds(n: usize, r: usize, labels: usize, keys: usize, values: usize) -> Bounds {
        Bounds {
            max_nodes: n,
            max_rels: r,
            labels: (0..labels).map(|i| format!("L{i}")).collect(),
            keys: (0..keys).map(|i| format!("k{i}")).collect(),
            values: (0..values as i64).map(Value::Int).collect(),
        }
    }

    /// Canonical form by trying every node renaming of a labelled graph.
    fn brute_canon(b: &Bounds, nodes: &[usize], rels: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let n = nodes.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best: Option<(Vec<usize>, Vec<usize>)> = None;
        loop {
            let mut ns = vec![0; n];
            for i in 0..n {
                ns[perm[i]] = nodes[i];
            }
            let mut rs: Vec<usize> = rels
                .iter()
                .map(|&r| {
                    let (s, d, l, p) = b.split_rel(n, r);
                    b.join_rel(n, perm[s], perm[d], l, p)
                })
                .collect();
            rs.sort_unstable();
            let cand = (ns, rs);
            if best.as_ref().is_none_or(|x| cand < *x) {
                best = Some(cand);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        best.unwrap()
    }

    /// Count isomorphism classes from every labelled graph, independently of the stream.
    fn brute_count(b: &Bounds) -> usize {
        let mut classes = HashSet::new();
        for n in 0..=b.max_nodes {
            let nd = b.node_decorations();
            let rd = b.rel_decorations(n);
            for m in 0..=b.max_rels {
                if m > 0 && n == 0 {
                    continue;
                }
                for ncode in 0..nd.pow(n as u32) {
                    let nodes: Vec<usize> = (0..n).map(|i| ncode / nd.pow(i as u32) % nd).collect();
                    for rcode in 0..rd.pow(m as u32) {
                        let rels: Vec<usize> = (0..m).map(|i| rcode / rd.pow(i as u32) % rd).collect();
                        classes.insert(brute_canon(b, &nodes, &rels));
                    }
                }
            }
        }
        classes.len()
    }

    #[test]
    fn stream_matches_brute_force_class_count() {
        for b in [
            bounds(2, 2, 1, 0, 0),
            bounds(3, 2, 1, 0, 0),
            bounds(2, 2, 2, 0, 0),
            bounds(2, 1, 1, 1, 2),
            bounds(3, 1, 2, 0, 0),
        ] {
            let stream: Vec<_> = enumerate_graphs(&b).collect();
            assert_eq!(stream.len(), brute_count(&b), "{b:?}");
        }
    }

    #[test]
    fn stream_has_no_duplicates_and_is_deterministic() {
        let b = bounds(3, 2, 1, 1, 1);
        let a: Vec<_> = enumerate_graphs(&b).collect();
        let again: Vec<_> = enumerate_graphs(&b).collect();
        assert_eq!(a, again);
        let set: HashSet<_> = a.iter().map(|g| g.to_string()).collect();
        assert_eq!(set.len(), a.len());
    }

    #[test]
    fn single_node_self_loop_present() {
        let b = Bounds { max_nodes: 1, max_rels: 1, labels: vec!["A".into()], keys: vec![], values: vec![] };
        let gs: Vec<_> = enumerate_graphs(&b).collect();
        // empty, bare node, node labelled A, and a self-loop on each of the two nodes
        assert_eq!(gs.len(), 5);
        assert!(gs.iter().any(|g| g.rels.len() == 1 && g.rels[0].src == g.rels[0].dst));
        assert!(gs.iter().all(|g| g.validate().is_ok()));
    }

    #[test]
    fn ordered_by_entity_count() {
        let sizes: Vec<usize> = enumerate_graphs(&bounds(2, 2, 1, 0, 0)).map(|g| g.entity_count()).collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sampler_is_seeded() {
        use rand::SeedableRng;
        let b = Bounds::default();
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let g = sample_graph(&b, &mut r1);
            assert!(g.validate().is_ok());
            assert_eq!(g, sample_graph(&b, &mut r2));
        }
    }

    #[test]
    fn vocabulary_from_queries() {
        let q = parse_checked("MATCH (n:Person)-[:KNOWS]->(m {age: 3}) WHERE n.name = 'x' RETURN m").unwrap();
        let b = Bounds::for_queries(&[&q], 2, 2);
        assert_eq!(b.labels, ["KNOWS", "Person"]);
        assert_eq!(b.keys, ["age", "name"]);
        assert_eq!(b.values, [Value::Int(3), Value::Int(4), Value::Str("x".into())]);
    }
}
