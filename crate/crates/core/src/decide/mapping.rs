//! Pairing the result columns of two queries.

use crate::gexpr::{Column, ColumnType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingMethod {
    /// Columns of the same kind, properties with the same key.
    Typed,
    /// Columns of the same sort only.
    Relaxed,
}

/// `perm[j]` is the column of the first query paired with column `j` of the
/// second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub perm: Vec<usize>,
    pub method: MappingMethod,
}

impl ColumnMapping {
    /// `(q1 column, q2 column)` pairs.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.perm.iter().enumerate().map(|(j, &i)| (i, j)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(j, &i)| i == j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MappingPlan {
    /// Candidates in the order they are tried.
    Candidates(Vec<ColumnMapping>),
    /// No bijection exists; the queries agree only if both are always empty.
    EmptyResultObligation,
}

/// Candidate pairings of the visible columns: identity first, then typed
/// bijections, then relaxed ones, at most `cap` in total. Sorted results
/// only admit the identity, since row order breaks ties by column order.
pub fn map_columns(c1: &[Column], c2: &[Column], ordered: bool, cap: usize) -> MappingPlan {
    if c1.len() != c2.len() {
        return MappingPlan::EmptyResultObligation;
    }
    let n = c1.len();
    let typed = |i: usize, j: usize| c1[i].sort == c2[j].sort && c1[i].ty == c2[j].ty;
    let relaxed = |i: usize, j: usize| c1[i].sort == c2[j].sort;
    let identity: Vec<usize> = (0..n).collect();
    let mut out: Vec<ColumnMapping> = Vec::new();
    if (0..n).all(|j| relaxed(j, j)) {
        let method = if (0..n).all(|j| typed(j, j)) { MappingMethod::Typed } else { MappingMethod::Relaxed };
        out.push(ColumnMapping { perm: identity.clone(), method });
    }
    if !ordered {
        for (method, ok) in
            [(MappingMethod::Typed, &typed as &dyn Fn(usize, usize) -> bool), (MappingMethod::Relaxed, &relaxed)]
        {
            let mut perm = Vec::new();
            let mut used = vec![false; n];
            bijections(n, ok, &mut perm, &mut used, &mut |p| {
                if out.len() < cap && !out.iter().any(|m| m.perm == p) {
                    out.push(ColumnMapping { perm: p.to_vec(), method });
                }
                out.len() < cap
            });
        }
    }
    if out.is_empty() {
        MappingPlan::EmptyResultObligation
    } else {
        MappingPlan::Candidates(out)
    }
}

/// Lexicographic enumeration of `perm` with `ok(perm[j], j)`; stops when `f`
/// returns false.
fn bijections(
    n: usize,
    ok: &dyn Fn(usize, usize) -> bool,
    perm: &mut Vec<usize>,
    used: &mut [bool],
    f: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let j = perm.len();
    if j == n {
        return f(perm);
    }
    for i in 0..n {
        if !used[i] && ok(i, j) {
            used[i] = true;
            perm.push(i);
            let go = bijections(n, ok, perm, used, f);
            perm.pop();
            used[i] = false;
            if !go {
                return false;
            }
        }
    }
    true
}

/// Whether column types allow the hidden ORDER BY keys to be compared.
pub fn same_sort_keys(c1: &[Column], c2: &[Column]) -> bool {
    let keys = |c: &[Column]| -> Vec<ColumnType> {
        c.iter().filter(|c| matches!(c.ty, ColumnType::OrderKey { .. })).map(|c| c.ty.clone()).collect()
    };
    keys(c1) == keys(c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gexpr::Sort;

    fn col(ty: ColumnType) -> Column {
        let sort = if matches!(ty, ColumnType::Node | ColumnType::Rel) { Sort::Ent } else { Sort::Val };
        Column { name: String::new(), sort, ty }
    }

    #[test]
    fn identity_comes_first() {
        let c = vec![col(ColumnType::Node), col(ColumnType::Node)];
        let MappingPlan::Candidates(ms) = map_columns(&c, &c, false, 10) else { panic!() };
        assert!(ms[0].is_identity());
        assert_eq!(ms[1].pairs(), vec![(1, 0), (0, 1)]);
        assert_eq!(ms.len(), 2);
    }

    #[test]
    fn typed_before_relaxed() {
        let a = vec![col(ColumnType::Prop("x".into())), col(ColumnType::Prop("y".into()))];
        let b = vec![col(ColumnType::Prop("y".into())), col(ColumnType::Prop("x".into()))];
        let MappingPlan::Candidates(ms) = map_columns(&a, &b, false, 10) else { panic!() };
        assert_eq!(ms[0].method, MappingMethod::Relaxed);
        assert!(ms[0].is_identity());
        assert_eq!(ms[1], ColumnMapping { perm: vec![1, 0], method: MappingMethod::Typed });
    }

    #[test]
    fn arity_mismatch_needs_empty_results() {
        let a = vec![col(ColumnType::Node), col(ColumnType::Node)];
        let b = vec![col(ColumnType::Node)];
        assert_eq!(map_columns(&a, &b, false, 10), MappingPlan::EmptyResultObligation);
    }

    #[test]
    fn ordered_results_use_identity_only() {
        let c = vec![col(ColumnType::Node), col(ColumnType::Node)];
        let MappingPlan::Candidates(ms) = map_columns(&c, &c, true, 10) else { panic!() };
        assert_eq!(ms.len(), 1);
    }
}
