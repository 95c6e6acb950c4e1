use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use super::{check_sizes, ObservationGraph, SimilarityGraph};
use crate::dataset::DistinctTable;
use crate::error::{Error, Result};

/// Default cap on the number of graphs [`enumerate_graph_family`] will visit.
pub const DEFAULT_FAMILY_CAP: u64 = 1_000_000;

/// `|G_C0| = prod_{(u,v) in C0} m_u m_v * prod_u m_u^(m_u - 2)`, with a
/// single observation contributing a factor of 1.
pub fn count_graph_family(c0: &SimilarityGraph, table: &DistinctTable) -> Result<BigUint> {
    check_sizes(c0, table)?;
    let m = table.multiplicities();
    let mut total = BigUint::one();
    for &(u, v) in c0.edges() {
        total *= BigUint::from(m[u]) * BigUint::from(m[v]);
    }
    for &mu in &m {
        if mu >= 3 {
            total *= BigUint::from(mu).pow((mu - 2) as u32);
        }
    }
    Ok(total)
}

/// Every observation-level graph induced by `C0`, each exactly once.
///
/// Each `C0` edge is assigned to one pair of observations of its two values,
/// and the observations of each value are joined by one of their labeled
/// spanning trees (enumerated through Prüfer sequences).
pub fn enumerate_graph_family<'a>(
    c0: &'a SimilarityGraph,
    table: &'a DistinctTable,
    cap: u64,
) -> Result<GraphFamily<'a>> {
    let size = count_graph_family(c0, table)?;
    match size.to_u64() {
        Some(s) if s <= cap => {}
        _ => {
            return Err(Error::EnumerationTooLarge {
                size: size.to_string(),
                cap,
            })
        }
    }
    let m = table.multiplicities();
    let mut radices: Vec<u64> = c0.edges().iter().map(|&(u, v)| m[u] * m[v]).collect();
    let tree_values: Vec<usize> = (0..table.k()).filter(|&u| m[u] >= 3).collect();
    radices.extend(tree_values.iter().map(|&u| m[u].pow((m[u] - 2) as u32)));
    Ok(GraphFamily {
        c0,
        table,
        tree_values,
        digits: vec![0; radices.len()],
        radices,
        done: false,
    })
}

pub struct GraphFamily<'a> {
    c0: &'a SimilarityGraph,
    table: &'a DistinctTable,
    tree_values: Vec<usize>,
    radices: Vec<u64>,
    digits: Vec<u64>,
    done: bool,
}

/// Decodes a Prüfer sequence over `0..n` into the `n - 1` edges of a labeled tree.
pub(crate) fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len() + 2, n);
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&j| degree[j] == 1).expect("a leaf always exists");
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&j| degree[j] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

impl GraphFamily<'_> {
    fn current(&self) -> ObservationGraph {
        let mut edges = Vec::with_capacity(self.table.n());
        let c0_len = self.c0.len();
        for (e, &(u, v)) in self.c0.edges().iter().enumerate() {
            let mv = self.table.m(v);
            let pick = self.digits[e];
            edges.push((
                self.table.members(u)[(pick / mv) as usize],
                self.table.members(v)[(pick % mv) as usize],
            ));
        }
        for u in 0..self.table.k() {
            if self.table.m(u) == 2 {
                let mem = self.table.members(u);
                edges.push((mem[0], mem[1]));
            }
        }
        for (t, &u) in self.tree_values.iter().enumerate() {
            let mem = self.table.members(u);
            let n = mem.len();
            let mut code = self.digits[c0_len + t];
            let seq: Vec<usize> = (0..n - 2)
                .map(|_| {
                    let d = (code % n as u64) as usize;
                    code /= n as u64;
                    d
                })
                .collect();
            edges.extend(prufer_decode(&seq, n).into_iter().map(|(a, b)| (mem[a], mem[b])));
        }
        ObservationGraph::new(self.table.n(), edges).expect("family members are simple graphs")
    }
}

impl Iterator for GraphFamily<'_> {
    type Item = ObservationGraph;

    fn next(&mut self) -> Option<ObservationGraph> {
        if self.done {
            return None;
        }
        let g = self.current();
        self.done = true;
        for (d, &r) in self.digits.iter_mut().zip(&self.radices) {
            *d += 1;
            if *d < r {
                self.done = false;
                break;
            }
            *d = 0;
        }
        Some(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::table_from_m;
    use std::collections::BTreeSet;

    fn edge(k: usize, e: &[(usize, usize)]) -> SimilarityGraph {
        SimilarityGraph::new(k, e.iter().copied()).unwrap()
    }

    #[test]
    fn figure_one_family_size() {
        let t = table_from_m(&[1, 3, 4, 3, 1]);
        let g = edge(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4)]);
        assert_eq!(count_graph_family(&g, &t).unwrap(), BigUint::from(2_239_488u64));
        assert!(matches!(
            enumerate_graph_family(&g, &t, 1000),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn prufer_gives_all_trees() {
        for n in 3..=5usize {
            let total = n.pow(n as u32 - 2);
            let mut trees = BTreeSet::new();
            for code in 0..total {
                let mut c = code;
                let seq: Vec<usize> = (0..n - 2).map(|_| { let d = c % n; c /= n; d }).collect();
                let mut e: Vec<(usize, usize)> =
                    prufer_decode(&seq, n).into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
                e.sort();
                assert_eq!(e.len(), n - 1);
                assert!(edge(n, &e).is_connected());
                trees.insert(e);
            }
            assert_eq!(trees.len(), total);
        }
    }

    #[test]
    fn no_repeats_yields_c0() {
        let t = table_from_m(&[1, 1, 1]);
        let g = edge(3, &[(0, 1), (1, 2)]);
        let all: Vec<_> = enumerate_graph_family(&g, &t, 10).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].edges(), &[(0, 1), (1, 2)]);
    }

    fn check_family(m: &[usize], c0: &[(usize, usize)], expected: usize) {
        let t = table_from_m(m);
        let g = edge(m.len(), c0);
        assert_eq!(count_graph_family(&g, &t).unwrap(), BigUint::from(expected));
        let all: Vec<_> = enumerate_graph_family(&g, &t, 1_000_000).unwrap().collect();
        assert_eq!(all.len(), expected);
        let distinct: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), expected);
        let n: usize = m.iter().sum();
        for gr in &all {
            assert_eq!(gr.len(), n - m.len() + c0.len());
        }
    }

    #[test]
    fn small_families_enumerate_exactly() {
        check_family(&[2, 2], &[(0, 1)], 4);
        check_family(&[3, 1], &[(0, 1)], 9);
        check_family(&[3, 2, 4], &[(0, 1), (1, 2), (0, 2)], 6 * 8 * 12 * 3 * 16);
    }
}
