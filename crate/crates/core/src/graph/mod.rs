//! Similarity graphs on distinct values and the observation-level graphs
//! they induce.

mod build;
mod family;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::DistinctTable;
use crate::error::{Error, Result};

pub use build::{build_kmst, build_knnl, build_nnl, build_nnl_ordered, ComponentOrder};
pub use family::{count_graph_family, enumerate_graph_family, GraphFamily, DEFAULT_FAMILY_CAP};

/// Undirected simple graph `C0` on distinct-value indices `0..k`.
///
/// Caches per node: the degree `|E_u|`, the neighbor set `V_u`, and the
/// number of edges touching at least one neighbor of `u` (`|E_{u,2}|`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityGraph {
    k: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    second_order: Vec<usize>,
}

impl SimilarityGraph {
    /// Builds a graph from an edge list; edges are normalized to `u < v` and sorted.
    pub fn new(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a >= k || b >= k {
                return Err(Error::Domain(format!("edge ({}, {}) outside 1..{k}", a + 1, b + 1)));
            }
            if a == b {
                return Err(Error::Domain(format!("self-loop at {}", a + 1)));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!(
                "duplicate edge ({}, {})",
                w[0].0 + 1,
                w[0].1 + 1
            )));
        }
        Ok(Self::from_sorted(k, list))
    }

    fn from_sorted(k: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); k];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        // |E_{u,2}| = sum of neighbor degrees minus edges with both ends in V_u.
        let mut mark = vec![false; k];
        let second_order = (0..k)
            .map(|u| {
                for &v in &neighbors[u] {
                    mark[v] = true;
                }
                let mut total = 0;
                let mut inner = 0;
                for &v in &neighbors[u] {
                    total += neighbors[v].len();
                    inner += neighbors[v].iter().filter(|&&w| mark[w]).count();
                }
                for &v in &neighbors[u] {
                    mark[v] = false;
                }
                total - inner / 2
            })
            .collect();
        SimilarityGraph {
            k,
            edges,
            neighbors,
            second_order,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of edges `|C0|`.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn second_order(&self, u: usize) -> usize {
        self.second_order[u]
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.k == 0 {
            return true;
        }
        let mut seen = vec![false; self.k];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.k
    }

    /// Degree -> number of nodes with that degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for n in &self.neighbors {
            *h.entry(n.len()).or_insert(0) += 1;
        }
        h
    }

    pub fn union(&self, other: &SimilarityGraph) -> Result<SimilarityGraph> {
        if self.k != other.k {
            return Err(Error::SizeMismatch {
                expected: self.k,
                found: other.k,
            });
        }
        let mut e = self.edges.clone();
        e.extend_from_slice(&other.edges);
        e.sort_unstable();
        e.dedup();
        Ok(Self::from_sorted(self.k, e))
    }

    /// Edge-list text: a `K=<k>` header then one `u,v` line per edge, 1-based.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("K={}\n", self.k);
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "{},{}", a + 1, b + 1);
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<SimilarityGraph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing K=<K> header".into(),
        })?;
        let k: usize = header
            .strip_prefix("K=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                line: ln,
                message: format!("expected K=<K>, got {header:?}"),
            })?;
        let mut edges = Vec::new();
        for (ln, l) in lines {
            let parsed = l.split_once(',').and_then(|(a, b)| {
                Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?))
            });
            match parsed {
                Some((a, b)) if a >= 1 && b >= 1 => edges.push((a - 1, b - 1)),
                _ => {
                    return Err(Error::Parse {
                        line: ln,
                        message: format!("expected u,v with 1-based indices, got {l:?}"),
                    })
                }
            }
        }
        SimilarityGraph::new(k, edges)
    }
}

/// Size and degree profile of the union graph on observations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionGraphSummary {
    /// `|G-bar|`.
    pub size: u64,
    /// `|E_i|` in the union graph for every observation `i`.
    pub incident: Vec<u64>,
    /// `sum_i |E_i|^2`.
    pub sum_sq: u128,
}

impl UnionGraphSummary {
    /// `sum_i |E_i| (|E_i| - 1)`.
    pub fn sum_pairs(&self) -> u128 {
        self.sum_sq - 2 * self.size as u128
    }
}

/// Union-graph degree of an observation of value `u`: `m_u - 1 + sum_{v ~ u} m_v`.
pub fn union_degree(c0: &SimilarityGraph, m: &[u64], u: usize) -> u64 {
    m[u] - 1 + c0.neighbors(u).iter().map(|&v| m[v]).sum::<u64>()
}

pub fn union_graph_summary(c0: &SimilarityGraph, table: &DistinctTable) -> Result<UnionGraphSummary> {
    check_sizes(c0, table)?;
    let m = table.multiplicities();
    let size = m.iter().map(|&x| x * (x - 1) / 2).sum::<u64>()
        + c0.edges().iter().map(|&(u, v)| m[u] * m[v]).sum::<u64>();
    let per_value: Vec<u64> = (0..c0.k()).map(|u| union_degree(c0, &m, u)).collect();
    let incident: Vec<u64> = table.assignment().iter().map(|&u| per_value[u]).collect();
    let sum_sq = incident.iter().map(|&e| e as u128 * e as u128).sum();
    Ok(UnionGraphSummary {
        size,
        incident,
        sum_sq,
    })
}

pub(crate) fn check_sizes(c0: &SimilarityGraph, table: &DistinctTable) -> Result<()> {
    if c0.k() != table.k() {
        return Err(Error::SizeMismatch {
            expected: table.k(),
            found: c0.k(),
        });
    }
    Ok(())
}

/// An explicit undirected simple graph on observations `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObservationGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl ObservationGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let g = SimilarityGraph::new(n, edges)?;
        Ok(ObservationGraph { n, edges: g.edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut d = vec![0u64; self.n];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    /// The union of every graph in the family: observations of the same
    /// value form a clique and every `C0` edge joins all observation pairs.
    pub fn materialize_union(c0: &SimilarityGraph, table: &DistinctTable) -> Result<Self> {
        check_sizes(c0, table)?;
        let mut edges = Vec::new();
        for u in 0..table.k() {
            let mem = table.members(u);
            for (i, &a) in mem.iter().enumerate() {
                for &b in &mem[i + 1..] {
                    edges.push((a, b));
                }
            }
        }
        for &(u, v) in c0.edges() {
            for &a in table.members(u) {
                for &b in table.members(v) {
                    edges.push((a, b));
                }
            }
        }
        ObservationGraph::new(table.n(), edges)
    }
}
