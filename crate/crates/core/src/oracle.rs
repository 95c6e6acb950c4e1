//! Brute-force references for the closed forms: exhaustive permutation nulls,
//! explicit averaging over the graph family, and all-MST enumeration.
//!
//! Everything here is exact (rational) and deliberately slow.

use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::dataset::{DistanceMatrix, DistinctTable, Sample};
use crate::error::{Error, Result};
use crate::graph::{check_sizes, enumerate_graph_family, ObservationGraph, SimilarityGraph};

pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;
pub const MAX_MST_NODES: usize = 8;

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn ratio(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `(R0, R1, R2)` as exact rationals.
pub type ExactCounts = [BigRational; 3];

/// One sample-1 count vector of the permutation null with its multiplicity.
#[derive(Debug, Clone)]
pub struct SupportPoint {
    pub n1u: Vec<u64>,
    /// Number of label assignments that produce `n1u`.
    pub weight: BigUint,
    pub averaging: ExactCounts,
    pub union: ExactCounts,
}

/// The full permutation null, grouped by per-value counts.
#[derive(Debug, Clone)]
pub struct ExhaustiveNull {
    pub n1: u64,
    pub n2: u64,
    /// `C(N, n1)`.
    pub total: BigUint,
    pub support: Vec<SupportPoint>,
}

impl ExhaustiveNull {
    pub fn assignments(&self) -> &BigUint {
        &self.total
    }

    pub fn mean(&self, f: impl Fn(&SupportPoint) -> BigRational) -> BigRational {
        let total = BigRational::from_integer(BigInt::from(self.total.clone()));
        self.support
            .iter()
            .map(|p| f(p) * BigRational::from_integer(BigInt::from(p.weight.clone())))
            .fold(BigRational::zero(), |a, b| a + b)
            / total
    }

    pub fn covariance(
        &self,
        f: impl Fn(&SupportPoint) -> BigRational,
        g: impl Fn(&SupportPoint) -> BigRational,
    ) -> BigRational {
        let mf = self.mean(&f);
        let mg = self.mean(&g);
        self.mean(|p| (f(p) - &mf) * (g(p) - &mg))
    }

    pub fn variance(&self, f: impl Fn(&SupportPoint) -> BigRational) -> BigRational {
        self.covariance(&f, &f)
    }

    /// Exact probability that `extreme(f(point))` holds under the null.
    pub fn probability(&self, extreme: impl Fn(&SupportPoint) -> bool) -> f64 {
        let hit: BigUint = self.support.iter().filter(|p| extreme(p)).map(|p| p.weight.clone()).sum();
        ratio(BigInt::from(hit), BigInt::from(self.total.clone()))
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

/// Observation pairs that can carry an edge: `(i, j, averaging inclusion
/// probability, in union graph)`.
fn edge_probabilities(table: &DistinctTable, c0: &SimilarityGraph) -> Vec<(usize, usize, BigRational)> {
    let mut out = Vec::new();
    for u in 0..table.k() {
        let mem = table.members(u);
        let m = mem.len() as i64;
        // A uniform spanning tree on m nodes holds each pair with probability 2/m.
        for (a, &i) in mem.iter().enumerate() {
            for &j in &mem[a + 1..] {
                out.push((i, j, ratio(2, m)));
            }
        }
    }
    for &(u, v) in c0.edges() {
        let p = ratio(1, (table.m(u) * table.m(v)) as i64);
        for &i in table.members(u) {
            for &j in table.members(v) {
                out.push((i, j, p.clone()));
            }
        }
    }
    out
}

fn class(a: Sample, b: Sample) -> usize {
    match (a, b) {
        (Sample::One, Sample::One) => 1,
        (Sample::Two, Sample::Two) => 2,
        _ => 0,
    }
}

fn count_pairs(pairs: &[(usize, usize, BigRational)], labels: &[Sample]) -> (ExactCounts, ExactCounts) {
    let mut avg: ExactCounts = Default::default();
    let mut uni = [0u64; 3];
    for (i, j, p) in pairs {
        let c = class(labels[*i], labels[*j]);
        avg[c] += p;
        uni[c] += 1;
    }
    (avg, uni.map(|x| ratio(x as i64, 1)))
}

fn count_vectors(m: &[u64], n1: u64) -> Vec<Vec<u64>> {
    let mut tail_cap = vec![0u64; m.len() + 1];
    for u in (0..m.len()).rev() {
        tail_cap[u] = tail_cap[u + 1] + m[u];
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m.len());
    fn rec(u: usize, left: u64, m: &[u64], tail: &[u64], cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if u == m.len() {
            out.push(cur.clone());
            return;
        }
        let lo = left.saturating_sub(tail[u + 1]);
        for x in lo..=m[u].min(left) {
            cur.push(x);
            rec(u + 1, left - x, m, tail, cur, out);
            cur.pop();
        }
    }
    rec(0, n1, m, &tail_cap, &mut cur, &mut out);
    out
}

fn check_cap(total: &BigUint, cap: u64) -> Result<()> {
    if *total > BigUint::from(cap) {
        return Err(Error::EnumerationTooLarge {
            size: total.to_string(),
            cap,
        });
    }
    Ok(())
}

/// Every label assignment with the observed `n1`, grouped by per-value
/// counts, with edge counts under both summaries.
pub fn enumerate_permutations(table: &DistinctTable, c0: &SimilarityGraph, cap: u64) -> Result<ExhaustiveNull> {
    check_sizes(c0, table)?;
    let n = table.n() as u64;
    let n1 = table.n1_total();
    let total = binomial(n, n1);
    check_cap(&total, cap)?;
    let m = table.multiplicities();
    let pairs = edge_probabilities(table, c0);
    let mut labels = vec![Sample::Two; table.n()];
    let support = count_vectors(&m, n1)
        .into_iter()
        .map(|n1u| {
            for u in 0..m.len() {
                for (r, &i) in table.members(u).iter().enumerate() {
                    labels[i] = if (r as u64) < n1u[u] { Sample::One } else { Sample::Two };
                }
            }
            let (averaging, union) = count_pairs(&pairs, &labels);
            let weight = n1u.iter().zip(&m).map(|(&x, &mu)| binomial(mu, x)).product();
            SupportPoint {
                n1u,
                weight,
                averaging,
                union,
            }
        })
        .collect();
    Ok(ExhaustiveNull {
        n1,
        n2: n - n1,
        total,
        support,
    })
}

/// Every `n1`-subset labelling of a fixed observation graph; each
/// observation is its own value and both summaries hold the plain counts.
pub fn enumerate_fixed_graph(graph: &ObservationGraph, n1: usize, cap: u64) -> Result<ExhaustiveNull> {
    let n = graph.n();
    if n1 > n {
        return Err(Error::Domain(format!("n1 = {n1} exceeds N = {n}")));
    }
    let total = binomial(n as u64, n1 as u64);
    check_cap(&total, cap)?;
    let pairs: Vec<(usize, usize, BigRational)> = graph.edges().iter().map(|&(i, j)| (i, j, BigRational::one())).collect();
    let support = (0..n)
        .combinations(n1)
        .map(|ones| {
            let mut labels = vec![Sample::Two; n];
            let mut n1u = vec![0u64; n];
            for &i in &ones {
                labels[i] = Sample::One;
                n1u[i] = 1;
            }
            let (counts, _) = count_pairs(&pairs, &labels);
            SupportPoint {
                n1u,
                weight: BigUint::one(),
                averaging: counts.clone(),
                union: counts,
            }
        })
        .collect();
    Ok(ExhaustiveNull {
        n1: n1 as u64,
        n2: (n - n1) as u64,
        total,
        support,
    })
}

/// Exact mean of `(R0, R1, R2)` over every graph in the family, by direct scan.
pub fn average_over_family(table: &DistinctTable, c0: &SimilarityGraph, cap: u64) -> Result<ExactCounts> {
    let mut sums = [0u64; 3];
    let mut graphs = 0u64;
    for g in enumerate_graph_family(c0, table, cap)? {
        for &(i, j) in g.edges() {
            sums[class(table.labels()[i], table.labels()[j])] += 1;
        }
        graphs += 1;
    }
    Ok(sums.map(|s| ratio(s as i64, graphs as i64)))
}

/// Edge counts on the materialized union graph.
pub fn union_counts(table: &DistinctTable, c0: &SimilarityGraph) -> Result<ExactCounts> {
    let g = ObservationGraph::materialize_union(c0, table)?;
    let mut sums = [0i64; 3];
    for &(i, j) in g.edges() {
        sums[class(table.labels()[i], table.labels()[j])] += 1;
    }
    Ok(sums.map(|s| ratio(s, 1)))
}

/// Every minimum spanning tree of the complete graph weighted by `d`, each as
/// a sorted edge list.
pub fn all_msts(d: &DistanceMatrix, cap: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    let k = d.k();
    if k > MAX_MST_NODES {
        return Err(Error::EnumerationTooLarge {
            size: format!("K = {k}"),
            cap: MAX_MST_NODES as u64,
        });
    }
    if k < 2 {
        return Ok(vec![Vec::new()]);
    }
    let mut edges: Vec<(f64, usize, usize)> =
        (0..k).tuple_combinations().map(|(u, v)| (d.get(u, v), u, v)).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut comp: Vec<usize> = (0..k).collect();
    let mut best = 0.0;
    for &(w, u, v) in &edges {
        if comp[u] != comp[v] {
            let (from, to) = (comp[v], comp[u]);
            comp.iter_mut().filter(|c| **c == from).for_each(|c| *c = to);
            best += w;
        }
    }
    let tol = (d.tie_tolerance() * k as f64).max(1e-9 * best.abs());

    struct Search<'a> {
        edges: &'a [(f64, usize, usize)],
        limit: f64,
        cap: usize,
        out: Vec<Vec<(usize, usize)>>,
        overflow: bool,
    }
    fn rec(s: &mut Search, start: usize, comp: &[usize], chosen: &mut Vec<(usize, usize)>, weight: f64, need: usize) {
        if s.overflow {
            return;
        }
        if need == 0 {
            if s.out.len() == s.cap {
                s.overflow = true;
                return;
            }
            let mut t = chosen.clone();
            t.sort_unstable();
            s.out.push(t);
            return;
        }
        for i in start..s.edges.len() {
            if s.edges.len() - i < need {
                break;
            }
            let bound: f64 = weight + s.edges[i..i + need].iter().map(|e| e.0).sum::<f64>();
            if bound > s.limit {
                break;
            }
            let (w, u, v) = s.edges[i];
            if comp[u] == comp[v] {
                continue;
            }
            let (from, to) = (comp[v], comp[u]);
            let merged: Vec<usize> = comp.iter().map(|&c| if c == from { to } else { c }).collect();
            chosen.push((u, v));
            rec(s, i + 1, &merged, chosen, weight + w, need - 1);
            chosen.pop();
        }
    }
    let mut search = Search {
        edges: &edges,
        limit: best + tol,
        cap,
        out: Vec::new(),
        overflow: false,
    };
    let start: Vec<usize> = (0..k).collect();
    rec(&mut search, 0, &start, &mut Vec::new(), 0.0, k - 1);
    if search.overflow {
        return Err(Error::EnumerationTooLarge {
            size: format!("more than {cap} minimum spanning trees"),
            cap: cap as u64,
        });
    }
    let mut trees = search.out;
    trees.sort();
    Ok(trees)
}

/// Edge union of every minimum spanning tree.
pub fn mst_union(d: &DistanceMatrix, cap: usize) -> Result<SimilarityGraph> {
    let trees = all_msts(d, cap)?;
    let mut edges: Vec<(usize, usize)> = trees.into_iter().flatten().collect();
    edges.sort_unstable();
    edges.dedup();
    SimilarityGraph::new(d.k(), edges)
}
