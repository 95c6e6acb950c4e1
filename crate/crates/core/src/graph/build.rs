use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimilarityGraph;
use crate::dataset::DistanceMatrix;
use crate::error::{Error, Result};

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Which component the second phase of the NNL construction grows next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComponentOrder {
    /// The component containing the smallest node index.
    #[default]
    Lowest,
    /// The component containing the largest node index.
    Highest,
    /// A component chosen uniformly at random at each step.
    Seeded(u64),
}

/// K x K membership mask of pairs removed from consideration.
struct PairMask {
    k: usize,
    bits: Vec<bool>,
}

impl PairMask {
    fn new(k: usize) -> Self {
        PairMask {
            k,
            bits: vec![false; k * k],
        }
    }

    fn get(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.k + v]
    }

    fn set(&mut self, u: usize, v: usize) {
        self.bits[u * self.k + v] = true;
        self.bits[v * self.k + u] = true;
    }
}

fn usable(d: &DistanceMatrix, mask: &PairMask, u: usize, v: usize) -> Option<f64> {
    let x = d.get(u, v);
    (u != v && !mask.get(u, v) && x.is_finite()).then_some(x)
}

/// One NNL round with the masked pairs treated as infinitely far apart.
///
/// When masking leaves the nodes disconnected the round stops with every
/// component that can still grow grown; the result is then a forest-like
/// graph rather than a connected one.
fn nnl_round(d: &DistanceMatrix, mask: &PairMask, order: ComponentOrder) -> Vec<(usize, usize)> {
    let k = d.k();
    let mut added = PairMask::new(k);
    let mut edges = Vec::new();
    let mut sets = DisjointSets::new(k);
    let mut rng = match order {
        ComponentOrder::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
        _ => None,
    };

    let mut connect = |u: usize, v: usize, edges: &mut Vec<(usize, usize)>, sets: &mut DisjointSets| {
        if !added.get(u, v) {
            added.set(u, v);
            edges.push((u.min(v), u.max(v)));
            sets.union(u, v);
        }
    };

    // Each node joins every nearest neighbor.
    for u in 0..k {
        let Some(dmin) = (0..k)
            .filter_map(|v| usable(d, mask, u, v))
            .min_by(f64::total_cmp)
        else {
            continue;
        };
        for v in 0..k {
            if let Some(x) = usable(d, mask, u, v) {
                if d.ties(x, dmin) {
                    connect(u, v, &mut edges, &mut sets);
                }
            }
        }
    }

    // Grow one component at a time by all of its shortest outgoing links.
    // A component whose outgoing pairs are all masked can never grow again.
    let mut saturated: Vec<usize> = Vec::new();
    loop {
        let roots: Vec<usize> = (0..k).map(|u| sets.find(u)).collect();
        let mut open: Vec<usize> = roots.clone();
        open.sort_unstable();
        open.dedup();
        if open.len() <= 1 {
            break;
        }
        open.retain(|r| !saturated.contains(r));
        if open.is_empty() {
            break;
        }
        let chosen = match order {
            ComponentOrder::Lowest => *roots.iter().find(|r| open.contains(r)).expect("open root"),
            ComponentOrder::Highest => *roots.iter().rev().find(|r| open.contains(r)).expect("open root"),
            ComponentOrder::Seeded(_) => {
                let r = rng.as_mut().expect("seeded order has an rng");
                open[r.random_range(0..open.len())]
            }
        };
        let inside: Vec<usize> = (0..k).filter(|&u| roots[u] == chosen).collect();
        let outside: Vec<usize> = (0..k).filter(|&u| roots[u] != chosen).collect();
        let Some(dmin) = inside
            .iter()
            .flat_map(|&i| outside.iter().filter_map(move |&j| usable(d, mask, i, j)))
            .min_by(f64::total_cmp)
        else {
            saturated.push(chosen);
            continue;
        };
        for &i in &inside {
            for &j in &outside {
                if let Some(x) = usable(d, mask, i, j) {
                    if d.ties(x, dmin) {
                        connect(i, j, &mut edges, &mut sets);
                    }
                }
            }
        }
    }
    edges
}

/// Nearest neighbor link on the distinct values.
pub fn build_nnl(d: &DistanceMatrix) -> Result<SimilarityGraph> {
    build_nnl_ordered(d, ComponentOrder::Lowest)
}

/// [`build_nnl`] with an explicit rule for the order in which components grow.
pub fn build_nnl_ordered(d: &DistanceMatrix, order: ComponentOrder) -> Result<SimilarityGraph> {
    if d.k() < 2 {
        return Err(Error::Domain(format!("NNL needs at least 2 distinct values, got {}", d.k())));
    }
    let g = SimilarityGraph::new(d.k(), nnl_round(d, &PairMask::new(d.k()), order))?;
    if !g.is_connected() {
        return Err(Error::InfeasibleK {
            k: 1,
            round: 1,
            nodes: d.k(),
        });
    }
    Ok(g)
}

/// Union of the 1st..k-th NNLs; each round ignores the edges of earlier rounds.
///
/// Later rounds may be unable to connect every node once earlier rounds have
/// used up a node's pairs; such a round contributes what it can. A round
/// that cannot add a single edge is an error.
pub fn build_knnl(d: &DistanceMatrix, k: usize) -> Result<SimilarityGraph> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if d.k() < 2 {
        return Err(Error::Domain(format!("NNL needs at least 2 distinct values, got {}", d.k())));
    }
    let mut mask = PairMask::new(d.k());
    let mut all = Vec::new();
    for round in 1..=k {
        let edges = nnl_round(d, &mask, ComponentOrder::Lowest);
        if edges.is_empty() || (round == 1 && !SimilarityGraph::new(d.k(), edges.clone())?.is_connected()) {
            return Err(Error::InfeasibleK {
                k,
                round,
                nodes: d.k(),
            });
        }
        for &(u, v) in &edges {
            mask.set(u, v);
        }
        all.extend(edges);
    }
    SimilarityGraph::new(d.k(), all)
}

/// Union of the 1st..k-th minimum spanning trees by Kruskal's algorithm.
/// Equal-weight edges are visited in a seeded random order, so ties resolve
/// differently across seeds but identically for a fixed seed.
///
/// As with [`build_knnl`], a later round that cannot span every node yields a
/// minimum spanning forest; a round with no edge left is an error.
pub fn build_kmst(d: &DistanceMatrix, k: usize, seed: u64) -> Result<SimilarityGraph> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let n = d.k();
    let mut sorted: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            let w = d.get(u, v);
            if w.is_finite() {
                sorted.push((w, u, v));
            }
        }
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = PairMask::new(n);
    let mut all = Vec::new();
    for round in 1..=k {
        let mut start = 0;
        while start < sorted.len() {
            let mut end = start + 1;
            while end < sorted.len() && d.ties(sorted[start].0, sorted[end].0) {
                end += 1;
            }
            sorted[start..end].shuffle(&mut rng);
            start = end;
        }
        let mut sets = DisjointSets::new(n);
        let mut tree = Vec::with_capacity(n.saturating_sub(1));
        for &(_, u, v) in &sorted {
            if !mask.get(u, v) && sets.union(u, v) {
                tree.push((u, v));
                if tree.len() + 1 == n {
                    break;
                }
            }
        }
        if tree.is_empty() || (round == 1 && tree.len() + 1 != n) {
            return Err(Error::InfeasibleK { k, round, nodes: n });
        }
        for &(u, v) in &tree {
            mask.set(u, v);
        }
        all.extend(tree);
    }
    SimilarityGraph::new(n, all)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Values a..e with distances chosen so that six MSTs exist.
    pub(crate) fn figure_one() -> DistanceMatrix {
        let (a, b, c, dd, e) = (0, 1, 2, 3, 4);
        let mut w = [[3.0f64; 5]; 5];
        for (i, row) in w.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        let mut set = |i: usize, j: usize, x: f64| {
            w[i][j] = x;
            w[j][i] = x;
        };
        set(a, b, 1.0);
        set(a, c, 1.0);
        set(b, c, 1.0);
        set(dd, e, 1.0);
        set(b, dd, 2.0);
        set(c, e, 2.0);
        DistanceMatrix::from_rows(&w.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn matrix(k: usize, f: impl FnMut(usize, usize) -> f64) -> DistanceMatrix {
        DistanceMatrix::from_fn(k, f).unwrap()
    }

    #[test]
    fn two_values_single_edge() {
        let d = matrix(2, |_, _| 7.0);
        assert_eq!(build_nnl(&d).unwrap().edges(), &[(0, 1)]);
        assert!(build_nnl(&matrix(1, |_, _| 0.0)).is_err());
    }

    #[test]
    fn figure_one_union_of_msts() {
        let g = build_nnl(&figure_one()).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4)]);
    }

    #[test]
    fn knnl_small_cases() {
        let d = matrix(3, |u, v| (u + 2 * v) as f64);
        assert_eq!(build_knnl(&d, 1).unwrap(), build_nnl(&d).unwrap());
        assert_eq!(build_knnl(&d, 2).unwrap().len(), 3);
        assert!(matches!(
            build_knnl(&d, 3),
            Err(Error::InfeasibleK { k: 3, round: 3, nodes: 3 })
        ));
        let disconnected = matrix(3, |u, v| if u == 0 && v == 1 { 1.0 } else { f64::INFINITY });
        assert!(build_nnl(&disconnected).is_err());
        assert!(build_knnl(&d, 0).is_err());
    }

    #[test]
    fn kmst_distinct_weights_ignore_seed() {
        let d = matrix(6, |u, v| (u * 7 + v * v * 3) as f64 + 0.01 * v as f64);
        let first = build_kmst(&d, 1, 0).unwrap();
        for s in 1..10 {
            assert_eq!(build_kmst(&d, 1, s).unwrap(), first);
        }
        assert_eq!(first.len(), 5);
        assert_eq!(build_nnl(&d).unwrap(), first);
        let two = build_kmst(&d, 2, 3).unwrap();
        assert!(first.edges().iter().all(|&(u, v)| two.contains(u, v)));
        assert!(two.len() > 5);
        assert!(matches!(build_kmst(&d, 20, 0), Err(Error::InfeasibleK { .. })));
    }

    #[test]
    fn kmst_seeds_reach_several_trees() {
        let d = figure_one();
        let nnl = build_nnl(&d).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..64 {
            let t = build_kmst(&d, 1, s).unwrap();
            assert_eq!(t.len(), 4);
            assert!(t.edges().iter().all(|&(u, v)| nnl.contains(u, v)));
            seen.insert(t.edges().to_vec());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(build_kmst(&d, 1, 5).unwrap(), build_kmst(&d, 1, 5).unwrap());
    }

    #[test]
    fn component_order_matters_with_cyclic_ties() {
        // Three pairs joined in a cycle by equally long links: growing the
        // first pair adds two links, growing the last pair adds a different two.
        let pair = |u: usize| u / 2;
        let d = matrix(6, |u, v| {
            if pair(u) == pair(v) {
                1.0
            } else if (u, v) == (1, 2) || (u, v) == (3, 4) || (u, v) == (0, 5) {
                3.0
            } else {
                10.0
            }
        });
        let low = build_nnl_ordered(&d, ComponentOrder::Lowest).unwrap();
        let high = build_nnl_ordered(&d, ComponentOrder::Highest).unwrap();
        assert_eq!(low.len(), 5);
        assert_eq!(high.len(), 5);
        assert_ne!(low, high);
    }
}
