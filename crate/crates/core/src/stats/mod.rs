//! Extended edge-count statistics and their permutation-null moments.
//!
//! Everything here is computed from the per-value sample-1 counts and a few
//! graph constants, in `O(K + |C0|)` per labelling. Observation-level graphs
//! are only touched by [`pergraph_statistics`].

mod moments;
mod pergraph;

use serde::{Deserialize, Serialize};

use crate::dataset::DistinctTable;
use crate::error::{Error, Result};
use crate::graph::{check_sizes, union_degree, SimilarityGraph, UnionGraphSummary};

pub use moments::{compute_moments, moments, Constants, Moment, MomentSet, SummaryMoments, DEGENERACY_RATIO};
pub use pergraph::{fixed_graph_moments, pergraph_statistics};

/// How statistics are summarized over the graphs induced by `C0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summary {
    /// Arithmetic mean over every graph in the family.
    Averaging,
    /// Statistic on the union of every graph in the family.
    Union,
}

impl Summary {
    pub const BOTH: [Summary; 2] = [Summary::Averaging, Summary::Union];

    pub fn tag(self) -> &'static str {
        match self {
            Summary::Averaging => "a",
            Summary::Union => "u",
        }
    }
}

/// Sample-1 counts per distinct value; sample-2 counts are implied by `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCounts {
    n1u: Vec<u64>,
    m: Vec<u64>,
}

impl LabelCounts {
    pub fn new(n1u: Vec<u64>, m: Vec<u64>) -> Result<Self> {
        if n1u.len() != m.len() {
            return Err(Error::SizeMismatch {
                expected: m.len(),
                found: n1u.len(),
            });
        }
        if let Some(u) = (0..m.len()).find(|&u| n1u[u] > m[u] || m[u] == 0) {
            return Err(Error::Domain(format!(
                "value {}: sample-1 count {} with multiplicity {}",
                u + 1,
                n1u[u],
                m[u]
            )));
        }
        Ok(LabelCounts { n1u, m })
    }

    pub fn from_table(table: &DistinctTable) -> Self {
        LabelCounts {
            n1u: table.n1().to_vec(),
            m: table.multiplicities(),
        }
    }

    pub fn n1u(&self) -> &[u64] {
        &self.n1u
    }

    pub fn m(&self) -> &[u64] {
        &self.m
    }

    pub fn n2u(&self, u: usize) -> u64 {
        self.m[u] - self.n1u[u]
    }

    pub fn k(&self) -> usize {
        self.m.len()
    }

    pub fn n1(&self) -> u64 {
        self.n1u.iter().sum()
    }

    pub fn n(&self) -> u64 {
        self.m.iter().sum()
    }

    pub fn n2(&self) -> u64 {
        self.n() - self.n1()
    }
}

/// Between-sample (`r0`) and within-sample (`r1`, `r2`) edge counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

/// Edge counts under both summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedCounts {
    pub averaging: EdgeCounts,
    pub union: EdgeCounts,
}

impl ExtendedCounts {
    pub fn get(&self, s: Summary) -> &EdgeCounts {
        match s {
            Summary::Averaging => &self.averaging,
            Summary::Union => &self.union,
        }
    }
}

/// Graph-derived constants shared by every labelling of one dataset.
#[derive(Debug, Clone)]
pub struct GraphQuantities {
    m: Vec<u64>,
    inv_m: Vec<f64>,
    edges: Vec<(usize, usize)>,
    inv_mm: Vec<f64>,
    n: u64,
    c0_len: usize,
    /// `sum_u 1/m_u`.
    pub sum_inv_m: f64,
    /// `sum_{(u,v) in C0} 1/(m_u m_v)`.
    pub sum_inv_mm: f64,
    /// `sum_u |E_u|^2 / (4 m_u)`.
    pub sum_deg_sq_over_4m: f64,
    /// `sum_u |E_u| / m_u`.
    pub sum_deg_over_m: f64,
    /// `sum_u (|E_u| - 2)^2 / (4 m_u)`.
    pub sum_deg_dev_over_4m: f64,
    /// `|G-bar|`.
    pub union_size: u64,
    /// `sum_i |E_i|^2` over the union graph.
    pub union_sum_sq: u128,
}

impl GraphQuantities {
    pub fn new(table: &DistinctTable, c0: &SimilarityGraph, union: &UnionGraphSummary) -> Result<Self> {
        check_sizes(c0, table)?;
        if union.incident.len() != table.n() {
            return Err(Error::SizeMismatch {
                expected: table.n(),
                found: union.incident.len(),
            });
        }
        Ok(Self::from_parts(table.multiplicities(), c0, union.size, union.sum_sq))
    }

    /// Builds the constants from multiplicities alone, deriving the union summary.
    pub fn from_multiplicities(m: Vec<u64>, c0: &SimilarityGraph) -> Result<Self> {
        if c0.k() != m.len() {
            return Err(Error::SizeMismatch {
                expected: m.len(),
                found: c0.k(),
            });
        }
        let size = m.iter().map(|&x| x * (x - 1) / 2).sum::<u64>()
            + c0.edges().iter().map(|&(u, v)| m[u] * m[v]).sum::<u64>();
        let sum_sq = (0..m.len())
            .map(|u| {
                let e = union_degree(c0, &m, u) as u128;
                m[u] as u128 * e * e
            })
            .sum();
        Ok(Self::from_parts(m, c0, size, sum_sq))
    }

    fn from_parts(m: Vec<u64>, c0: &SimilarityGraph, union_size: u64, union_sum_sq: u128) -> Self {
        let inv_m: Vec<f64> = m.iter().map(|&x| 1.0 / x as f64).collect();
        let edges = c0.edges().to_vec();
        let inv_mm: Vec<f64> = edges.iter().map(|&(u, v)| inv_m[u] * inv_m[v]).collect();
        let mut sum_deg_sq_over_4m = 0.0;
        let mut sum_deg_over_m = 0.0;
        let mut sum_deg_dev_over_4m = 0.0;
        for u in 0..m.len() {
            let d = c0.degree(u) as f64;
            sum_deg_sq_over_4m += d * d * inv_m[u] / 4.0;
            sum_deg_over_m += d * inv_m[u];
            sum_deg_dev_over_4m += (d - 2.0) * (d - 2.0) * inv_m[u] / 4.0;
        }
        GraphQuantities {
            n: m.iter().sum(),
            c0_len: edges.len(),
            sum_inv_m: inv_m.iter().sum(),
            sum_inv_mm: inv_mm.iter().sum(),
            sum_deg_sq_over_4m,
            sum_deg_over_m,
            sum_deg_dev_over_4m,
            union_size,
            union_sum_sq,
            m,
            inv_m,
            edges,
            inv_mm,
        }
    }

    pub fn k(&self) -> usize {
        self.m.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn c0_len(&self) -> usize {
        self.c0_len
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.m
    }

    /// Edge count shared by every graph in the family, `N - K + |C0|`.
    pub fn family_edges(&self) -> u64 {
        self.n - self.m.len() as u64 + self.c0_len as u64
    }

    /// Closed-form `R0`, `R1`, `R2` under both summaries for sample-1 counts `n1u`.
    pub fn counts(&self, n1u: &[u64]) -> ExtendedCounts {
        let mut a = EdgeCounts { r0: 0.0, r1: 0.0, r2: 0.0 };
        // Union counts are integers; accumulate exactly.
        let (mut u0, mut u1, mut u2) = (0u128, 0u128, 0u128);
        for (u, &x1) in n1u.iter().enumerate() {
            let x2 = self.m[u] - x1;
            let (f1, f2) = (x1 as f64, x2 as f64);
            a.r0 += 2.0 * f1 * f2 * self.inv_m[u];
            a.r1 += f1 * (f1 - 1.0) * self.inv_m[u];
            a.r2 += f2 * (f2 - 1.0) * self.inv_m[u];
            let (w1, w2) = (x1 as u128, x2 as u128);
            u0 += w1 * w2;
            u1 += w1 * w1.saturating_sub(1) / 2;
            u2 += w2 * w2.saturating_sub(1) / 2;
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            let (a1, b1) = (n1u[u], n1u[v]);
            let (a2, b2) = (self.m[u] - a1, self.m[v] - b1);
            let w = self.inv_mm[e];
            a.r0 += (a1 * b2 + b1 * a2) as f64 * w;
            a.r1 += (a1 * b1) as f64 * w;
            a.r2 += (a2 * b2) as f64 * w;
            u0 += (a1 * b2 + b1 * a2) as u128;
            u1 += (a1 * b1) as u128;
            u2 += (a2 * b2) as u128;
        }
        ExtendedCounts {
            averaging: a,
            union: EdgeCounts {
                r0: u0 as f64,
                r1: u1 as f64,
                r2: u2 as f64,
            },
        }
    }
}

/// `R0`, `R1`, `R2` under averaging and union for the given labelling.
pub fn extended_counts(labels: &LabelCounts, c0: &SimilarityGraph) -> Result<ExtendedCounts> {
    let q = GraphQuantities::from_multiplicities(labels.m().to_vec(), c0)?;
    Ok(q.counts(labels.n1u()))
}

/// Weights of `R1` and `R2` in `R_w`: `(n2-1)/(N-2)` and `(n1-1)/(N-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: f64,
    pub w2: f64,
}

impl Weights {
    pub fn new(n1: u64, n2: u64) -> Self {
        let denom = (n1 + n2) as f64 - 2.0;
        Weights {
            w1: (n2 as f64 - 1.0) / denom,
            w2: (n1 as f64 - 1.0) / denom,
        }
    }

    /// The weight `p-hat` on `R2`.
    pub fn p_hat(&self) -> f64 {
        self.w2
    }
}

/// Raw and standardized statistics for one summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStatistics {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub rw: f64,
    pub rd: f64,
    pub z0: f64,
    pub zw: f64,
    pub zd: f64,
    pub s: f64,
    /// `(kappa, M(kappa))` pairs.
    pub max: Vec<(f64, f64)>,
}

impl SummaryStatistics {
    pub fn standardize(counts: &EdgeCounts, mom: &SummaryMoments, weights: Weights, kappas: &[f64]) -> Self {
        let rw = weights.w1 * counts.r1 + weights.w2 * counts.r2;
        let rd = counts.r1 - counts.r2;
        let z0 = mom.r0.z(counts.r0);
        let zw = mom.rw.z(rw);
        let zd = mom.rd.z(rd);
        SummaryStatistics {
            r0: counts.r0,
            r1: counts.r1,
            r2: counts.r2,
            rw,
            rd,
            z0,
            zw,
            zd,
            s: zw * zw + zd * zd,
            max: kappas.iter().map(|&k| (k, max_statistic(zw, zd, k))).collect(),
        }
    }

    pub fn max_at(&self, kappa: f64) -> Option<f64> {
        self.max.iter().find(|(k, _)| *k == kappa).map(|&(_, m)| m)
    }
}

/// Every statistic under both summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticValues {
    pub averaging: SummaryStatistics,
    pub union: SummaryStatistics,
}

impl StatisticValues {
    pub fn get(&self, s: Summary) -> &SummaryStatistics {
        match s {
            Summary::Averaging => &self.averaging,
            Summary::Union => &self.union,
        }
    }
}

/// `R_w` and `Z_w` for one summary.
pub fn weighted_statistic(counts: &ExtendedCounts, moments: &MomentSet, summary: Summary) -> (f64, f64) {
    let c = counts.get(summary);
    let rw = moments.weights.w1 * c.r1 + moments.weights.w2 * c.r2;
    (rw, moments.get(summary).rw.z(rw))
}

/// Generalized statistic `S` for one summary, as `Z_w^2 + Z_d^2`.
pub fn generalized_statistic(counts: &ExtendedCounts, moments: &MomentSet, summary: Summary) -> f64 {
    let c = counts.get(summary);
    let mom = moments.get(summary);
    let zw = mom.rw.z(moments.weights.w1 * c.r1 + moments.weights.w2 * c.r2);
    let zd = mom.rd.z(c.r1 - c.r2);
    zw * zw + zd * zd
}

/// `S` as the quadratic form in `(R1 - E R1, R2 - E R2)` with the inverse
/// 2x2 covariance matrix.
pub fn generalized_statistic_quadratic(counts: &ExtendedCounts, moments: &MomentSet, summary: Summary) -> f64 {
    let c = counts.get(summary);
    let mom = moments.get(summary);
    let x1 = c.r1 - mom.r1.mean;
    let x2 = c.r2 - mom.r2.mean;
    let (v1, v2, cv) = (mom.r1.var, mom.r2.var, mom.cov12);
    (v2 * x1 * x1 - 2.0 * cv * x1 * x2 + v1 * x2 * x2) / (v1 * v2 - cv * cv)
}

/// `M(kappa) = max(kappa Z_w, |Z_d|)`.
pub fn max_statistic(zw: f64, zd: f64, kappa: f64) -> f64 {
    (kappa * zw).max(zd.abs())
}

/// All statistics for the observed labelling of `table`.
pub fn statistic_values(
    quantities: &GraphQuantities,
    moments: &MomentSet,
    n1u: &[u64],
    kappas: &[f64],
) -> StatisticValues {
    let c = quantities.counts(n1u);
    StatisticValues {
        averaging: SummaryStatistics::standardize(&c.averaging, &moments.averaging, moments.weights, kappas),
        union: SummaryStatistics::standardize(&c.union, &moments.union, moments.weights, kappas),
    }
}

#[cfg(test)]
pub(crate) mod tests;
