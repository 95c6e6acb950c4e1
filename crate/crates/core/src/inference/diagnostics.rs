use serde::{Deserialize, Serialize};

use crate::dataset::DistinctTable;
use crate::error::Result;
use crate::graph::{SimilarityGraph, UnionGraphSummary};
use crate::stats::{compute_moments, GraphQuantities, Summary};

/// Scale-free versions of the sums that govern the asymptotic null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionRatios {
    /// `|C0| / N`.
    pub c0_edges: f64,
    /// `sum_{C0} 1/(m_u m_v) / N`.
    pub c0_inverse_weights: f64,
    /// `K / N`.
    pub distinct_values: f64,
    /// `sum_u 1/m_u / N`.
    pub inverse_multiplicities: f64,
    /// Node-level third-moment sum for averaging, over `N^{3/2}`.
    pub averaging_nodes: f64,
    /// Edge-level third-moment sum for averaging, over `N^{3/2}`.
    pub averaging_edges: f64,
    /// `(sum_u (|E_u| - 2)^2 / (4 m_u) - (|C0| - K)^2 / N) / N`.
    pub averaging_spread: f64,
    /// `|G-bar| / N`.
    pub union_edges: f64,
    /// `(sum_i |E_i|^2 - 4 |G-bar|^2 / N) / N`.
    pub union_spread: f64,
    /// Node-level third-moment sum for the union graph, over `N^{3/2}`.
    pub union_nodes: f64,
    /// Edge-level third-moment sum for the union graph, over `N^{3/2}`.
    pub union_pairs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub ratios: ConditionRatios,
    pub warnings: Vec<String>,
}

pub const SPREAD_FLOOR: f64 = 1e-3;
pub const THIRD_MOMENT_CEILING: f64 = 1.0;

fn common_sum(c0: &SimilarityGraph, u: usize, v: usize, f: impl Fn(usize) -> f64) -> f64 {
    let (a, b) = if c0.degree(u) <= c0.degree(v) { (u, v) } else { (v, u) };
    c0.neighbors(a).iter().filter(|&&w| c0.contains(b, w)).map(|&w| f(w)).sum()
}

/// Condition ratios plus warnings when the analytic p-values look unreliable.
pub fn condition_diagnostics(
    table: &DistinctTable,
    c0: &SimilarityGraph,
    union: &UnionGraphSummary,
) -> Result<Diagnostics> {
    let q = GraphQuantities::new(table, c0, union)?;
    let m: Vec<f64> = q.multiplicities().iter().map(|&x| x as f64).collect();
    let k = m.len();
    let n = q.n() as f64;
    let n32 = n.powf(1.5);
    let deg: Vec<f64> = (0..k).map(|u| c0.degree(u) as f64).collect();
    let second: Vec<f64> = (0..k).map(|u| c0.second_order(u) as f64).collect();
    let nb_mass: Vec<f64> = (0..k).map(|u| c0.neighbors(u).iter().map(|&v| m[v]).sum()).collect();

    let averaging_nodes: f64 = (0..k)
        .map(|u| m[u] * (m[u] + deg[u]) * (m[u] + nb_mass[u] + second[u]))
        .sum();
    let averaging_edges: f64 = c0
        .edges()
        .iter()
        .map(|&(u, v)| {
            let mass = nb_mass[u] + nb_mass[v] - common_sum(c0, u, v, |w| m[w]);
            (m[u] + m[v] + deg[u] + deg[v]) * (m[u] + m[v] + mass + second[u] + second[v])
        })
        .sum();

    // reach[u] = m_u (m_u + sum_{v ~ u} m_v); t[w] = sum_{y ~ w} m_w (m_w + m_y).
    let reach: Vec<f64> = (0..k).map(|u| m[u] * (m[u] + nb_mass[u])).collect();
    let t: Vec<f64> = (0..k).map(|w| m[w] * (deg[w] * m[w] + nb_mass[w])).collect();
    let closed_reach: Vec<f64> = (0..k).map(|u| reach[u] + c0.neighbors(u).iter().map(|&v| reach[v]).sum::<f64>()).collect();
    let closed_t: Vec<f64> = (0..k).map(|u| t[u] + c0.neighbors(u).iter().map(|&v| t[v]).sum::<f64>()).collect();
    let union_nodes: f64 = (0..k)
        .map(|u| m[u].powi(3) * (m[u] + nb_mass[u]) * closed_reach[u])
        .sum();
    let union_pairs: f64 = c0
        .edges()
        .iter()
        .map(|&(u, v)| {
            // Closed neighbourhoods of u and v overlap in u, v and common neighbours.
            let reach_t = closed_t[u] + closed_t[v] - t[u] - t[v] - common_sum(c0, u, v, |w| t[w]);
            m[u] * m[v] * (reach[u] + reach[v]) * reach_t
        })
        .sum();

    let g = q.union_size as f64;
    let ratios = ConditionRatios {
        c0_edges: q.c0_len() as f64 / n,
        c0_inverse_weights: q.sum_inv_mm / n,
        distinct_values: k as f64 / n,
        inverse_multiplicities: q.sum_inv_m / n,
        averaging_nodes: averaging_nodes / n32,
        averaging_edges: averaging_edges / n32,
        averaging_spread: (q.sum_deg_dev_over_4m - (q.c0_len() as f64 - k as f64).powi(2) / n) / n,
        union_edges: g / n,
        union_spread: (q.union_sum_sq as f64 - 4.0 * g * g / n) / n,
        union_nodes: union_nodes / n32,
        union_pairs: union_pairs / n32,
    };

    let mut warnings = Vec::new();
    for (name, value) in [("averaging", ratios.averaging_spread), ("union", ratios.union_spread)] {
        if value < SPREAD_FLOOR {
            warnings.push(format!(
                "{name}: degree spread ratio {value:.3e} is below {SPREAD_FLOOR:e}; (R1, R2) is close to degenerate, prefer permutation p-values"
            ));
        }
    }
    for (name, value) in [
        ("averaging node", ratios.averaging_nodes),
        ("averaging edge", ratios.averaging_edges),
        ("union node", ratios.union_nodes),
        ("union edge", ratios.union_pairs),
    ] {
        if value > THIRD_MOMENT_CEILING {
            warnings.push(format!(
                "{name} third-moment ratio {value:.3e} exceeds {THIRD_MOMENT_CEILING}; hub-like similarity graph, prefer permutation p-values"
            ));
        }
    }
    match compute_moments(&q, table.n1_total(), table.n2_total()) {
        Ok(set) => {
            for s in Summary::BOTH {
                let mo = set.get(s);
                for (name, v) in [("R0", mo.r0), ("R_w", mo.rw), ("R_d", mo.rd)] {
                    if v.is_degenerate() {
                        warnings.push(format!("{name},({}) has degenerate null variance {:.3e}", s.tag(), v.var));
                    }
                }
            }
        }
        Err(e) => warnings.push(format!("null moments unavailable: {e}")),
    }
    Ok(Diagnostics { ratios, warnings })
}
