use num_rational::BigRational;

use super::moments::{rat, to_f64, ExactConstants, Moment};
use super::{EdgeCounts, SummaryMoments, SummaryStatistics, Weights};
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::graph::ObservationGraph;

/// Exact null moments of edge counts on a fixed observation graph with
/// `size` edges and squared degrees summing to `sum_sq`.
pub fn fixed_graph_moments(n1: u64, n2: u64, size: u64, sum_sq: u128) -> SummaryMoments {
    let exact = ExactConstants::new(n1, n2);
    let g = rat(size as i128, 1);
    let g2 = &g * &g;
    let s2 = rat(sum_sq as i128 - 2 * size as i128, 1);
    let var = |c: &[BigRational; 3]| -> BigRational {
        (&c[0] - &c[2]) * &g + (&c[1] - &c[2]) * &s2 + (&c[2] - &c[0] * &c[0]) * &g2
    };
    let v1 = var(&exact.p);
    let v2 = var(&exact.q);
    let cov = &exact.f1 * (&g2 - &g - &s2) - &exact.p[0] * &exact.q[0] * &g2;
    let e1 = &g * &exact.p[0];
    let e2 = &g * &exact.q[0];

    let n = (n1 + n2) as i128;
    let w1 = rat(n2 as i128 - 1, n - 2);
    let w2 = rat(n1 as i128 - 1, n - 2);
    let two = rat(2, 1);
    let vw = &w1 * &w1 * &v1 + &w2 * &w2 * &v2 + &two * &w1 * &w2 * &cov;
    let ew = &w1 * &e1 + &w2 * &e2;

    let moment = |mean: &BigRational, var: &BigRational| Moment {
        mean: to_f64(mean),
        var: to_f64(var),
    };
    SummaryMoments {
        r0: moment(&(&g - &e1 - &e2), &(&v1 + &v2 + &two * &cov)),
        r1: moment(&e1, &v1),
        r2: moment(&e2, &v2),
        rw: moment(&ew, &vw),
        rd: moment(&(&e1 - &e2), &(&v1 + &v2 - &two * &cov)),
        cov12: to_f64(&cov),
    }
}

/// Statistics of an explicit observation graph under its own permutation null.
pub fn pergraph_statistics(graph: &ObservationGraph, labels: &[Sample], kappas: &[f64]) -> Result<SummaryStatistics> {
    if labels.len() != graph.n() {
        return Err(Error::SizeMismatch {
            expected: graph.n(),
            found: labels.len(),
        });
    }
    if graph.n() < 4 {
        return Err(Error::Domain(format!("null moments need N >= 4, got {}", graph.n())));
    }
    let mut counts = EdgeCounts { r0: 0.0, r1: 0.0, r2: 0.0 };
    for &(i, j) in graph.edges() {
        match (labels[i], labels[j]) {
            (Sample::One, Sample::One) => counts.r1 += 1.0,
            (Sample::Two, Sample::Two) => counts.r2 += 1.0,
            _ => counts.r0 += 1.0,
        }
    }
    let n1 = labels.iter().filter(|&&s| s == Sample::One).count() as u64;
    let n2 = labels.len() as u64 - n1;
    let sum_sq = graph.degrees().iter().map(|&d| d as u128 * d as u128).sum();
    let mom = fixed_graph_moments(n1, n2, graph.len() as u64, sum_sq);
    mom.check("graph")?;
    Ok(SummaryStatistics::standardize(&counts, &mom, Weights::new(n1, n2), kappas))
}
