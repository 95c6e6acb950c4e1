use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Statistic;
use crate::error::{Error, Result};
use crate::stats::{GraphQuantities, MomentSet, StatisticValues, Summary, SummaryStatistics};

/// Draws per-value sample-1 counts for a uniformly random relabelling with
/// `n1` sample-1 observations, one value at a time.
pub fn sample_label_counts<R: Rng + ?Sized>(m: &[u64], n1: u64, rng: &mut R, out: &mut [u64]) {
    let mut remaining: u64 = m.iter().sum();
    let mut left = n1;
    for (slot, &mu) in out.iter_mut().zip(m) {
        let x = if left == 0 {
            0
        } else if remaining == mu {
            left
        } else if mu == 1 {
            u64::from(rng.random_range(0..remaining) < left)
        } else {
            Hypergeometric::new(remaining, left, mu)
                .expect("valid hypergeometric parameters")
                .sample(rng)
        };
        *slot = x;
        left -= x;
        remaining -= mu;
    }
}

/// Monte-Carlo permutation p-values for every statistic under both summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub permutations: u64,
    pub seed: u64,
    pub statistics: Vec<(Summary, Statistic)>,
    /// Number of draws at least as extreme as observed, per statistic.
    pub exceedances: Vec<u64>,
}

impl PermutationResult {
    /// Add-one estimate `(1 + count) / (1 + B)`.
    pub fn pvalue(&self, summary: Summary, stat: Statistic) -> Option<f64> {
        let i = self.statistics.iter().position(|&(s, t)| s == summary && t == stat)?;
        Some((1 + self.exceedances[i]) as f64 / (1 + self.permutations) as f64)
    }
}

pub(crate) fn statistic_list(kappas: &[f64]) -> Vec<(Summary, Statistic)> {
    let mut out = Vec::new();
    for s in Summary::BOTH {
        out.extend([Statistic::Z0, Statistic::Zw, Statistic::Zd, Statistic::S].map(|t| (s, t)));
        out.extend(kappas.iter().map(|&k| (s, Statistic::M(k))));
    }
    out
}

fn value_of(stats: &SummaryStatistics, stat: Statistic) -> f64 {
    match stat {
        Statistic::Z0 => stats.z0,
        Statistic::Zw => stats.zw,
        Statistic::Zd => stats.zd,
        Statistic::S => stats.s,
        Statistic::M(k) => stats.max_at(k).unwrap_or(f64::NAN),
    }
}

/// Permutation p-values from `b` uniform relabellings. Draw `i` uses a ChaCha8
/// stream seeded by `seed` with stream index `i`, so results do not depend on
/// thread scheduling.
pub fn permutation_pvalues(
    quantities: &GraphQuantities,
    moments: &MomentSet,
    observed: &StatisticValues,
    kappas: &[f64],
    b: u64,
    seed: u64,
) -> Result<PermutationResult> {
    if b == 0 {
        return Err(Error::Domain("permutation count must be at least 1".into()));
    }
    let list = statistic_list(kappas);
    let obs: Vec<f64> = list.iter().map(|&(s, t)| value_of(observed.get(s), t)).collect();
    let m = quantities.multiplicities();
    let n1 = moments.n1;
    let exceedances = (0..b)
        .into_par_iter()
        .map_init(
            || vec![0u64; m.len()],
            |buf, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                sample_label_counts(m, n1, &mut rng, buf);
                let values = crate::stats::statistic_values(quantities, moments, buf, kappas);
                list.iter()
                    .zip(&obs)
                    .map(|(&(s, t), &o)| u64::from(t.at_least_as_extreme(value_of(values.get(s), t), o)))
                    .collect::<Vec<u64>>()
            },
        )
        .reduce(
            || vec![0u64; list.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(PermutationResult {
        permutations: b,
        seed,
        statistics: list,
        exceedances,
    })
}
