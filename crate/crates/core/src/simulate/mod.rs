//! Ranking generators and the power-study harness.

mod scenario;

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{check_permutation, Metric};
use crate::error::{Error, Result};

pub use scenario::{Generator, 
    builtin_scenario, builtin_scenario_names, run_scenario, GraphRule, PowerRow, ScenarioConfig, ScenarioResult,
};

/// Largest object count supported by exact enumeration.
pub const MAX_OBJECTS: usize = 8;

/// How the spread parameter multiplies the ranking distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaScale {
    /// `exp(-theta * d)`.
    Raw,
    /// `exp(-theta * d / d_max)`, with `d_max` the largest distance between
    /// two rankings of the same objects (70 for Spearman on six objects).
    #[default]
    Normalized,
}

impl FromStr for ThetaScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ThetaScale::Raw),
            "normalized" => Ok(ThetaScale::Normalized),
            _ => Err(Error::Domain(format!("unknown theta scale {s:?}"))),
        }
    }
}

/// All `n!` rankings of `1..=n` in lexicographic order.
pub fn all_rankings(n: usize) -> Result<Vec<Vec<u32>>> {
    if n == 0 || n > MAX_OBJECTS {
        return Err(Error::Domain(format!("object count must be in 1..={MAX_OBJECTS}, got {n}")));
    }
    Ok((1..=n as u32).permutations(n).collect())
}

fn rank_distance(metric: Metric, a: &[u32], b: &[u32]) -> Result<f64> {
    Ok(match metric {
        Metric::Spearman => crate::dataset::distance_spearman(a, b)? as f64,
        Metric::Kendall => crate::dataset::distance_kendall(a, b)? as f64,
        Metric::Footrule => crate::dataset::distance_footrule(a, b)? as f64,
        other => return Err(Error::Domain(format!("{other:?} is not a ranking distance"))),
    })
}

/// Mallows distribution over all rankings of `n_obj` objects, stored exactly.
#[derive(Debug, Clone)]
pub struct MallowsModel {
    pub n_obj: usize,
    pub theta: f64,
    pub center: Vec<u32>,
    pub metric: Metric,
    pub scale: ThetaScale,
    rankings: Vec<Vec<u32>>,
    probabilities: Vec<f64>,
    normalizer: f64,
}

impl MallowsModel {
    pub fn new(theta: f64, center: Vec<u32>, metric: Metric, scale: ThetaScale) -> Result<Self> {
        check_permutation(&center)?;
        if !theta.is_finite() {
            return Err(Error::Domain(format!("theta must be finite, got {theta}")));
        }
        let n_obj = center.len();
        let rankings = all_rankings(n_obj)?;
        let dist: Vec<f64> = rankings
            .iter()
            .map(|r| rank_distance(metric, r, &center))
            .collect::<Result<_>>()?;
        // Every ranking has a reversal at the maximal distance, so the
        // largest distance to the center is the diameter.
        let c = match scale {
            ThetaScale::Raw => theta,
            ThetaScale::Normalized => theta / dist.iter().copied().fold(1.0, f64::max),
        };
        // Shift by the smallest exponent so the largest weight is 1.
        let shift = dist.iter().map(|&d| -c * d).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = dist.iter().map(|&d| (-c * d - shift).exp()).collect();
        let normalizer: f64 = weights.iter().sum();
        let probabilities = weights.iter().map(|w| w / normalizer).collect();
        Ok(MallowsModel {
            n_obj,
            theta,
            center,
            metric,
            scale,
            rankings,
            probabilities,
            normalizer,
        })
    }

    pub fn rankings(&self) -> &[Vec<u32>] {
        &self.rankings
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `sum exp(-theta' (d - d_min))`, the normalizer relative to the mode.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn probability(&self, ranking: &[u32]) -> Option<f64> {
        self.rankings.iter().position(|r| r == ranking).map(|i| self.probabilities[i])
    }
}

/// `count` iid draws from the model.
pub fn sample_mallows(model: &MallowsModel, count: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = WeightedIndex::new(&model.probabilities).expect("probabilities are positive");
    (0..count).map(|_| model.rankings[dist.sample(&mut rng)].clone()).collect()
}

/// Ranking predicates on the sequence of objects from first to last place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankingFilter {
    Any,
    NotFirst(u32),
    NotLast(u32),
    /// First object placed ahead of the second.
    Before(u32, u32),
    /// At least one of the objects in the top `k` places.
    InTop(usize, Vec<u32>),
    All(Vec<RankingFilter>),
}

impl RankingFilter {
    pub fn matches(&self, r: &[u32]) -> bool {
        let pos = |x: u32| r.iter().position(|&y| y == x);
        match self {
            RankingFilter::Any => true,
            RankingFilter::NotFirst(x) => r.first() != Some(x),
            RankingFilter::NotLast(x) => r.last() != Some(x),
            RankingFilter::Before(a, b) => matches!((pos(*a), pos(*b)), (Some(i), Some(j)) if i < j),
            RankingFilter::InTop(k, xs) => xs.iter().any(|&x| pos(x).is_some_and(|i| i < *k)),
            RankingFilter::All(fs) => fs.iter().all(|f| f.matches(r)),
        }
    }
}

impl fmt::Display for RankingFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankingFilter::Any => write!(f, "any"),
            RankingFilter::NotFirst(x) => write!(f, "not-first:{x}"),
            RankingFilter::NotLast(x) => write!(f, "not-last:{x}"),
            RankingFilter::Before(a, b) => write!(f, "before:{a},{b}"),
            RankingFilter::InTop(k, xs) => write!(f, "top:{k}:{}", xs.iter().join(",")),
            RankingFilter::All(fs) => write!(f, "{}", fs.iter().join("&")),
        }
    }
}

impl FromStr for RankingFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("bad ranking filter {s:?}"));
        let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
        if s.contains('&') {
            return Ok(RankingFilter::All(s.split('&').map(str::parse).collect::<Result<_>>()?));
        }
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head.trim() {
            "any" => Ok(RankingFilter::Any),
            "not-first" => Ok(RankingFilter::NotFirst(num(rest)?)),
            "not-last" => Ok(RankingFilter::NotLast(num(rest)?)),
            "before" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                Ok(RankingFilter::Before(num(a)?, num(b)?))
            }
            "top" => {
                let (k, xs) = rest.split_once(':').ok_or_else(bad)?;
                let k = k.trim().parse().map_err(|_| bad())?;
                Ok(RankingFilter::InTop(k, xs.split(',').map(num).collect::<Result<_>>()?))
            }
            _ => Err(bad()),
        }
    }
}

/// Uniform distribution over the rankings of `n_obj` objects that pass `filter`.
#[derive(Debug, Clone)]
pub struct RestrictedUniform {
    pub filter: RankingFilter,
    support: Vec<Vec<u32>>,
}

impl RestrictedUniform {
    pub fn new(n_obj: usize, filter: RankingFilter) -> Result<Self> {
        let support: Vec<Vec<u32>> = all_rankings(n_obj)?.into_iter().filter(|r| filter.matches(r)).collect();
        if support.is_empty() {
            return Err(Error::Domain(format!("filter {filter} selects no ranking")));
        }
        Ok(RestrictedUniform { filter, support })
    }

    pub fn support(&self) -> &[Vec<u32>] {
        &self.support
    }
}

pub fn sample_restricted_uniform(model: &RestrictedUniform, count: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| model.support[rng.random_range(0..model.support.len())].clone())
        .collect()
}
