use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{all_rankings, rank_distance, MallowsModel, RankingFilter, RestrictedUniform, ThetaScale};
use crate::dataset::{DistanceMatrix, DistinctTable, Metric, Sample};
use crate::error::{Error, Result};
use crate::graph::{build_kmst, build_knnl, union_graph_summary, SimilarityGraph};
use crate::inference::{pvalue_analytic, Statistic, DEFAULT_KAPPAS};
use crate::stats::{moments, statistic_values, GraphQuantities, Summary};

/// Similarity-graph rule applied to the distinct values of each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphRule {
    Nnl(usize),
    Mst { k: usize, seed: u64 },
}

impl GraphRule {
    pub fn build(self, d: &DistanceMatrix) -> Result<SimilarityGraph> {
        match self {
            GraphRule::Nnl(k) => build_knnl(d, k),
            GraphRule::Mst { k, seed } => build_kmst(d, k, seed),
        }
    }
}

impl fmt::Display for GraphRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphRule::Nnl(k) => write!(f, "nnl:{k}"),
            GraphRule::Mst { k, seed } => write!(f, "mst:{k}:{seed}"),
        }
    }
}

impl FromStr for GraphRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("bad graph rule {s:?} (expected nnl:<k> or mst:<k>[:<seed>])"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let k = parts.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        match (parts[0], parts.len()) {
            ("nnl", 2) => Ok(GraphRule::Nnl(k)),
            ("mst", 2) => Ok(GraphRule::Mst { k, seed: 0 }),
            ("mst", 3) => Ok(GraphRule::Mst {
                k,
                seed: parts[2].parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Sample generator: `mallows:<theta>:<center>` or `uniform:<filter>`.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Mallows { theta: f64, center: Vec<u32> },
    Uniform(RankingFilter),
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("bad generator {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "mallows" => {
                let (theta, center) = rest.split_once(':').ok_or_else(bad)?;
                Ok(Generator::Mallows {
                    theta: theta.trim().parse().map_err(|_| bad())?,
                    center: center
                        .split(',')
                        .map(|x| x.trim().parse().map_err(|_| bad()))
                        .collect::<Result<_>>()?,
                })
            }
            "uniform" => Ok(Generator::Uniform(rest.parse()?)),
            _ => Err(bad()),
        }
    }
}

fn default_kappas() -> Vec<f64> {
    DEFAULT_KAPPAS.to_vec()
}

fn default_alpha() -> f64 {
    0.05
}

fn default_objects() -> usize {
    6
}

fn default_metric() -> Metric {
    Metric::Spearman
}

/// One power experiment, readable from a flat TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Generator of sample 1, e.g. `mallows:5:1,2,3,4,5,6`.
    pub sample1: String,
    pub sample2: String,
    pub n1: usize,
    pub n2: usize,
    /// `nnl:<k>` or `mst:<k>[:<seed>]`.
    pub graph: String,
    #[serde(default = "default_objects")]
    pub objects: usize,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default)]
    pub theta_scale: ThetaScale,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Rejection rate of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub summary: Summary,
    pub statistic: Statistic,
    pub name: String,
    pub rejections: u64,
    pub power: f64,
    /// Binomial standard error `sqrt(p (1 - p) / replicates)`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub rows: Vec<PowerRow>,
}

impl ScenarioResult {
    pub fn power(&self, summary: Summary, stat: Statistic) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.summary == summary && r.statistic == stat)
            .map(|r| r.power)
    }

    /// One header row of statistic names, one power row per summary.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("summary");
        let names: Vec<&str> = self
            .rows
            .iter()
            .filter(|r| r.summary == Summary::Averaging)
            .map(|r| r.name.as_str())
            .collect();
        for n in &names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for s in Summary::BOTH {
            out.push_str(s.tag());
            for r in self.rows.iter().filter(|r| r.summary == s) {
                out.push_str(&format!(",{:.3}", r.power));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

fn tested(kappas: &[f64]) -> Vec<(Statistic, String)> {
    let mut out = vec![
        (Statistic::Z0, "R0".to_string()),
        (Statistic::S, "S".to_string()),
        (Statistic::Zw, "Rw".to_string()),
        (Statistic::Zd, "|Zd|".to_string()),
    ];
    out.extend(kappas.iter().map(|&k| (Statistic::M(k), format!("M({k})"))));
    out
}

enum Sampler {
    Weighted(WeightedIndex<f64>),
    Uniform(Vec<usize>),
}

impl Sampler {
    fn new(g: &Generator, objects: usize, metric: Metric, scale: ThetaScale, universe: &[Vec<u32>]) -> Result<Self> {
        match g {
            Generator::Mallows { theta, center } => {
                if center.len() != objects {
                    return Err(Error::SizeMismatch {
                        expected: objects,
                        found: center.len(),
                    });
                }
                let model = MallowsModel::new(*theta, center.clone(), metric, scale)?;
                Ok(Sampler::Weighted(
                    WeightedIndex::new(model.probabilities()).map_err(|e| Error::Numeric(e.to_string()))?,
                ))
            }
            Generator::Uniform(filter) => {
                RestrictedUniform::new(objects, filter.clone())?;
                Ok(Sampler::Uniform(
                    (0..universe.len()).filter(|&i| filter.matches(&universe[i])).collect(),
                ))
            }
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            Sampler::Weighted(w) => w.sample(rng),
            Sampler::Uniform(support) => support[rng.random_range(0..support.len())],
        }
    }
}

struct Prepared {
    universe_len: usize,
    distance: Vec<f64>,
    first: Sampler,
    second: Sampler,
    rule: GraphRule,
    tests: Vec<(Statistic, String)>,
}

impl Prepared {
    fn new(config: &ScenarioConfig) -> Result<Self> {
        if config.replicates == 0 {
            return Err(Error::Domain("replicates must be at least 1".into()));
        }
        if config.n1 == 0 || config.n2 == 0 {
            return Err(Error::Domain("both samples must be nonempty".into()));
        }
        if !(config.alpha > 0.0 && config.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", config.alpha)));
        }
        let universe = all_rankings(config.objects)?;
        let u = universe.len();
        let mut distance = vec![0.0; u * u];
        for i in 0..u {
            for j in i + 1..u {
                let d = rank_distance(config.metric, &universe[i], &universe[j])?;
                distance[i * u + j] = d;
                distance[j * u + i] = d;
            }
        }
        let sampler = |text: &str| -> Result<Sampler> {
            Sampler::new(&text.parse()?, config.objects, config.metric, config.theta_scale, &universe)
        };
        Ok(Prepared {
            universe_len: u,
            distance,
            first: sampler(&config.sample1)?,
            second: sampler(&config.sample2)?,
            rule: config.graph.parse()?,
            tests: tested(&config.kappas),
        })
    }

    /// Rejection flags for every (summary, statistic) of one replicate.
    fn replicate(&self, config: &ScenarioConfig, index: u64) -> Result<Vec<bool>> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index);
        let mut draws: Vec<usize> = (0..config.n1).map(|_| self.first.draw(&mut rng)).collect();
        draws.extend((0..config.n2).map(|_| self.second.draw(&mut rng)));
        let mut slot = vec![usize::MAX; self.universe_len];
        let mut values = Vec::new();
        let assignment: Vec<usize> = draws
            .iter()
            .map(|&r| {
                if slot[r] == usize::MAX {
                    slot[r] = values.len();
                    values.push(r);
                }
                slot[r]
            })
            .collect();
        let labels = (0..draws.len())
            .map(|i| if i < config.n1 { Sample::One } else { Sample::Two })
            .collect();
        let table = DistinctTable::from_assignment(labels, assignment, values.len())?;
        let u = self.universe_len;
        let d = DistanceMatrix::from_fn(values.len(), |a, b| self.distance[values[a] * u + values[b]])?;
        let c0 = self.rule.build(&d)?;
        let union = union_graph_summary(&c0, &table)?;
        let mset = moments(&table, &c0, &union)?;
        let q = GraphQuantities::new(&table, &c0, &union)?;
        let stats = statistic_values(&q, &mset, table.n1(), &config.kappas);
        let mut out = Vec::new();
        for s in Summary::BOTH {
            let v = stats.get(s);
            for (t, _) in &self.tests {
                let x = match t {
                    Statistic::Z0 => v.z0,
                    Statistic::Zw => v.zw,
                    Statistic::Zd => v.zd,
                    Statistic::S => v.s,
                    Statistic::M(k) => v.max_at(*k).unwrap_or(f64::NAN),
                };
                out.push(pvalue_analytic(*t, x)? <= config.alpha);
            }
        }
        Ok(out)
    }
}

/// Runs every replicate (in parallel, deterministic per seed) and tallies
/// analytic-p rejections at level `alpha`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    let prep = Prepared::new(config)?;
    let width = 2 * prep.tests.len();
    let counts = (0..config.replicates)
        .into_par_iter()
        .map(|i| {
            prep.replicate(config, i)
                .map(|flags| flags.into_iter().map(u64::from).collect::<Vec<_>>())
                .map_err(|e| (i, e))
        })
        .try_reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
        .map_err(|(index, e)| Error::Replicate {
            index,
            source: Box::new(e),
        })?;
    let r = config.replicates as f64;
    let mut rows = Vec::new();
    let mut it = counts.into_iter();
    for s in Summary::BOTH {
        for (stat, name) in &prep.tests {
            let rejections = it.next().expect("one count per statistic");
            let power = rejections as f64 / r;
            rows.push(PowerRow {
                summary: s,
                statistic: *stat,
                name: name.clone(),
                rejections,
                power,
                se: (power * (1.0 - power) / r).sqrt(),
            });
        }
    }
    Ok(ScenarioResult {
        config: config.clone(),
        rows,
    })
}

const IDENTITY: &str = "1,2,3,4,5,6";
const SWAPPED: &str = "1,2,5,4,3,6";

/// Names accepted by [`builtin_scenario`].
pub fn builtin_scenario_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=8)
        .flat_map(|i| [format!("S{i}-balanced"), format!("S{i}-unbalanced")])
        .collect();
    names.extend(["T4-balanced", "T4-unbalanced", "null"].map(String::from));
    names
}

/// Built-in ranking scenarios with 1000 replicates and seed 1.
pub fn builtin_scenario(name: &str) -> Option<ScenarioConfig> {
    let mallows = |theta: f64, center: &str| format!("mallows:{theta}:{center}");
    let (base, variant) = name.split_once('-').unwrap_or((name, ""));
    let balanced = match variant {
        "balanced" => true,
        "unbalanced" => false,
        "" if base == "null" => true,
        _ => return None,
    };
    let (s1, s2, n1, n2_bal, n2_unbal) = match base {
        "S1" => (mallows(5.0, IDENTITY), mallows(5.0, SWAPPED), 100, 100, 400),
        "S2" => (mallows(5.5, IDENTITY), mallows(4.0, IDENTITY), 300, 300, 600),
        "S3" => (mallows(4.0, IDENTITY), mallows(5.5, IDENTITY), 300, 300, 600),
        "S4" => (mallows(5.5, IDENTITY), mallows(4.0, SWAPPED), 100, 100, 300),
        "S5" => (mallows(4.0, IDENTITY), mallows(5.5, SWAPPED), 100, 100, 300),
        "S6" => ("uniform:not-first:6".into(), "uniform:not-last:1".into(), 150, 150, 250),
        "S7" => ("uniform:before:1,5".into(), "uniform:before:1,6".into(), 150, 150, 250),
        "S8" => (
            "uniform:not-first:6&not-last:1".into(),
            "uniform:top:3:1,2".into(),
            150,
            150,
            250,
        ),
        "T4" => (mallows(5.0, IDENTITY), mallows(5.0, SWAPPED), 80, 80, 400),
        "null" => (mallows(5.0, IDENTITY), mallows(5.0, IDENTITY), 100, 100, 100),
        _ => return None,
    };
    Some(ScenarioConfig {
        name: name.to_string(),
        sample1: s1,
        sample2: s2,
        n1,
        n2: if balanced { n2_bal } else { n2_unbal },
        graph: "nnl:3".into(),
        objects: 6,
        metric: Metric::Spearman,
        theta_scale: ThetaScale::default(),
        alpha: 0.05,
        kappas: default_kappas(),
        replicates: 1000,
        seed: 1,
    })
}
