use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_permutation, DistinctTable, Payload, PayloadKind};
use crate::error::{Error, Result};

/// Dissimilarity between two payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Euclidean distance between real vectors.
    Euclidean,
    /// Number of differing entries between adjacency matrices.
    FrobeniusSq,
    /// Spearman's rho distance, the sum of squared position differences.
    Spearman,
    /// Spearman's footrule, the sum of absolute position differences.
    Footrule,
    /// Number of discordant pairs.
    Kendall,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "frobenius-sq" | "frobenius" => Ok(Metric::FrobeniusSq),
            "spearman" => Ok(Metric::Spearman),
            "footrule" => Ok(Metric::Footrule),
            "kendall" => Ok(Metric::Kendall),
            _ => Err(Error::Domain(format!("unknown metric {s:?}"))),
        }
    }
}

impl Metric {
    pub fn applies_to(self, kind: PayloadKind) -> bool {
        matches!(
            (self, kind),
            (Metric::Euclidean, PayloadKind::Vector)
                | (Metric::FrobeniusSq, PayloadKind::Network)
                | (Metric::Spearman | Metric::Footrule | Metric::Kendall, PayloadKind::Ranking)
        )
    }

    /// Whether the metric only produces integers.
    pub fn is_integer(self) -> bool {
        !matches!(self, Metric::Euclidean)
    }

    pub fn default_for(kind: PayloadKind) -> Metric {
        match kind {
            PayloadKind::Vector => Metric::Euclidean,
            PayloadKind::Network => Metric::FrobeniusSq,
            PayloadKind::Ranking => Metric::Spearman,
        }
    }

    pub fn eval(self, a: &Payload, b: &Payload) -> Result<f64> {
        match (self, a, b) {
            (Metric::Euclidean, Payload::Vector(x), Payload::Vector(y)) => distance_euclidean(x, y),
            (
                Metric::FrobeniusSq,
                Payload::Network { nodes: na, entries: x },
                Payload::Network { nodes: nb, entries: y },
            ) => {
                if na != nb {
                    return Err(Error::Shape(format!("networks with {na} and {nb} nodes")));
                }
                distance_frobenius_sq(x, y).map(|d| d as f64)
            }
            (Metric::Spearman, Payload::Ranking(x), Payload::Ranking(y)) => {
                distance_spearman(x, y).map(|d| d as f64)
            }
            (Metric::Footrule, Payload::Ranking(x), Payload::Ranking(y)) => {
                distance_footrule(x, y).map(|d| d as f64)
            }
            (Metric::Kendall, Payload::Ranking(x), Payload::Ranking(y)) => {
                distance_kendall(x, y).map(|d| d as f64)
            }
            _ => Err(Error::Domain(format!(
                "metric {self:?} does not apply to {:?}/{:?} payloads",
                a.kind(),
                b.kind()
            ))),
        }
    }
}

/// `||A - B||_F^2` for 0/1 matrices, i.e. the number of differing entries.
pub fn distance_frobenius_sq(a: &[u8], b: &[u8]) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as u64)
}

fn check_rankings(a: &[u32], b: &[u32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    check_permutation(a)?;
    check_permutation(b)
}

/// `sum_i (a_i - b_i)^2`.
pub fn distance_spearman(a: &[u32], b: &[u32]) -> Result<u64> {
    check_rankings(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum())
}

/// `sum_i |a_i - b_i|`.
pub fn distance_footrule(a: &[u32], b: &[u32]) -> Result<u64> {
    check_rankings(a, b)?;
    Ok(a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u64).sum())
}

/// Number of index pairs ordered differently by `a` and `b`, in O(n log n).
pub fn distance_kendall(a: &[u32], b: &[u32]) -> Result<u64> {
    check_rankings(a, b)?;
    // Read `a` in the order that sorts `b`; discordant pairs become inversions.
    let mut idx: Vec<usize> = (0..b.len()).collect();
    idx.sort_unstable_by_key(|&i| b[i]);
    let mut seq: Vec<u32> = idx.iter().map(|&i| a[i]).collect();
    let mut buf = vec![0u32; seq.len()];
    Ok(count_inversions(&mut seq, &mut buf))
}

fn count_inversions(seq: &mut [u32], buf: &mut [u32]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = seq.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            buf[k] = seq[i];
            i += 1;
        } else {
            buf[k] = seq[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    inv
}

pub fn distance_euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Symmetric K x K dissimilarities, row-major.
///
/// Integer-valued metrics are stored exactly (values below 2^53), so two
/// distances tie iff `|d - d'| <= tie_tolerance` with the default tolerance 0.
/// Excluded pairs may be represented by `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    k: usize,
    values: Vec<f64>,
    tie_tolerance: f64,
}

impl DistanceMatrix {
    /// Validates shape, symmetry, nonnegativity and the zero diagonal.
    /// Zero off-diagonal entries are allowed here (observation-level
    /// matrices have them); see [`DistanceMatrix::require_separated`].
    pub fn new(k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != k * k {
            return Err(Error::Shape(format!(
                "{k}x{k} distance matrix needs {} entries, got {}",
                k * k,
                values.len()
            )));
        }
        for u in 0..k {
            if values[u * k + u] != 0.0 {
                return Err(Error::Domain(format!("nonzero diagonal at {}", u + 1)));
            }
            for v in 0..u {
                let (a, b) = (values[u * k + v], values[v * k + u]);
                if a.is_nan() || a < 0.0 {
                    return Err(Error::Domain(format!(
                        "distance ({}, {}) = {a} is not a nonnegative number",
                        u + 1,
                        v + 1
                    )));
                }
                if a != b {
                    return Err(Error::Domain(format!(
                        "asymmetric distances at ({}, {}): {a} vs {b}",
                        u + 1,
                        v + 1
                    )));
                }
            }
        }
        Ok(DistanceMatrix {
            k,
            values,
            tie_tolerance: 0.0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::Shape(format!("row of length {} in a {k}x{k} matrix", r.len())));
        }
        Self::new(k, rows.concat())
    }

    /// Builds a matrix from a dissimilarity function on index pairs `u < v`.
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; k * k];
        for u in 0..k {
            for v in (u + 1)..k {
                let d = f(u, v);
                values[u * k + v] = d;
                values[v * k + u] = d;
            }
        }
        Self::new(k, values)
    }

    pub fn with_tie_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::Domain(format!("tie tolerance must be finite and >= 0, got {tol}")));
        }
        self.tie_tolerance = tol;
        Ok(self)
    }

    /// Fails if two different indices are not separated by more than the tie tolerance.
    pub fn require_separated(&self) -> Result<()> {
        for u in 0..self.k {
            for v in (u + 1)..self.k {
                if self.get(u, v) <= self.tie_tolerance {
                    return Err(Error::Consistency(format!(
                        "distinct values {} and {} are at distance {}",
                        u + 1,
                        v + 1,
                        self.get(u, v)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.k + v]
    }

    pub fn tie_tolerance(&self) -> f64 {
        self.tie_tolerance
    }

    /// Whether `a` and `b` count as the same distance.
    #[inline]
    pub fn ties(&self, a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= self.tie_tolerance
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.values[u * self.k..(u + 1) * self.k]
    }

    /// Observation-level matrix: observations of the same value are at distance 0.
    pub fn expand(&self, table: &DistinctTable) -> Result<DistanceMatrix> {
        if table.k() != self.k {
            return Err(Error::SizeMismatch {
                expected: self.k,
                found: table.k(),
            });
        }
        let a = table.assignment();
        let mut out = DistanceMatrix::from_fn(a.len(), |i, j| self.get(a[i], a[j]))?;
        out.tie_tolerance = self.tie_tolerance;
        Ok(out)
    }
}

/// Distances between the representatives of every pair of distinct values.
pub fn pairwise_distances(table: &DistinctTable, metric: Metric) -> Result<DistanceMatrix> {
    let reps = table
        .representatives()
        .ok_or_else(|| Error::Domain("table has no representative payloads".into()))?;
    let k = reps.len();
    if let Some(p) = reps.first() {
        if !metric.applies_to(p.kind()) {
            return Err(Error::Domain(format!("metric {metric:?} does not apply to {:?}", p.kind())));
        }
    }
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|u| {
            (0..k)
                .map(|v| if u == v { Ok(0.0) } else { metric.eval(&reps[u], &reps[v]) })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let d = DistanceMatrix::from_rows(&rows)?;
    d.require_separated()?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{deduplicate, Observation, Sample};
    use proptest::prelude::*;

    fn kendall_pairs(a: &[u32], b: &[u32]) -> u64 {
        let mut c = 0;
        for i in 0..a.len() {
            for j in (i + 1)..a.len() {
                let sa = (a[i] as i64 - a[j] as i64).signum();
                let sb = (b[i] as i64 - b[j] as i64).signum();
                if sa * sb < 0 {
                    c += 1;
                }
            }
        }
        c
    }

    fn perm_strategy(n: usize) -> impl Strategy<Value = Vec<u32>> {
        Just((1..=n as u32).collect::<Vec<_>>()).prop_shuffle()
    }

    #[test]
    fn frobenius_examples() {
        let a = vec![0, 1, 1, 0, 1, 0, 0, 1, 0];
        assert_eq!(distance_frobenius_sq(&a, &a).unwrap(), 0);
        let mut b = a.clone();
        b[0] = 1;
        b[4] = 0;
        b[8] = 1;
        assert_eq!(distance_frobenius_sq(&a, &b).unwrap(), 3);
        assert!(distance_frobenius_sq(&a, &b[..4]).is_err());
    }

    #[test]
    fn spearman_and_kendall_examples() {
        assert_eq!(distance_spearman(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0);
        assert_eq!(distance_spearman(&[1, 2, 3], &[3, 2, 1]).unwrap(), 8);
        assert_eq!(distance_footrule(&[1, 2, 3], &[3, 2, 1]).unwrap(), 4);
        assert_eq!(distance_kendall(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0);
        assert_eq!(distance_kendall(&[1, 2, 3], &[2, 1, 3]).unwrap(), 1);
        assert_eq!(distance_kendall(&[1, 2, 3], &[3, 2, 1]).unwrap(), 3);
        assert!(matches!(distance_kendall(&[1, 2], &[1, 2, 3]), Err(Error::SizeMismatch { .. })));
        assert!(matches!(distance_spearman(&[1, 1, 3], &[1, 2, 3]), Err(Error::NotPermutation(_))));
    }

    proptest! {
        #[test]
        fn rank_distances_match_loops(a in perm_strategy(6), b in perm_strategy(6), relabel in perm_strategy(6)) {
            let sp: u64 = a.iter().zip(&b).map(|(&x, &y)| ((x as i64 - y as i64).pow(2)) as u64).sum();
            prop_assert_eq!(distance_spearman(&a, &b).unwrap(), sp);
            prop_assert_eq!(distance_kendall(&a, &b).unwrap(), kendall_pairs(&a, &b));
            prop_assert_eq!(distance_kendall(&a, &b).unwrap(), distance_kendall(&b, &a).unwrap());
            // relabel objects (coordinates of the rank vectors) in both rankings
            let pa: Vec<u32> = relabel.iter().map(|&i| a[i as usize - 1]).collect();
            let pb: Vec<u32> = relabel.iter().map(|&i| b[i as usize - 1]).collect();
            prop_assert_eq!(distance_kendall(&pa, &pb).unwrap(), distance_kendall(&a, &b).unwrap());
            prop_assert_eq!(distance_spearman(&pa, &pb).unwrap(), distance_spearman(&a, &b).unwrap());
            prop_assert_eq!(distance_footrule(&pa, &pb).unwrap(), distance_footrule(&a, &b).unwrap());
        }

        #[test]
        fn frobenius_matches_entrywise(a in prop::collection::vec(0u8..2, 25), b in prop::collection::vec(0u8..2, 25)) {
            let mut c = 0;
            for i in 0..5 { for j in 0..5 { if a[i * 5 + j] != b[i * 5 + j] { c += 1; } } }
            prop_assert_eq!(distance_frobenius_sq(&a, &b).unwrap(), c);
        }
    }

    #[test]
    fn matrix_validation() {
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
        let d = DistanceMatrix::new(2, vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(d.require_separated(), Err(Error::Consistency(_))));
        let d = DistanceMatrix::new(2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(d.clone().with_tie_tolerance(0.5).unwrap().require_separated().is_err());
        assert!(d.require_separated().is_ok());
    }

    #[test]
    fn pairwise_over_rankings() {
        let obs: Vec<Observation> = [[1, 2, 3], [3, 2, 1], [1, 2, 3], [2, 1, 3]]
            .iter()
            .map(|r| Observation::new(Payload::ranking(r.to_vec()).unwrap(), Sample::One))
            .collect();
        let t = deduplicate(&obs).unwrap();
        let d = pairwise_distances(&t, Metric::Spearman).unwrap();
        assert_eq!(d.k(), 3);
        assert_eq!(d.get(0, 1), 8.0);
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(2, 1), d.get(1, 2));
        assert!(pairwise_distances(&t, Metric::Euclidean).is_err());
        let e = d.expand(&t).unwrap();
        assert_eq!(e.k(), 4);
        assert_eq!(e.get(0, 2), 0.0);
    }
}
