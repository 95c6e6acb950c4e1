//! Observations, deduplication into distinct values, and distances between
//! distinct values.
//!
//! Observations are grouped by exact equality of a canonical byte encoding of
//! their payload. Distinct values are numbered in order of first appearance.

mod distance;
pub mod io;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use distance::{
    distance_euclidean, distance_footrule, distance_frobenius_sq, distance_kendall,
    distance_spearman, pairwise_distances, DistanceMatrix, Metric,
};

/// Sample membership of an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sample {
    One,
    Two,
}

impl Sample {
    pub fn from_label(label: i64) -> Result<Sample> {
        match label {
            1 => Ok(Sample::One),
            2 => Ok(Sample::Two),
            other => Err(Error::Domain(format!("sample label must be 1 or 2, got {other}"))),
        }
    }

    pub fn label(self) -> u8 {
        match self {
            Sample::One => 1,
            Sample::Two => 2,
        }
    }

    pub fn swapped(self) -> Sample {
        match self {
            Sample::One => Sample::Two,
            Sample::Two => Sample::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PayloadKind {
    Vector,
    Network,
    Ranking,
}

/// The data carried by one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    /// Real vector of fixed dimension.
    Vector(Vec<f64>),
    /// Square 0/1 adjacency matrix, row-major.
    Network { nodes: usize, entries: Vec<u8> },
    /// Permutation of 1..n, written as the sequence of objects from first to last place.
    Ranking(Vec<u32>),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Vector(_) => PayloadKind::Vector,
            Payload::Network { .. } => PayloadKind::Network,
            Payload::Ranking(_) => PayloadKind::Ranking,
        }
    }

    /// Length for vectors and rankings, node count for networks.
    pub fn shape(&self) -> usize {
        match self {
            Payload::Vector(v) => v.len(),
            Payload::Network { nodes, .. } => *nodes,
            Payload::Ranking(r) => r.len(),
        }
    }

    /// Builds a network payload, checking squareness and 0/1 entries.
    pub fn network(nodes: usize, entries: Vec<u8>) -> Result<Payload> {
        if entries.len() != nodes * nodes {
            return Err(Error::Shape(format!(
                "adjacency matrix with {nodes} nodes needs {} entries, got {}",
                nodes * nodes,
                entries.len()
            )));
        }
        if entries.iter().any(|&e| e > 1) {
            return Err(Error::Domain("adjacency entries must be 0 or 1".into()));
        }
        Ok(Payload::Network { nodes, entries })
    }

    /// Builds a ranking payload, checking that it is a bijection on 1..n.
    pub fn ranking(order: Vec<u32>) -> Result<Payload> {
        check_permutation(&order)?;
        Ok(Payload::Ranking(order))
    }

    pub fn vector(values: Vec<f64>) -> Result<Payload> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("vector entries must be finite".into()));
        }
        Ok(Payload::Vector(values))
    }

    /// Canonical byte encoding; two payloads are the same distinct value iff
    /// their encodings are equal.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Payload::Vector(v) => {
                out.push(0);
                for &x in v {
                    // -0.0 and 0.0 compare equal, so they encode equal.
                    let x = if x == 0.0 { 0.0 } else { x };
                    out.extend_from_slice(&x.to_bits().to_be_bytes());
                }
            }
            Payload::Network { nodes, entries } => {
                out.push(1);
                out.extend_from_slice(&(*nodes as u64).to_be_bytes());
                out.extend_from_slice(entries);
            }
            Payload::Ranking(r) => {
                out.push(2);
                for &x in r {
                    out.extend_from_slice(&x.to_be_bytes());
                }
            }
        }
        out
    }
}

pub fn check_permutation(order: &[u32]) -> Result<()> {
    let n = order.len();
    let mut seen = vec![false; n];
    for &x in order {
        let i = x as usize;
        if i == 0 || i > n || seen[i - 1] {
            return Err(Error::NotPermutation(format!("{order:?} is not a permutation of 1..{n}")));
        }
        seen[i - 1] = true;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub payload: Payload,
    pub sample: Sample,
}

impl Observation {
    pub fn new(payload: Payload, sample: Sample) -> Self {
        Observation { payload, sample }
    }
}

/// Per-distinct-value sample counts.
///
/// Row `u` holds `n1[u]`, `n2[u]` and `m[u] = n1[u] + n2[u]`. The table also
/// remembers which observations fall on each value, so observation-level
/// graphs can be materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctTable {
    n1: Vec<u64>,
    n2: Vec<u64>,
    assignment: Vec<usize>,
    labels: Vec<Sample>,
    members: Vec<Vec<usize>>,
    representatives: Option<Vec<Payload>>,
}

impl DistinctTable {
    /// Builds a table from observation labels and their distinct-value
    /// indices (0-based). Every index in `0..k` must be used.
    pub fn from_assignment(labels: Vec<Sample>, assignment: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("no observations".into()));
        }
        if labels.len() != assignment.len() {
            return Err(Error::SizeMismatch {
                expected: labels.len(),
                found: assignment.len(),
            });
        }
        let mut n1 = vec![0u64; k];
        let mut n2 = vec![0u64; k];
        let mut members = vec![Vec::new(); k];
        for (i, (&s, &u)) in labels.iter().zip(&assignment).enumerate() {
            if u >= k {
                return Err(Error::Domain(format!(
                    "observation {} maps to value {} but only {k} values exist",
                    i + 1,
                    u + 1
                )));
            }
            match s {
                Sample::One => n1[u] += 1,
                Sample::Two => n2[u] += 1,
            }
            members[u].push(i);
        }
        if let Some(u) = members.iter().position(|m| m.is_empty()) {
            return Err(Error::Domain(format!("distinct value {} has no observations", u + 1)));
        }
        Ok(DistinctTable {
            n1,
            n2,
            assignment,
            labels,
            members,
            representatives: None,
        })
    }

    pub fn k(&self) -> usize {
        self.n1.len()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n1_total(&self) -> u64 {
        self.n1.iter().sum()
    }

    pub fn n2_total(&self) -> u64 {
        self.n2.iter().sum()
    }

    pub fn n1(&self) -> &[u64] {
        &self.n1
    }

    pub fn n2(&self) -> &[u64] {
        &self.n2
    }

    pub fn m(&self, u: usize) -> u64 {
        self.n1[u] + self.n2[u]
    }

    pub fn multiplicities(&self) -> Vec<u64> {
        self.n1.iter().zip(&self.n2).map(|(a, b)| a + b).collect()
    }

    /// Distinct-value index of each observation.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn labels(&self) -> &[Sample] {
        &self.labels
    }

    /// Observation indices sharing value `u`, in input order.
    pub fn members(&self, u: usize) -> &[usize] {
        &self.members[u]
    }

    pub fn representatives(&self) -> Option<&[Payload]> {
        self.representatives.as_deref()
    }

    /// Same values and multiplicities under a new labelling of the observations.
    pub fn relabeled(&self, labels: Vec<Sample>) -> Result<Self> {
        let mut t = DistinctTable::from_assignment(labels, self.assignment.clone(), self.k())?;
        t.representatives = self.representatives.clone();
        Ok(t)
    }

    /// Exchanges the roles of sample 1 and sample 2.
    pub fn swapped(&self) -> Self {
        let labels = self.labels.iter().map(|s| s.swapped()).collect();
        let mut t = self.clone();
        t.labels = labels;
        std::mem::swap(&mut t.n1, &mut t.n2);
        t
    }

    /// Replicates each representative `m[u]` times with the recorded labels.
    pub fn expand(&self) -> Option<Vec<Observation>> {
        let reps = self.representatives.as_ref()?;
        Some(
            self.assignment
                .iter()
                .zip(&self.labels)
                .map(|(&u, &s)| Observation::new(reps[u].clone(), s))
                .collect(),
        )
    }
}

/// Groups observations into distinct values by exact payload equality.
pub fn deduplicate(observations: &[Observation]) -> Result<DistinctTable> {
    let first = observations
        .first()
        .ok_or_else(|| Error::Domain("no observations".into()))?;
    let (kind, shape) = (first.payload.kind(), first.payload.shape());
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut reps = Vec::new();
    let mut assignment = Vec::with_capacity(observations.len());
    for (i, obs) in observations.iter().enumerate() {
        if obs.payload.kind() != kind || obs.payload.shape() != shape {
            return Err(Error::Shape(format!(
                "observation {} is {:?} of size {}, expected {:?} of size {}",
                i + 1,
                obs.payload.kind(),
                obs.payload.shape(),
                kind,
                shape
            )));
        }
        let key = obs.payload.canonical_bytes();
        let next = reps.len();
        let u = *index.entry(key).or_insert(next);
        if u == next {
            reps.push(obs.payload.clone());
        }
        assignment.push(u);
    }
    let labels = observations.iter().map(|o| o.sample).collect();
    let mut table = DistinctTable::from_assignment(labels, assignment, reps.len())?;
    table.representatives = Some(reps);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank(v: &[u32], s: Sample) -> Observation {
        Observation::new(Payload::ranking(v.to_vec()).unwrap(), s)
    }

    #[test]
    fn single_repeated_value() {
        let p = Payload::vector(vec![1.0, 2.0]).unwrap();
        let obs = vec![
            Observation::new(p.clone(), Sample::One),
            Observation::new(p.clone(), Sample::One),
            Observation::new(p, Sample::Two),
        ];
        let t = deduplicate(&obs).unwrap();
        assert_eq!(t.k(), 1);
        assert_eq!(t.n1(), &[2]);
        assert_eq!(t.n2(), &[1]);
        assert_eq!(t.n(), 3);
    }

    #[test]
    fn rankings_counted_in_first_appearance_order() {
        let obs = vec![
            rank(&[1, 2, 3], Sample::One),
            rank(&[1, 2, 3], Sample::Two),
            rank(&[2, 1, 3], Sample::One),
            rank(&[3, 2, 1], Sample::Two),
        ];
        let t = deduplicate(&obs).unwrap();
        assert_eq!(t.k(), 3);
        assert_eq!(t.multiplicities(), vec![2, 1, 1]);
        assert_eq!(t.members(0), &[0, 1]);
        assert_eq!(t.representatives().unwrap()[1], Payload::Ranking(vec![2, 1, 3]));
    }

    #[test]
    fn empty_and_heterogeneous_inputs_rejected() {
        assert!(matches!(deduplicate(&[]), Err(Error::Domain(_))));
        let obs = vec![
            rank(&[1, 2, 3], Sample::One),
            rank(&[1, 2, 3, 4], Sample::Two),
        ];
        assert!(matches!(deduplicate(&obs), Err(Error::Shape(_))));
        let obs = vec![
            rank(&[1, 2], Sample::One),
            Observation::new(Payload::vector(vec![1.0, 2.0]).unwrap(), Sample::Two),
        ];
        assert!(matches!(deduplicate(&obs), Err(Error::Shape(_))));
    }

    #[test]
    fn signed_zero_is_one_value() {
        let obs = vec![
            Observation::new(Payload::vector(vec![0.0]).unwrap(), Sample::One),
            Observation::new(Payload::vector(vec![-0.0]).unwrap(), Sample::Two),
        ];
        assert_eq!(deduplicate(&obs).unwrap().k(), 1);
    }

    #[test]
    fn invalid_payloads() {
        assert!(Payload::ranking(vec![1, 1, 3]).is_err());
        assert!(Payload::ranking(vec![0, 1, 2]).is_err());
        assert!(Payload::network(2, vec![0, 1, 1]).is_err());
        assert!(Payload::network(2, vec![0, 2, 1, 0]).is_err());
        assert!(Payload::vector(vec![f64::NAN]).is_err());
    }

    #[test]
    fn swapped_exchanges_counts() {
        let obs = vec![rank(&[1, 2], Sample::One), rank(&[2, 1], Sample::One), rank(&[2, 1], Sample::Two)];
        let t = deduplicate(&obs).unwrap().swapped();
        assert_eq!(t.n1(), &[0, 1]);
        assert_eq!(t.n2(), &[1, 1]);
        assert_eq!(t.labels()[0], Sample::Two);
    }
}
