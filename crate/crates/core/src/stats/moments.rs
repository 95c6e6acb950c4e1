use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{fixed_graph_moments, GraphQuantities, Summary, Weights};
use crate::dataset::DistinctTable;
use crate::error::{Error, Result};
use crate::graph::{SimilarityGraph, UnionGraphSummary};

/// A null variance below `DEGENERACY_RATIO * max(1, mean^2)` is treated as zero.
pub const DEGENERACY_RATIO: f64 = 1e-9;

pub(crate) fn rat(num: i128, den: i128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Permutation-null mean and variance of one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub mean: f64,
    pub var: f64,
}

impl Moment {
    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }

    /// Standardized value `(x - mean) / sd`.
    pub fn z(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd()
    }

    /// A NaN variance counts as degenerate.
    pub(crate) fn is_degenerate(&self) -> bool {
        self.var.is_nan() || self.var < DEGENERACY_RATIO * self.mean.powi(2).max(1.0)
    }
}

/// Null moments of every count-based statistic under one summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryMoments {
    pub r0: Moment,
    pub r1: Moment,
    pub r2: Moment,
    pub rw: Moment,
    pub rd: Moment,
    /// `Cov(R1, R2)`.
    pub cov12: f64,
}

impl SummaryMoments {
    pub(crate) fn check(&self, tag: &str) -> Result<()> {
        for (name, m) in [("R0", &self.r0), ("R_w", &self.rw), ("R_d", &self.rd)] {
            if m.is_degenerate() {
                return Err(Error::DegenerateNull {
                    statistic: format!("{name},({tag})"),
                    variance: m.var,
                    mean: m.mean,
                });
            }
        }
        Ok(())
    }
}

/// Falling-factorial sampling probabilities for `n1` and `n2` out of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub f1: f64,
}

pub(crate) struct ExactConstants {
    pub p: [BigRational; 3],
    pub q: [BigRational; 3],
    pub f1: BigRational,
}

impl ExactConstants {
    pub fn new(n1: u64, n2: u64) -> Self {
        let n = (n1 + n2) as i128;
        let falling = |x: i128| -> [BigRational; 3] {
            let mut acc = rat(x * (x - 1), n * (n - 1));
            let mut out = [acc.clone(), BigRational::zero(), BigRational::zero()];
            for (i, slot) in out.iter_mut().enumerate().skip(1) {
                let j = i as i128 + 1;
                acc *= rat(x - j, n - j);
                *slot = acc.clone();
            }
            out
        };
        let (a, b) = (n1 as i128, n2 as i128);
        ExactConstants {
            p: falling(a),
            q: falling(b),
            f1: rat(a * (a - 1), n * (n - 1)) * rat(b * (b - 1), (n - 2) * (n - 3)),
        }
    }

    fn to_f64(&self) -> Constants {
        Constants {
            p1: to_f64(&self.p[0]),
            p2: to_f64(&self.p[1]),
            p3: to_f64(&self.p[2]),
            q1: to_f64(&self.q[0]),
            q2: to_f64(&self.q[1]),
            q3: to_f64(&self.q[2]),
            f1: to_f64(&self.f1),
        }
    }
}

/// Null moments under both summaries for fixed sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n1: u64,
    pub n2: u64,
    pub weights: Weights,
    pub constants: Constants,
    pub averaging: SummaryMoments,
    pub union: SummaryMoments,
}

impl MomentSet {
    pub fn get(&self, s: Summary) -> &SummaryMoments {
        match s {
            Summary::Averaging => &self.averaging,
            Summary::Union => &self.union,
        }
    }

    /// Fails with [`Error::DegenerateNull`] when a standardized statistic has
    /// (numerically) zero null variance.
    pub fn validate(&self) -> Result<()> {
        for s in Summary::BOTH {
            self.get(s).check(s.tag())?;
        }
        Ok(())
    }
}

/// Coefficients of a variance in the basis `A, L^2, B, Kc`.
struct Basis([BigRational; 4]);

impl Basis {
    fn eval(&self, x: &[f64; 4]) -> f64 {
        self.0.iter().zip(x).map(|(c, v)| to_f64(c) * v).sum()
    }

    fn combine(terms: &[(&BigRational, &Basis)]) -> Basis {
        let mut out: [BigRational; 4] = Default::default();
        for (w, b) in terms {
            for (o, c) in out.iter_mut().zip(&b.0) {
                *o += *w * c;
            }
        }
        Basis(out)
    }
}

fn averaging_variance(p: &[BigRational; 3]) -> Basis {
    let [p1, p2, p3] = p;
    let two = rat(2, 1);
    Basis([
        rat(4, 1) * (p2 - p3),
        p3 - p1 * p1,
        p1 - &two * p2 + p3,
        two * (p1 - rat(4, 1) * p2 + rat(3, 1) * p3),
    ])
}

fn averaging_moments(
    q: &GraphQuantities,
    exact: &ExactConstants,
    n1: u64,
    n2: u64,
    weights: Weights,
) -> SummaryMoments {
    let (n, k, c) = (q.n() as f64, q.k() as f64, q.c0_len() as f64);
    let l = q.family_edges() as f64;
    let a = n - k + 2.0 * c + q.sum_deg_sq_over_4m - q.sum_deg_over_m;
    let kc = k - q.sum_inv_m;
    let b = q.sum_inv_mm;
    let x = [a, l * l, b, kc];

    let v1 = averaging_variance(&exact.p);
    let v2 = averaging_variance(&exact.q);
    let f1 = &exact.f1;
    let p1q1 = &exact.p[0] * &exact.q[0];
    let cov = Basis([f1 * rat(-4, 1), f1 - &p1q1, f1.clone(), f1 * rat(6, 1)]);
    let one = rat(1, 1);
    let two = rat(2, 1);
    let v0 = Basis::combine(&[(&one, &v1), (&one, &v2), (&two, &cov)]);

    let e1 = l * to_f64(&exact.p[0]);
    let e2 = l * to_f64(&exact.q[0]);
    let spread = q.sum_deg_dev_over_4m - (c - k).powi(2) / n;
    let vw = to_f64(f1) * (-4.0 / (n - 2.0) * spread + 2.0 * kc + b - 2.0 * l * l / (n * (n - 1.0)));
    let nn = q.n() as i128;
    let vd = 4.0 * to_f64(&rat(n1 as i128 * n2 as i128, nn * (nn - 1))) * spread;

    SummaryMoments {
        r0: Moment {
            mean: l - e1 - e2,
            var: v0.eval(&x),
        },
        r1: Moment { mean: e1, var: v1.eval(&x) },
        r2: Moment { mean: e2, var: v2.eval(&x) },
        rw: Moment {
            mean: weights.w1 * e1 + weights.w2 * e2,
            var: vw,
        },
        rd: Moment { mean: e1 - e2, var: vd },
        cov12: cov.eval(&x),
    }
}

/// Null moments without the degeneracy check.
pub fn compute_moments(q: &GraphQuantities, n1: u64, n2: u64) -> Result<MomentSet> {
    if n1 + n2 != q.n() {
        return Err(Error::SizeMismatch {
            expected: q.n() as usize,
            found: (n1 + n2) as usize,
        });
    }
    if q.n() < 4 {
        return Err(Error::Domain(format!("null moments need N >= 4, got {}", q.n())));
    }
    let exact = ExactConstants::new(n1, n2);
    let weights = Weights::new(n1, n2);
    Ok(MomentSet {
        n1,
        n2,
        weights,
        constants: exact.to_f64(),
        averaging: averaging_moments(q, &exact, n1, n2, weights),
        union: fixed_graph_moments(n1, n2, q.union_size, q.union_sum_sq),
    })
}

/// Validated null moments for the observed sample sizes of `table`.
pub fn moments(table: &DistinctTable, c0: &SimilarityGraph, union: &UnionGraphSummary) -> Result<MomentSet> {
    let q = GraphQuantities::new(table, c0, union)?;
    let set = compute_moments(&q, table.n1_total(), table.n2_total())?;
    set.validate()?;
    Ok(set)
}
