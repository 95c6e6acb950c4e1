//! p-values, the `kappa` calibration, permutation nulls and test reports.

mod diagnostics;
mod permutation;
mod report;

use std::fmt;

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

pub use diagnostics::{condition_diagnostics, ConditionRatios, Diagnostics};
pub use permutation::{permutation_pvalues, sample_label_counts, PermutationResult};
pub use report::{run_test, BreakdownRow, SummaryReport, TestConfig, TestReport, TestRow, DEFAULT_KAPPAS};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `1 - Phi(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `p` in `(0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    -normal_isf(p)
}

/// Inverse of [`normal_sf`]: the `x` with `1 - Phi(x) = q`.
pub fn normal_isf(q: f64) -> f64 {
    if q > 0.5 {
        return -normal_isf(1.0 - q);
    }
    // Rational tail approximation (absolute error below 5e-4), then Newton.
    let t = (-2.0 * q.ln()).sqrt();
    let mut x = t - (2.515517 + 0.802853 * t + 0.010328 * t * t)
        / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
    for _ in 0..4 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf > 0.0 {
            x += (normal_sf(x) - q) / pdf;
        }
    }
    x
}

/// Statistics that carry a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "kappa")]
pub enum Statistic {
    /// Standardized between-sample count; small values reject.
    Z0,
    /// Standardized weighted count; large values reject.
    Zw,
    /// Standardized difference; large `|Z_d|` rejects.
    Zd,
    /// Generalized statistic `Z_w^2 + Z_d^2`.
    S,
    /// Max-type statistic at the given `kappa`.
    M(f64),
}

impl Statistic {
    /// Whether `perm` is at least as extreme as `observed`.
    pub fn at_least_as_extreme(self, perm: f64, observed: f64) -> bool {
        let tol = 1e-10 * observed.abs().max(1.0);
        match self {
            Statistic::Z0 => perm <= observed + tol,
            Statistic::Zd => perm.abs() >= observed.abs() - tol,
            Statistic::Zw | Statistic::S | Statistic::M(_) => perm >= observed - tol,
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Z0 => write!(f, "Z0"),
            Statistic::Zw => write!(f, "Zw"),
            Statistic::Zd => write!(f, "|Zd|"),
            Statistic::S => write!(f, "S"),
            Statistic::M(k) => write!(f, "M({k})"),
        }
    }
}

/// Asymptotic p-value of one statistic.
pub fn pvalue_analytic(stat: Statistic, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Numeric(format!("{stat} = {value}")));
    }
    let p = match stat {
        Statistic::Z0 => normal_cdf(value),
        Statistic::Zw => normal_sf(value),
        Statistic::Zd => 2.0 * normal_sf(value.abs()),
        Statistic::S => {
            if value < 0.0 {
                return Err(Error::Domain(format!("S must be nonnegative, got {value}")));
            }
            (-value / 2.0).exp()
        }
        Statistic::M(kappa) => {
            if kappa.is_nan() || kappa <= 0.0 {
                return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
            }
            if value <= 0.0 {
                1.0
            } else {
                1.0 - normal_cdf(value / kappa) * (1.0 - 2.0 * normal_sf(value))
            }
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Solves for the `kappa` and threshold `beta` of `M(kappa) >= beta` at level
/// `alpha` where the `Z_w` side carries `gamma` times the type-I error of the
/// `|Z_d|` side.
pub fn solve_kappa(gamma: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    // With t = 1 - Phi(beta): (1 - 2 gamma t)(1 - 2 t) = 1 - alpha.
    let b = 1.0 + gamma;
    let disc = b * b - 4.0 * gamma * alpha;
    let t = alpha / (b + disc.sqrt());
    let tail_w = 2.0 * gamma * t;
    if !(t > 0.0 && t < 0.5 && tail_w < 0.5) {
        return Err(Error::Numeric(format!(
            "no positive (kappa, beta) for gamma = {gamma}, alpha = {alpha}"
        )));
    }
    let beta = normal_isf(t);
    let kappa = beta / normal_isf(tail_w);
    Ok((kappa, beta))
}
