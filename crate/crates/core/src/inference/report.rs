use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{condition_diagnostics, permutation_pvalues, pvalue_analytic, Diagnostics, PermutationResult, Statistic};
use crate::dataset::DistinctTable;
use crate::error::{Error, Result};
use crate::graph::{union_graph_summary, SimilarityGraph};
use crate::stats::{moments, statistic_values, GraphQuantities, Moment, Summary, SummaryMoments, SummaryStatistics};

/// `kappa` values reported by default, matching `gamma` = 4, 1, 1/2 at level 0.05.
pub const DEFAULT_KAPPAS: [f64; 3] = [1.31, 1.14, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub kappas: Vec<f64>,
    /// Number of random permutations; zero skips the permutation null.
    pub permutations: u64,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            kappas: DEFAULT_KAPPAS.to_vec(),
            permutations: 0,
            seed: 0,
        }
    }
}

/// One count statistic with its null mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub statistic: String,
    pub value: f64,
    pub mean: f64,
    pub sd: f64,
}

/// One test statistic with its p-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub name: String,
    pub statistic: Statistic,
    pub value: f64,
    pub p_analytic: f64,
    pub p_permutation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub summary: Summary,
    pub breakdown: Vec<BreakdownRow>,
    pub tests: Vec<TestRow>,
    pub statistics: SummaryStatistics,
    pub moments: SummaryMoments,
}

impl SummaryReport {
    pub fn test(&self, stat: Statistic) -> Option<&TestRow> {
        self.tests.iter().find(|r| r.statistic == stat)
    }

    pub fn breakdown_row(&self, name: &str) -> Option<&BreakdownRow> {
        self.breakdown.iter().find(|r| r.statistic == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n: u64,
    pub n1: u64,
    pub n2: u64,
    pub k: usize,
    pub c0_edges: usize,
    pub union_edges: u64,
    pub kappas: Vec<f64>,
    pub seed: u64,
    pub permutations: u64,
    pub averaging: SummaryReport,
    pub union: SummaryReport,
    pub diagnostics: Diagnostics,
}

impl TestReport {
    pub fn get(&self, s: Summary) -> &SummaryReport {
        match s {
            Summary::Averaging => &self.averaging,
            Summary::Union => &self.union,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text tables: breakdown per summary, then statistics side by side.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "N = {} (n1 = {}, n2 = {}), K = {}, |C0| = {}, |union graph| = {}",
            self.n, self.n1, self.n2, self.k, self.c0_edges, self.union_edges
        );
        for s in Summary::BOTH {
            let rep = self.get(s);
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<14}{:>12}{:>12}{:>12}{:>12}", "", "Value", "Mean", "Value-Mean", "SD");
            for r in &rep.breakdown {
                let name = format!("{},({})", r.statistic, s.tag());
                let _ = writeln!(
                    out,
                    "{:<14}{:>12.2}{:>12.2}{:>12.2}{:>12.2}",
                    name,
                    r.value,
                    r.mean,
                    r.value - r.mean,
                    r.sd
                );
            }
        }
        let _ = writeln!(out);
        let perm = self.permutations > 0;
        let header = |out: &mut String| {
            let _ = write!(out, "{:<14}{:>9}{:>9}", "", "Value", "p-value");
            if perm {
                let _ = write!(out, "{:>9}", "perm");
            }
        };
        header(&mut out);
        let _ = write!(out, "  | ");
        header(&mut out);
        let _ = writeln!(out);
        for (a, u) in self.averaging.tests.iter().zip(&self.union.tests) {
            for (i, (row, tag)) in [(a, "a"), (u, "u")].into_iter().enumerate() {
                if i == 1 {
                    let _ = write!(out, "  | ");
                }
                let _ = write!(out, "{:<14}{:>9.2}{:>9.3}", format!("{},({tag})", row.name), row.value, row.p_analytic);
                if perm {
                    let _ = write!(out, "{:>9.3}", row.p_permutation.unwrap_or(f64::NAN));
                }
            }
            let _ = writeln!(out);
        }
        if perm {
            let _ = writeln!(out, "\npermutations: {} (seed {})", self.permutations, self.seed);
        }
        for w in &self.diagnostics.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

fn breakdown(values: &SummaryStatistics, mom: &SummaryMoments) -> Vec<BreakdownRow> {
    let row = |name: &str, value: f64, m: &Moment| BreakdownRow {
        statistic: name.to_string(),
        value,
        mean: m.mean,
        sd: m.sd(),
    };
    let half = Moment {
        mean: (mom.r1.mean + mom.r2.mean) / 2.0,
        var: mom.r0.var / 4.0,
    };
    vec![
        row("R0", values.r0, &mom.r0),
        row("R1", values.r1, &mom.r1),
        row("R2", values.r2, &mom.r2),
        row("(R1+R2)/2", (values.r1 + values.r2) / 2.0, &half),
        row("R_w", values.rw, &mom.rw),
        row("R_d", values.rd, &mom.rd),
    ]
}

fn tests(
    s: Summary,
    values: &SummaryStatistics,
    kappas: &[f64],
    perm: Option<&PermutationResult>,
) -> Result<Vec<TestRow>> {
    let mut list = vec![
        (Statistic::Z0, values.z0),
        (Statistic::S, values.s),
        (Statistic::Zw, values.zw),
        (Statistic::Zd, values.zd.abs()),
    ];
    list.extend(kappas.iter().map(|&k| (Statistic::M(k), values.max_at(k).unwrap_or(f64::NAN))));
    list.into_iter()
        .map(|(stat, value)| {
            Ok(TestRow {
                name: stat.to_string(),
                statistic: stat,
                value,
                p_analytic: pvalue_analytic(stat, value)?,
                p_permutation: perm.and_then(|p| p.pvalue(s, stat)),
            })
        })
        .collect()
}

/// Full pipeline on a deduplicated table and value-level similarity graph.
pub fn run_test(table: &DistinctTable, c0: &SimilarityGraph, config: &TestConfig) -> Result<TestReport> {
    if let Some(&k) = config.kappas.iter().find(|&&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::Domain(format!("kappa must be positive, got {k}")));
    }
    let union = union_graph_summary(c0, table)?;
    let diagnostics = condition_diagnostics(table, c0, &union)?;
    let mset = moments(table, c0, &union)?;
    let q = GraphQuantities::new(table, c0, &union)?;
    let values = statistic_values(&q, &mset, table.n1(), &config.kappas);
    let perm = if config.permutations > 0 {
        Some(permutation_pvalues(&q, &mset, &values, &config.kappas, config.permutations, config.seed)?)
    } else {
        None
    };
    let summary = |s: Summary| -> Result<SummaryReport> {
        let v = values.get(s);
        let mo = mset.get(s);
        Ok(SummaryReport {
            summary: s,
            breakdown: breakdown(v, mo),
            tests: tests(s, v, &config.kappas, perm.as_ref())?,
            statistics: v.clone(),
            moments: *mo,
        })
    };
    Ok(TestReport {
        n: table.n() as u64,
        n1: table.n1_total(),
        n2: table.n2_total(),
        k: table.k(),
        c0_edges: c0.len(),
        union_edges: union.size,
        kappas: config.kappas.clone(),
        seed: config.seed,
        permutations: config.permutations,
        averaging: summary(Summary::Averaging)?,
        union: summary(Summary::Union)?,
        diagnostics,
    })
}
