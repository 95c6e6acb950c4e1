//! Closed forms against exhaustive enumeration on random small instances.

use edgecount::dataset::{DistanceMatrix, DistinctTable, Sample};
use edgecount::graph::{build_nnl, count_graph_family, union_graph_summary, SimilarityGraph};
use edgecount::oracle::{average_over_family, enumerate_permutations, union_counts, ExactCounts, ExhaustiveNull};
use edgecount::stats::{compute_moments, GraphQuantities, Summary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::{Failure, VerifyArgs};

const FAMILY_CAP: u64 = 10_000;

fn instance(r: &mut ChaCha8Rng, max_n: usize) -> Option<(DistinctTable, SimilarityGraph)> {
    let k = r.random_range(2..=6);
    let m: Vec<usize> = (0..k).map(|_| r.random_range(1..=3)).collect();
    let n: usize = m.iter().sum();
    if n < 4 || n > max_n {
        return None;
    }
    let n1 = r.random_range(2..=n - 2);
    let mut labels: Vec<Sample> = (0..n).map(|i| if i < n1 { Sample::One } else { Sample::Two }).collect();
    for i in (1..n).rev() {
        labels.swap(i, r.random_range(0..=i));
    }
    let assignment = m.iter().enumerate().flat_map(|(u, &mu)| std::iter::repeat_n(u, mu)).collect();
    let table = DistinctTable::from_assignment(labels, assignment, k).ok()?;
    let d = DistanceMatrix::from_fn(k, |_, _| r.random_range(1..=3) as f64).ok()?;
    Some((table, build_nnl(&d).ok()?))
}

fn describe(table: &DistinctTable, c0: &SimilarityGraph, check: &str, got: f64, want: f64) -> String {
    json!({
        "check": check,
        "closed_form": got,
        "enumerated": want,
        "multiplicities": table.multiplicities(),
        "n1_per_value": table.n1(),
        "c0": c0.edges().iter().map(|&(u, v)| [u + 1, v + 1]).collect::<Vec<_>>(),
    })
    .to_string()
}

fn pick(p: &edgecount::oracle::SupportPoint, s: Summary) -> &ExactCounts {
    match s {
        Summary::Averaging => &p.averaging,
        Summary::Union => &p.union,
    }
}

fn f(x: &num_rational::BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
}

fn agree(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-10 * want.abs().max(1.0)
}

pub fn run(a: VerifyArgs) -> Result<(), Failure> {
    if a.max_n < 4 {
        return Err(Failure::Input("--max-n must be at least 4".into()));
    }
    let mut r = ChaCha8Rng::seed_from_u64(a.seed);
    let (mut done, mut count_checks, mut moment_checks) = (0, 0, 0);
    while done < a.instances {
        let Some((table, c0)) = instance(&mut r, a.max_n) else { continue };
        done += 1;
        let union = union_graph_summary(&c0, &table)?;
        let q = GraphQuantities::new(&table, &c0, &union)?;
        let fast = q.counts(table.n1());

        let small_family = count_graph_family(&c0, &table)? <= FAMILY_CAP.into();
        let mut exact = vec![(Summary::Union, union_counts(&table, &c0)?)];
        if small_family {
            exact.push((Summary::Averaging, average_over_family(&table, &c0, FAMILY_CAP)?));
        }
        for (s, want) in &exact {
            let c = fast.get(*s);
            for (i, got) in [c.r0, c.r1, c.r2].into_iter().enumerate() {
                count_checks += 1;
                if !agree(got, f(&want[i])) {
                    return Err(Failure::Mismatch(describe(&table, &c0, &format!("R{i},({})", s.tag()), got, f(&want[i]))));
                }
            }
        }

        let mut mom = compute_moments(&q, table.n1_total(), table.n2_total())?;
        if a.inject_fault {
            mom.averaging.r0.var += 1.0;
        }
        let null: ExhaustiveNull = enumerate_permutations(&table, &c0, 1_000_000)?;
        for s in Summary::BOTH {
            let m = mom.get(s);
            for (i, closed) in [&m.r0, &m.r1, &m.r2].into_iter().enumerate() {
                let mean = f(&null.mean(|p| pick(p, s)[i].clone()));
                let var = f(&null.variance(|p| pick(p, s)[i].clone()));
                for (what, got, want) in [("mean", closed.mean, mean), ("var", closed.var, var)] {
                    moment_checks += 1;
                    if !agree(got, want) {
                        return Err(Failure::Mismatch(describe(&table, &c0, &format!("{what} R{i},({})", s.tag()), got, want)));
                    }
                }
            }
            let cov = f(&null.covariance(|p| pick(p, s)[1].clone(), |p| pick(p, s)[2].clone()));
            moment_checks += 1;
            if !agree(m.cov12, cov) {
                return Err(Failure::Mismatch(describe(&table, &c0, &format!("cov R1 R2,({})", s.tag()), m.cov12, cov)));
            }
        }
    }
    println!(
        "verify: {done} instances (N <= {}), {count_checks} count checks and {moment_checks} moment checks passed",
        a.max_n
    );
    Ok(())
}
