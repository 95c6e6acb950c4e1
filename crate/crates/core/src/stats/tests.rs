use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataset::Sample;
use crate::graph::{enumerate_graph_family, union_graph_summary, ObservationGraph};

pub(crate) fn table_with_counts(m: &[u64], n1u: &[u64]) -> DistinctTable {
    let mut labels = Vec::new();
    let mut assignment = Vec::new();
    for (u, (&mu, &a)) in m.iter().zip(n1u).enumerate() {
        for i in 0..mu {
            assignment.push(u);
            labels.push(if i < a { Sample::One } else { Sample::Two });
        }
    }
    DistinctTable::from_assignment(labels, assignment, m.len()).unwrap()
}

/// Random connected value graph plus multiplicities and labels.
pub(crate) fn random_instance(seed: u64, max_k: usize, max_m: u64) -> (Vec<u64>, Vec<u64>, SimilarityGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=max_k);
    let m: Vec<u64> = (0..k).map(|_| rng.random_range(1..=max_m)).collect();
    let n1u: Vec<u64> = m.iter().map(|&x| rng.random_range(0..=x)).collect();
    let mut edges: Vec<(usize, usize)> = (1..k).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..rng.random_range(0..=k) {
        let (a, b) = (rng.random_range(0..k), rng.random_range(0..k));
        if a != b && !edges.contains(&(a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    (m, n1u, SimilarityGraph::new(k, edges).unwrap())
}

fn graph_counts(g: &ObservationGraph, labels: &[Sample]) -> EdgeCounts {
    let mut c = EdgeCounts { r0: 0.0, r1: 0.0, r2: 0.0 };
    for &(i, j) in g.edges() {
        match (labels[i], labels[j]) {
            (Sample::One, Sample::One) => c.r1 += 1.0,
            (Sample::Two, Sample::Two) => c.r2 += 1.0,
            _ => c.r0 += 1.0,
        }
    }
    c
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn closed_form_counts_match_family() {
    let m = [2u64, 1, 3, 2];
    let n1u = [1u64, 0, 2, 2];
    let c0 = SimilarityGraph::new(4, [(0, 1), (1, 2), (0, 3), (2, 3)]).unwrap();
    let table = table_with_counts(&m, &n1u);
    let closed = extended_counts(&LabelCounts::from_table(&table), &c0).unwrap();

    let mut sum = EdgeCounts { r0: 0.0, r1: 0.0, r2: 0.0 };
    let mut count = 0.0;
    for g in enumerate_graph_family(&c0, &table, 1_000_000).unwrap() {
        let c = graph_counts(&g, table.labels());
        sum.r0 += c.r0;
        sum.r1 += c.r1;
        sum.r2 += c.r2;
        count += 1.0;
    }
    assert!(close(closed.averaging.r0, sum.r0 / count, 1e-12));
    assert!(close(closed.averaging.r1, sum.r1 / count, 1e-12));
    assert!(close(closed.averaging.r2, sum.r2 / count, 1e-12));

    let union = ObservationGraph::materialize_union(&c0, &table).unwrap();
    assert_eq!(closed.union, graph_counts(&union, table.labels()));
}

fn brute_moments(m: &[u64], c0: &SimilarityGraph, n1: u64) -> [[f64; 5]; 2] {
    let q = GraphQuantities::from_multiplicities(m.to_vec(), c0).unwrap();
    let n = q.n() as usize;
    let owner: Vec<usize> = m.iter().enumerate().flat_map(|(u, &x)| std::iter::repeat_n(u, x as usize)).collect();
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as u64 != n1 {
            continue;
        }
        let mut n1u = vec![0u64; m.len()];
        for (i, &u) in owner.iter().enumerate() {
            if mask >> i & 1 == 1 {
                n1u[u] += 1;
            }
        }
        let c = q.counts(&n1u);
        rows.push([c.averaging.r1, c.averaging.r2, c.union.r1, c.union.r2]);
    }
    let t = rows.len() as f64;
    let mean = |j: usize| rows.iter().map(|r| r[j]).sum::<f64>() / t;
    let cov = |a: usize, b: usize| {
        let (ma, mb) = (mean(a), mean(b));
        rows.iter().map(|r| (r[a] - ma) * (r[b] - mb)).sum::<f64>() / t
    };
    [
        [mean(0), mean(1), cov(0, 0), cov(1, 1), cov(0, 1)],
        [mean(2), mean(3), cov(2, 2), cov(3, 3), cov(2, 3)],
    ]
}

#[test]
fn moments_match_enumeration() {
    for seed in 0..40 {
        let (m, _, c0) = random_instance(seed, 5, 3);
        let n: u64 = m.iter().sum();
        if !(4..=12).contains(&n) {
            continue;
        }
        for n1 in 0..=n {
            let q = GraphQuantities::from_multiplicities(m.clone(), &c0).unwrap();
            let set = compute_moments(&q, n1, n - n1).unwrap();
            let brute = brute_moments(&m, &c0, n1);
            for (s, b) in Summary::BOTH.iter().zip(brute) {
                let mo = set.get(*s);
                let got = [mo.r1.mean, mo.r2.mean, mo.r1.var, mo.r2.var, mo.cov12];
                for j in 0..5 {
                    assert!(close(got[j], b[j], 1e-10), "seed {seed} n1 {n1} {s:?} #{j}: {} vs {}", got[j], b[j]);
                }
            }
        }
    }
}

#[test]
fn combined_statistic_moments_agree_with_components() {
    for seed in 0..200 {
        let (m, n1u, c0) = random_instance(seed, 30, 6);
        let n: u64 = m.iter().sum();
        let n1: u64 = n1u.iter().sum();
        if n < 4 {
            continue;
        }
        let q = GraphQuantities::from_multiplicities(m.clone(), &c0).unwrap();
        let set = compute_moments(&q, n1, n - n1).unwrap();
        let w = set.weights;
        for s in Summary::BOTH {
            let mo = set.get(s);
            let vw = w.w1 * w.w1 * mo.r1.var + w.w2 * w.w2 * mo.r2.var + 2.0 * w.w1 * w.w2 * mo.cov12;
            let vd = mo.r1.var + mo.r2.var - 2.0 * mo.cov12;
            let v0 = mo.r1.var + mo.r2.var + 2.0 * mo.cov12;
            let scale = mo.r1.var.max(mo.r2.var).max(1.0);
            assert!((vw - mo.rw.var).abs() <= 1e-9 * scale, "seed {seed} {s:?}: {vw} vs {}", mo.rw.var);
            assert!((vd - mo.rd.var).abs() <= 1e-9 * scale, "seed {seed} {s:?}: {vd} vs {}", mo.rd.var);
            assert!((v0 - mo.r0.var).abs() <= 1e-9 * scale);
            let cross = (1.0 - w.p_hat()) * mo.r1.var - w.p_hat() * mo.r2.var + (2.0 * w.p_hat() - 1.0) * mo.cov12;
            assert!(cross.abs() <= 1e-9 * scale, "seed {seed} {s:?}: Cov(R_w, R_d) = {cross}");
        }
    }
}

#[test]
fn union_weighted_and_difference_variances_closed_forms() {
    for seed in 0..100 {
        let (m, n1u, c0) = random_instance(seed, 20, 5);
        let n: u64 = m.iter().sum();
        let n1: u64 = n1u.iter().sum();
        if n < 4 {
            continue;
        }
        let q = GraphQuantities::from_multiplicities(m.clone(), &c0).unwrap();
        let set = compute_moments(&q, n1, n - n1).unwrap();
        let (nf, a, b) = (n as f64, n1 as f64, (n - n1) as f64);
        let g = q.union_size as f64;
        let ss = q.union_sum_sq as f64;
        let fw = set.constants.f1;
        let vw = fw * (g - ss / (nf - 2.0) + 2.0 / ((nf - 1.0) * (nf - 2.0)) * g * g);
        let vd = a * b / (nf * (nf - 1.0)) * (ss - 4.0 / nf * g * g);
        assert!(close(vw, set.union.rw.var, 1e-9), "seed {seed}: {vw} vs {}", set.union.rw.var);
        assert!(close(vd, set.union.rd.var, 1e-9), "seed {seed}: {vd} vs {}", set.union.rd.var);
    }
}

#[test]
fn generalized_statistic_is_quadratic_form() {
    for seed in 0..200 {
        let (m, n1u, c0) = random_instance(seed, 25, 5);
        let table = table_with_counts(&m, &n1u);
        let Ok(set) = moments(&table, &c0, &union_graph_summary(&c0, &table).unwrap()) else {
            continue;
        };
        let q = GraphQuantities::from_multiplicities(m.clone(), &c0).unwrap();
        let counts = q.counts(&n1u);
        for s in Summary::BOTH {
            let a = generalized_statistic(&counts, &set, s);
            let b = generalized_statistic_quadratic(&counts, &set, s);
            assert!(close(a, b, 1e-8), "seed {seed} {s:?}: {a} vs {b}");
        }
    }
}

#[test]
fn degenerate_nulls_are_reported() {
    let c0 = SimilarityGraph::new(3, [(0, 1), (1, 2)]).unwrap();
    let table = table_with_counts(&[2, 2, 2], &[1, 0, 0]);
    let err = moments(&table, &c0, &union_graph_summary(&c0, &table).unwrap()).unwrap_err();
    assert!(matches!(err, Error::DegenerateNull { .. }), "{err:?}");

    let single = SimilarityGraph::new(1, []).unwrap();
    let table = table_with_counts(&[6], &[3]);
    let err = moments(&table, &single, &union_graph_summary(&single, &table).unwrap()).unwrap_err();
    assert!(matches!(err, Error::DegenerateNull { .. }), "{err:?}");

    let tiny = table_with_counts(&[1, 1, 1], &[1, 1, 0]);
    let path = SimilarityGraph::new(3, [(0, 1), (1, 2)]).unwrap();
    assert!(matches!(
        moments(&tiny, &path, &union_graph_summary(&path, &tiny).unwrap()),
        Err(Error::Domain(_))
    ));
}

#[test]
fn pergraph_on_union_matches_union_summary() {
    for seed in 0..50 {
        let (m, n1u, c0) = random_instance(seed, 8, 4);
        let table = table_with_counts(&m, &n1u);
        let Ok(set) = moments(&table, &c0, &union_graph_summary(&c0, &table).unwrap()) else {
            continue;
        };
        let q = GraphQuantities::from_multiplicities(m.clone(), &c0).unwrap();
        let values = statistic_values(&q, &set, &n1u, &[1.0]);
        let g = ObservationGraph::materialize_union(&c0, &table).unwrap();
        let per = pergraph_statistics(&g, table.labels(), &[1.0]).unwrap();
        let u = &values.union;
        for (a, b) in [(u.z0, per.z0), (u.zw, per.zw), (u.zd, per.zd), (u.s, per.s)] {
            assert!(close(a, b, 1e-10), "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn weights_sum_to_one() {
    let w = Weights::new(7, 12);
    assert!((w.w1 + w.w2 - 1.0).abs() < 1e-15);
    assert_eq!(w.p_hat(), 6.0 / 17.0);
}

#[test]
fn label_counts_validation() {
    assert!(LabelCounts::new(vec![1, 2], vec![1, 1]).is_err());
    assert!(LabelCounts::new(vec![1], vec![1, 1]).is_err());
    let l = LabelCounts::new(vec![1, 0, 2], vec![2, 1, 2]).unwrap();
    assert_eq!((l.n(), l.n1(), l.n2(), l.n2u(0)), (5, 3, 2, 1));
}

proptest! {
    #[test]
    fn complement_identity(seed in any::<u64>()) {
        let (m, n1u, c0) = random_instance(seed, 12, 5);
        let q = GraphQuantities::from_multiplicities(m, &c0).unwrap();
        let c = q.counts(&n1u);
        let l = q.family_edges() as f64;
        let a = c.averaging;
        prop_assert!((a.r0 + a.r1 + a.r2 - l).abs() <= 1e-9 * l.max(1.0));
        let u = c.union;
        prop_assert_eq!(u.r0 + u.r1 + u.r2, q.union_size as f64);
    }

    #[test]
    fn label_swap_symmetry(seed in any::<u64>()) {
        let (m, n1u, c0) = random_instance(seed, 15, 5);
        let table = table_with_counts(&m, &n1u);
        let swapped = table.swapped();
        let u = union_graph_summary(&c0, &table).unwrap();
        let (Ok(a), Ok(b)) = (moments(&table, &c0, &u), moments(&swapped, &c0, &u)) else {
            return Ok(());
        };
        let q = GraphQuantities::from_multiplicities(m.clone(), &c0).unwrap();
        let kappas = [0.8, 1.31];
        let x = statistic_values(&q, &a, table.n1(), &kappas);
        let y = statistic_values(&q, &b, swapped.n1(), &kappas);
        for s in Summary::BOTH {
            let (x, y) = (x.get(s), y.get(s));
            prop_assert_eq!(x.rw, y.rw);
            prop_assert!(close(x.zw, y.zw, 1e-12));
            prop_assert!(close(x.zd, -y.zd, 1e-12));
            prop_assert!(close(x.s, y.s, 1e-12));
            for (p, q) in x.max.iter().zip(&y.max) {
                prop_assert!(close(p.1, q.1, 1e-12));
            }
        }
    }

    #[test]
    fn weight_minimizes_variance(seed in any::<u64>(), t in 0.0f64..1.0) {
        let (m, n1u, c0) = random_instance(seed, 15, 5);
        let n: u64 = m.iter().sum();
        let n1: u64 = n1u.iter().sum();
        prop_assume!(n >= 4);
        let q = GraphQuantities::from_multiplicities(m, &c0).unwrap();
        let set = compute_moments(&q, n1, n - n1).unwrap();
        let mo = &set.averaging;
        let v = |p: f64| (1.0 - p).powi(2) * mo.r1.var + p * p * mo.r2.var + 2.0 * p * (1.0 - p) * mo.cov12;
        let best = v(set.weights.p_hat());
        prop_assert!(best <= v(t) + 1e-9 * mo.r1.var.max(mo.r2.var).max(1.0));
    }
}
