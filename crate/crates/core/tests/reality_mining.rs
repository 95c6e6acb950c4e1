//! Phone-call network reproduction. The data are not redistributable; point
//! `EDGECOUNT_REALITY_MINING` at a network file (label 1 = weekday, 2 = weekend,
//! `nodes=<n>` header) and run with `--ignored`.

use edgecount::dataset::{deduplicate, io::parse_observations, pairwise_distances, Metric, PayloadKind};
use edgecount::graph::build_knnl;
use edgecount::inference::{run_test, Statistic, TestConfig};
use edgecount::stats::Summary;

#[test]
#[ignore = "needs the external phone-call network file"]
fn phone_call_networks_match_published_table() {
    let path = std::env::var("EDGECOUNT_REALITY_MINING").expect("set EDGECOUNT_REALITY_MINING");
    let text = std::fs::read_to_string(path).unwrap();
    let table = deduplicate(&parse_observations(&text, PayloadKind::Network).unwrap()).unwrap();
    let d = pairwise_distances(&table, Metric::default_for(PayloadKind::Network)).unwrap();
    let c0 = build_knnl(&d, 3).unwrap();
    let report = run_test(&table, &c0, &TestConfig { permutations: 10_000, ..TestConfig::default() }).unwrap();

    let u = report.get(Summary::Union);
    assert_eq!(u.breakdown_row("R1").unwrap().value, 7163.0);
    assert_eq!(u.breakdown_row("R2").unwrap().value, 1008.0);

    // Statistic values as printed, to their two decimals.
    let expected = [
        (Summary::Averaging, Statistic::Z0, -1.33, 0.092, None),
        (Summary::Averaging, Statistic::S, 6.45, 0.040, Some(0.042)),
        (Summary::Averaging, Statistic::Zw, 2.44, 0.007, Some(0.013)),
        (Summary::Averaging, Statistic::Zd, 0.71, 0.475, None),
        (Summary::Averaging, Statistic::M(1.31), 3.19, 0.009, Some(0.014)),
        (Summary::Averaging, Statistic::M(1.14), 2.78, 0.013, Some(0.019)),
        (Summary::Averaging, Statistic::M(1.0), 2.44, 0.022, Some(0.025)),
        (Summary::Union, Statistic::Z0, -0.99, 0.162, None),
        (Summary::Union, Statistic::S, 5.01, 0.082, Some(0.086)),
        (Summary::Union, Statistic::Zw, 2.12, 0.017, Some(0.024)),
        (Summary::Union, Statistic::Zd, 0.71, 0.480, None),
        (Summary::Union, Statistic::M(1.31), 2.78, 0.022, Some(0.026)),
        (Summary::Union, Statistic::M(1.14), 2.42, 0.032, Some(0.034)),
        (Summary::Union, Statistic::M(1.0), 2.12, 0.050, Some(0.049)),
    ];
    for (s, stat, value, p, perm) in expected {
        let row = report.get(s).test(stat).unwrap();
        assert!((row.value - value).abs() <= 0.005, "{s:?} {stat}: {} vs {value}", row.value);
        assert!((row.p_analytic - p).abs() <= 0.0015, "{s:?} {stat}: p {} vs {p}", row.p_analytic);
        if let Some(pp) = perm {
            // Permutation p-values carry Monte Carlo error of about 0.002.
            assert!((row.p_permutation.unwrap() - pp).abs() <= 0.008, "{s:?} {stat}: perm p vs {pp}");
        }
    }
}
