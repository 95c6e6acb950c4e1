use std::fs;
use std::path::Path;

use edgecount::dataset::io::{parse_distance_input, parse_distance_matrix, parse_observations};
use edgecount::dataset::{deduplicate, pairwise_distances, DistanceMatrix, DistinctTable, Metric, PayloadKind, Sample};
use edgecount::graph::SimilarityGraph;
use edgecount::simulate::GraphRule;
use edgecount::Error;

use crate::{Failure, GraphRuleArgs, InputArgs, Kind};

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, e: Error) -> Failure {
    match e {
        Error::Parse { .. } => Failure::Input(format!("{}: {e}", path.display())),
        other => Failure::Core(other),
    }
}

pub fn payload_kind(k: Kind) -> PayloadKind {
    match k {
        Kind::Vectors => PayloadKind::Vector,
        Kind::Rankings => PayloadKind::Ranking,
        Kind::Networks => PayloadKind::Network,
    }
}

pub fn metric(name: Option<&str>, kind: PayloadKind) -> Result<Metric, Failure> {
    match name {
        Some(n) => Ok(n.parse()?),
        None => Ok(Metric::default_for(kind)),
    }
}

/// Deduplicated observations from a payload file.
pub fn observations(path: &Path, kind: Kind, metric_name: Option<&str>) -> Result<(DistinctTable, DistanceMatrix), Failure> {
    let kind = payload_kind(kind);
    let metric = metric(metric_name, kind)?;
    let obs = parse_observations(&read(path)?, kind).map_err(|e| in_file(path, e))?;
    let table = deduplicate(&obs)?;
    let d = pairwise_distances(&table, metric)?;
    Ok((table, d))
}

/// Table and value-level distances. Without a sidecar each matrix row is one
/// observation in sample 1, which is enough to describe a graph.
pub fn load(args: &InputArgs, need_labels: bool) -> Result<(DistinctTable, DistanceMatrix), Failure> {
    let (table, d) = match (&args.input, &args.kind, &args.distances) {
        (Some(path), Some(kind), None) => observations(path, *kind, args.metric.as_deref())?,
        (None, _, Some(mpath)) => {
            let matrix = read(mpath)?;
            match &args.sidecar {
                Some(spath) => parse_distance_input(&matrix, &read(spath)?).map_err(|e| in_file(spath, e))?,
                None if need_labels => return Err(Failure::Input("--distances needs --sidecar for sample labels".into())),
                None => {
                    let d = parse_distance_matrix(&matrix).map_err(|e| in_file(mpath, e))?;
                    d.require_separated()?;
                    let k = d.k();
                    (DistinctTable::from_assignment(vec![Sample::One; k], (0..k).collect(), k)?, d)
                }
            }
        }
        _ => return Err(Failure::Input("give either --input with --kind, or --distances".into())),
    };
    let d = d.with_tie_tolerance(args.tie_tolerance)?;
    Ok((table, d))
}

pub fn rule(args: &GraphRuleArgs) -> Result<GraphRule, Failure> {
    let mut rule_text = args.graph.join(":");
    if args.graph.len() == 1 {
        rule_text.push_str(":1");
    }
    let rule: GraphRule = rule_text.parse()?;
    Ok(match rule {
        GraphRule::Mst { k, .. } => GraphRule::Mst { k, seed: args.seed },
        other => other,
    })
}

/// The value-level graph, read from `--c0` or built by the rule.
pub fn c0(args: &GraphRuleArgs, table: &DistinctTable, d: &DistanceMatrix) -> Result<SimilarityGraph, Failure> {
    if table.k() < 2 {
        return Err(Failure::Core(Error::DegenerateNull {
            statistic: "every edge count (single distinct value)".into(),
            variance: 0.0,
            mean: 0.0,
        }));
    }
    match &args.c0 {
        Some(path) => {
            let g = SimilarityGraph::from_edge_list(&read(path)?).map_err(|e| in_file(path, e))?;
            if g.k() != table.k() {
                return Err(Failure::Input(format!(
                    "{} has {} values but the data have {}",
                    path.display(),
                    g.k(),
                    table.k()
                )));
            }
            Ok(g)
        }
        None => Ok(rule(args)?.build(d)?),
    }
}
