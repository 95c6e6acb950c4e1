use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use edgecount::dataset::io::{format_distance_matrix, format_sidecar};
use edgecount::graph::{count_graph_family, union_graph_summary, ObservationGraph};
use edgecount::inference::{condition_diagnostics, pvalue_analytic, run_test, Statistic, TestConfig, TestReport};
use edgecount::simulate::{builtin_scenario, builtin_scenario_names, run_scenario, ScenarioConfig, ScenarioResult};
use edgecount::stats::{pergraph_statistics, Summary, SummaryStatistics};
use serde_json::{json, Value};

use crate::input::{self, read, write};
use crate::{DedupArgs, Failure, Format, GraphArgs, PowerArgs, TestArgs};

fn emit(text: &str, output: Option<&std::path::Path>) -> Result<(), Failure> {
    match output {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn statistic_value(s: &SummaryStatistics, stat: Statistic) -> f64 {
    match stat {
        Statistic::Z0 => s.z0,
        Statistic::Zw => s.zw,
        Statistic::Zd => s.zd.abs(),
        Statistic::S => s.s,
        Statistic::M(k) => s.max_at(k).unwrap_or(f64::NAN),
    }
}

fn stat_list(kappas: &[f64]) -> Vec<Statistic> {
    let mut v = vec![Statistic::Z0, Statistic::S, Statistic::Zw, Statistic::Zd];
    v.extend(kappas.iter().map(|&k| Statistic::M(k)));
    v
}

fn rejected(report: &TestReport, alpha: f64) -> String {
    let names: Vec<String> = Summary::BOTH
        .iter()
        .flat_map(|&s| {
            report
                .get(s)
                .tests
                .iter()
                .filter(|r| r.p_analytic <= alpha)
                .map(move |r| format!("{},({})", r.name, s.tag()))
        })
        .collect();
    if names.is_empty() {
        format!("rejected at alpha = {alpha}: none\n")
    } else {
        format!("rejected at alpha = {alpha}: {}\n", names.join(" "))
    }
}

fn report_csv(report: &TestReport) -> String {
    let mut out = String::from("summary,statistic,value,p_analytic,p_permutation\n");
    for s in Summary::BOTH {
        for r in &report.get(s).tests {
            let perm = r.p_permutation.map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{perm}", s.tag(), r.name, r.value, r.p_analytic);
        }
    }
    out
}

pub fn test(a: TestArgs) -> Result<(), Failure> {
    let (table, d) = input::load(&a.input, true)?;
    let c0 = input::c0(&a.rule, &table, &d)?;
    let config = TestConfig {
        kappas: a.kappa.clone(),
        permutations: a.permutations,
        seed: a.rule.seed,
    };
    let report = run_test(&table, &c0, &config)?;

    let per_graph = if a.per_graph {
        let expanded = d.expand(&table)?;
        let g = input::rule(&a.rule)?.build(&expanded)?;
        let og = ObservationGraph::new(table.n(), g.edges().iter().copied())?;
        let stats = pergraph_statistics(&og, table.labels(), &a.kappa)?;
        let rows: Vec<(Statistic, f64, f64)> = stat_list(&a.kappa)
            .into_iter()
            .map(|t| {
                let v = statistic_value(&stats, t);
                pvalue_analytic(t, v).map(|p| (t, v, p))
            })
            .collect::<edgecount::Result<_>>()?;
        Some((og.len(), rows))
    } else {
        None
    };
    let stamp = a.timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|t| t.as_secs()).unwrap_or(0));

    let json_text = if per_graph.is_none() && stamp.is_none() {
        report.to_json() + "\n"
    } else {
        let mut v = json!({ "report": serde_json::to_value(&report).expect("report serializes") });
        if let Some((edges, rows)) = &per_graph {
            v["per_graph"] = json!({
                "edges": edges,
                "tests": rows.iter().map(|(t, x, p)| json!({"statistic": t.to_string(), "value": x, "p_analytic": p})).collect::<Vec<Value>>(),
            });
        }
        if let Some(t) = stamp {
            v["generated_at_unix"] = json!(t);
        }
        serde_json::to_string_pretty(&v).expect("json") + "\n"
    };
    let mut text = String::new();
    if let Some(t) = stamp {
        let _ = writeln!(text, "generated at unix time {t}");
    }
    text.push_str(&report.to_text());
    text.push_str(&rejected(&report, a.alpha));
    if let Some((edges, rows)) = &per_graph {
        let _ = writeln!(text, "\nsingle observation-level graph ({edges} edges):");
        for (t, x, p) in rows {
            let _ = writeln!(text, "{:<14}{x:>9.2}{p:>9.3}", format!("{t},G"));
        }
    }

    match &a.output {
        Some(stem) => {
            let j = stem.with_extension("json");
            let t = stem.with_extension("txt");
            write(&j, &json_text)?;
            write(&t, &text)?;
            eprintln!("wrote {} and {}", j.display(), t.display());
            Ok(())
        }
        None => emit(
            &match a.format {
                Format::Json => json_text,
                Format::Text => text,
                Format::Csv => report_csv(&report),
            },
            None,
        ),
    }
}

pub fn graph(a: GraphArgs) -> Result<(), Failure> {
    let (table, d) = input::load(&a.input, false)?;
    let c0 = input::c0(&a.rule, &table, &d)?;
    if let Some(p) = &a.export {
        write(p, &c0.to_edge_list())?;
    }
    let family = count_graph_family(&c0, &table)?;
    let union = union_graph_summary(&c0, &table)?;
    let labelled = table.n1_total() > 0 && table.n2_total() > 0;
    let diagnostics = if labelled { Some(condition_diagnostics(&table, &c0, &union)?) } else { None };
    let hist = c0.degree_histogram();
    let out = match a.format {
        Format::Json => {
            let v = json!({
                "k": table.k(),
                "n": table.n(),
                "c0_edges": c0.len(),
                "edges": c0.edges().iter().map(|&(u, v)| [u + 1, v + 1]).collect::<Vec<_>>(),
                "degree_histogram": hist.iter().map(|(d, c)| [*d, *c]).collect::<Vec<_>>(),
                "family_size": family.to_string(),
                "union_edges": union.size,
                "diagnostics": diagnostics,
            });
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("degree,count\n");
            for (d, c) in &hist {
                let _ = writeln!(s, "{d},{c}");
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "K = {}, N = {}", table.k(), table.n());
            let _ = writeln!(s, "|C0| = {}", c0.len());
            let degrees: Vec<String> = hist.iter().map(|(d, c)| format!("{d}:{c}")).collect();
            let _ = writeln!(s, "degree histogram (degree:count) = {}", degrees.join(" "));
            let _ = writeln!(s, "|G_C0| = {family}");
            let _ = writeln!(s, "|union graph| = {}", union.size);
            match &diagnostics {
                Some(diag) => {
                    let r = &diag.ratios;
                    let _ = writeln!(
                        s,
                        "condition ratios: |C0|/N = {:.3}, K/N = {:.3}, averaging spread/N = {:.3}, |union|/N = {:.3}, union spread/N = {:.3}",
                        r.c0_edges, r.distinct_values, r.averaging_spread, r.union_edges, r.union_spread
                    );
                    for w in &diag.warnings {
                        let _ = writeln!(s, "warning: {w}");
                    }
                }
                None => {
                    let _ = writeln!(s, "condition diagnostics need both samples");
                }
            }
            s
        }
    };
    emit(&out, None)
}

fn power_text(r: &ScenarioResult) -> String {
    let mut s = String::new();
    let c = &r.config;
    let _ = writeln!(
        s,
        "{}: n1 = {}, n2 = {}, graph {}, {} replicates, alpha = {}, seed {}",
        c.name, c.n1, c.n2, c.graph, c.replicates, c.alpha, c.seed
    );
    for sm in Summary::BOTH {
        let rows: Vec<_> = r.rows.iter().filter(|x| x.summary == sm).collect();
        let _ = writeln!(
            s,
            "{:<8}{}",
            format!("({})", sm.tag()),
            rows.iter().map(|x| format!("{:>10}", x.name)).collect::<String>()
        );
        let _ = writeln!(s, "{:<8}{}", "", rows.iter().map(|x| format!("{:>10.3}", x.power)).collect::<String>());
    }
    s
}

pub fn power(a: PowerArgs) -> Result<(), Failure> {
    if a.list {
        return emit(&(builtin_scenario_names().join("\n") + "\n"), None);
    }
    let mut config = match (&a.scenario, &a.config) {
        (_, Some(path)) => ScenarioConfig::from_toml(&read(path)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        (Some(name), None) => builtin_scenario(name)
            .ok_or_else(|| Failure::Input(format!("unknown scenario {name:?}; try --list")))?,
        (None, None) => return Err(Failure::Input("name a scenario or pass --config".into())),
    };
    if let Some(r) = a.replicates {
        config.replicates = r;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(x) = a.alpha {
        config.alpha = x;
    }
    if let Some(k) = a.kappa {
        config.kappas = k;
    }
    if let Some(t) = &a.theta_scale {
        config.theta_scale = t.parse()?;
    }
    let result = run_scenario(&config)?;
    let out = match a.format {
        Format::Csv => result.to_csv(),
        Format::Json => result.to_json() + "\n",
        Format::Text => power_text(&result),
    };
    emit(&out, a.output.as_deref())
}

pub fn dedup(a: DedupArgs) -> Result<(), Failure> {
    let (table, d) = input::observations(&a.input, a.kind, a.metric.as_deref())?;
    if let Some(p) = &a.sidecar_out {
        write(p, &format_sidecar(&table))?;
    }
    if let Some(p) = &a.matrix_out {
        write(p, &format_distance_matrix(&d))?;
    }
    let m = table.multiplicities();
    let out = match a.format {
        Format::Csv => format_sidecar(&table),
        Format::Json => {
            let v = json!({
                "n": table.n(),
                "k": table.k(),
                "n1": table.n1_total(),
                "n2": table.n2_total(),
                "multiplicities": m,
                "n1_per_value": table.n1(),
                "n2_per_value": table.n2(),
                "value_of_observation": table.assignment().iter().map(|u| u + 1).collect::<Vec<_>>(),
            });
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "N = {} (n1 = {}, n2 = {}), K = {} distinct values, largest multiplicity {}",
                table.n(),
                table.n1_total(),
                table.n2_total(),
                table.k(),
                m.iter().max().copied().unwrap_or(0)
            );
            let _ = writeln!(s, "{:>6}{:>8}{:>8}{:>8}", "value", "m", "n1", "n2");
            for u in 0..table.k() {
                let _ = writeln!(s, "{:>6}{:>8}{:>8}{:>8}", u + 1, m[u], table.n1()[u], table.n2()[u]);
            }
            s
        }
    };
    emit(&out, None)
}
