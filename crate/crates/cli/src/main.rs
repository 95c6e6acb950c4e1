//! `edgecount`: two-sample tests on data with repeated observations.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 bad input, 3 degenerate null.

mod commands;
mod input;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgecount::Error;

#[derive(Parser, Debug)]
#[command(name = "edgecount", version, about = "Graph-based two-sample tests for data with repeated observations")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "EDGECOUNT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every test statistic on two samples and print the report.
    Test(TestArgs),
    /// Build the similarity graph on distinct values and describe it.
    Graph(GraphArgs),
    /// Simulate rejection rates for a built-in or TOML scenario.
    Power(PowerArgs),
    /// Check closed forms against exhaustive enumeration on small instances.
    Verify(VerifyArgs),
    /// Group identical observations and print the distinct-value table.
    Dedup(DedupArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Vectors,
    Rankings,
    Networks,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Observation file: `label,values...` per line (labels 1 and 2).
    #[arg(long, short, requires = "kind", conflicts_with = "distances")]
    input: Option<PathBuf>,

    /// Payload type of `--input`.
    #[arg(long, value_enum)]
    kind: Option<Kind>,

    /// Distance matrix on distinct values (K rows of K numbers).
    #[arg(long)]
    distances: Option<PathBuf>,

    /// `label,value_index` rows mapping observations to matrix rows.
    #[arg(long, requires = "distances")]
    sidecar: Option<PathBuf>,

    /// Distance for `--input`: euclidean, frobenius-sq, spearman, footrule, kendall.
    #[arg(long)]
    metric: Option<String>,

    /// Distances within this tolerance count as ties.
    #[arg(long, default_value_t = 0.0)]
    tie_tolerance: f64,
}

#[derive(Args, Debug, Clone)]
struct GraphRuleArgs {
    /// Similarity graph on distinct values: `nnl <k>` or `mst <k>`.
    #[arg(long, num_args = 1..=2, value_names = ["RULE", "K"], default_values = ["nnl", "3"])]
    graph: Vec<String>,

    /// Read the value-level graph from an edge-list file instead of building it.
    #[arg(long, conflicts_with = "graph")]
    c0: Option<PathBuf>,

    /// Seed for tie-breaking in `mst` and for permutations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    rule: GraphRuleArgs,

    /// Random permutations for permutation p-values (0 skips them).
    #[arg(long = "perm", default_value_t = 0)]
    permutations: u64,

    /// Comma-separated kappa values for the max-type statistic.
    #[arg(long, value_delimiter = ',', default_values_t = edgecount::inference::DEFAULT_KAPPAS)]
    kappa: Vec<f64>,

    /// Level used to flag rejections in the text report.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Also analyse one observation-level graph built by the same rule.
    #[arg(long)]
    per_graph: bool,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,

    /// Write `<STEM>.json` and `<STEM>.txt` instead of printing.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Record the wall-clock time in the report (breaks byte-identical reruns).
    #[arg(long)]
    timestamp: bool,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    rule: GraphRuleArgs,

    /// Write the graph as an edge list.
    #[arg(long)]
    export: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args, Debug)]
struct PowerArgs {
    /// Built-in scenario name (see `--list`).
    #[arg(required_unless_present_any = ["config", "list"])]
    scenario: Option<String>,

    /// Scenario file in TOML.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,

    /// List built-in scenarios.
    #[arg(long)]
    list: bool,

    #[arg(long)]
    replicates: Option<u64>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long, value_delimiter = ',')]
    kappa: Option<Vec<f64>>,

    /// Mallows spread convention: normalized or raw.
    #[arg(long)]
    theta_scale: Option<String>,

    #[arg(long, value_enum, default_value = "csv")]
    format: Format,

    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Largest total sample size enumerated.
    #[arg(long, default_value_t = 10)]
    max_n: usize,

    #[arg(long, default_value_t = 200)]
    instances: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Perturbs one closed-form variance by 1 to show that mismatches are caught.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args, Debug)]
struct DedupArgs {
    /// Observation file.
    #[arg(long, short)]
    input: PathBuf,

    #[arg(long, value_enum)]
    kind: Kind,

    #[arg(long)]
    metric: Option<String>,

    /// Write the `label,value_index` sidecar here.
    #[arg(long)]
    sidecar_out: Option<PathBuf>,

    /// Write the distance matrix on distinct values here.
    #[arg(long)]
    matrix_out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Input(String),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Mismatch(_) => 1,
            Failure::Input(_) => 2,
            Failure::Core(e) => core_code(e),
        }
    }
}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::DegenerateNull { .. } => 3,
        Error::Replicate { source, .. } => core_code(source),
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Test(a) => commands::test(a),
        Command::Graph(a) => commands::graph(a),
        Command::Power(a) => commands::power(a),
        Command::Verify(a) => verify::run(a),
        Command::Dedup(a) => commands::dedup(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e @ Error::DegenerateNull { .. }) => {
                    eprintln!("error: {e}");
                    eprintln!("hint: `edgecount graph` prints the condition diagnostics for this input");
                }
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Mismatch(m) => eprintln!("verification failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
