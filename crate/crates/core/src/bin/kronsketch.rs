use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use kronsketch::bench::{
    format_report, load_matrix, load_sparse_vector, load_stream, replay_seeds, replay_with_state, summarize, Scenario,
    SolverKind,
};
use kronsketch::linalg::SparseVector;
use kronsketch::sketch::{BaseFamily, TensorFamily};
use kronsketch::solvers::SplineSpec;
use kronsketch::tree::TensorTree;
use kronsketch::{Error, Result};

/// Replay an update stream against a dynamic Kronecker sketch and report
/// per-event timings and costs as CSV.
#[derive(Debug, Parser)]
#[command(name = "kronsketch", version)]
struct Cli {
    /// Factor matrices A_1 … A_q in KMAT format.
    #[arg(long, num_args = 1.., value_name = "PATHS", required_unless_present = "resume")]
    factors: Vec<PathBuf>,

    /// Sparse label vector; defaults to zero.
    #[arg(long, value_name = "PATH")]
    label: Option<PathBuf>,

    #[arg(long, default_value = "regression", value_parser = parse_solver)]
    solver: SolverKind,

    #[arg(long, default_value = "countsketch", value_parser = parse_base)]
    cbase: BaseFamily,

    #[arg(long, default_value = "tensorsketch", value_parser = parse_tensor)]
    tbase: TensorFamily,

    #[arg(long, default_value_t = 0.5)]
    eps: f64,

    #[arg(long, default_value_t = 0.1)]
    delta: f64,

    /// Constant multiplying the sketch-dimension bound.
    #[arg(long, default_value_t = 1.0)]
    cfactor: f64,

    /// Explicit sketch dimension, bypassing the dimension rule.
    #[arg(long)]
    m: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Redraw sketches along the update path on every update.
    #[arg(long)]
    adaptive: bool,

    /// Also run the exact solver on every query and report the ratio.
    #[arg(long)]
    oracle: bool,

    /// Update stream with `U <factor> <path>`, `Q` and `B <path>` lines.
    #[arg(long, value_name = "PATH")]
    stream: Option<PathBuf>,

    /// CSV output; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Spline regularizer L in KMAT format.
    #[arg(long = "spline-L", value_name = "PATH")]
    spline_l: Option<PathBuf>,

    #[arg(long, default_value_t = 1.0)]
    lambda: f64,

    /// Target rank for the low-rank solver.
    #[arg(long)]
    rank: Option<usize>,

    /// Run this many consecutive seeds and print the pass rate to stderr.
    #[arg(long)]
    seeds: Option<usize>,

    /// Write the final tree to a binary snapshot.
    #[arg(long, value_name = "PATH")]
    snapshot_out: Option<PathBuf>,

    /// Start from a tree snapshot instead of --factors.
    #[arg(long, value_name = "PATH")]
    resume: Option<PathBuf>,
}

fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_base(s: &str) -> std::result::Result<BaseFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_tensor(s: &str) -> std::result::Result<TensorFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn build_scenario(cli: &Cli) -> Result<Scenario> {
    let resumed = cli.resume.as_ref().map(TensorTree::read_snapshot).transpose()?;
    let factors = match &resumed {
        Some(tree) => tree.factors().to_vec(),
        None => cli.factors.iter().map(load_matrix).collect::<Result<Vec<_>>>()?,
    };
    let n = factors
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.rows()))
        .ok_or_else(|| Error::DimensionOverflow("product of factor row counts".into()))?;
    let label = match &cli.label {
        Some(p) => load_sparse_vector(p)?,
        None => SparseVector::zeros(n),
    };
    let mut sc = Scenario::new(factors, label, cli.solver);
    sc.sketch.c_family = cli.cbase;
    sc.sketch.t_family = cli.tbase;
    sc.sketch.eps = cli.eps;
    sc.sketch.delta = cli.delta;
    sc.sketch.c_factor = cli.cfactor;
    sc.sketch.seed = cli.seed;
    sc.sketch.adaptive = cli.adaptive;
    sc.sketch.m = cli.m;
    sc.oracle = cli.oracle;
    sc.rank = cli.rank;
    if let Some(p) = &cli.spline_l {
        sc.spline = Some(SplineSpec::new(load_matrix(p)?, cli.lambda)?);
    }
    if let Some(p) = &cli.stream {
        sc.events = load_stream(p)?;
    }
    if let Some(tree) = resumed {
        let cfg = tree.config();
        sc.sketch.c_family = cfg.c_family;
        sc.sketch.t_family = cfg.t_family;
        sc.sketch.adaptive = cfg.adaptive;
        sc.initial_tree = Some(tree);
    }
    Ok(sc)
}

fn emit(cli: &Cli, csv: &str) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, csv).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let sc = build_scenario(cli)?;
    match cli.seeds {
        Some(seeds) => {
            if sc.initial_tree.is_some() {
                return Err(Error::Config("--seeds cannot be combined with --resume".into()));
            }
            let runs = replay_seeds(&sc, seeds)?;
            let records: Vec<_> = runs.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
            emit(cli, &format_report(&records))?;
            let summary = summarize(&runs, 1.0 + cli.eps);
            eprintln!(
                "pass rate {}/{} evaluated seeds ({:.1}%) with every query ratio <= {}, {} seeds run",
                summary.passed,
                summary.evaluated,
                100.0 * summary.pass_rate(),
                1.0 + cli.eps,
                summary.seeds
            );
        }
        None => {
            let (records, tree) = replay_with_state(&sc)?;
            emit(cli, &format_report(&records))?;
            if let Some(path) = &cli.snapshot_out {
                let tree = tree.ok_or_else(|| Error::Config("the baseline solver keeps no tree to snapshot".into()))?;
                tree.write_snapshot(path)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kronsketch: {e}");
            ExitCode::FAILURE
        }
    }
}
