use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use elgraph::run::{run, Mode, RunConfig};

#[derive(Parser)]
#[command(
    name = "elgraph",
    version,
    about = "Elastic principal graphs: fit and grow principal curves, trees, and cubic complexes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an embedding to the data without changing the topology.
    Fit(FitArgs),
    /// Grow a principal curve, tree, or cubic complex.
    Grow(GrowArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Input dataset: CSV with numeric columns and an optional header row.
    #[arg(long)]
    input: PathBuf,

    /// Header name of the point-weight column.
    #[arg(long = "weights-col")]
    weights_col: Option<String>,

    /// Stretching modulus of edges created by the run.
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,

    /// Bending modulus of derived stars.
    #[arg(long, default_value_t = 0.1)]
    mu: f64,

    /// Relative energy-change convergence threshold.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,

    /// Cap on splitting iterations per fit.
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,

    /// Seed for everything randomized (restart jitter).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Divide point weights by their sum.
    #[arg(long)]
    normalize: bool,

    /// Write the resulting graph (with positions) as JSON.
    #[arg(long = "out-graph")]
    out_graph: Option<PathBuf>,

    /// Write per-point projections as CSV (point_id,owner,dist2).
    #[arg(long = "out-proj")]
    out_proj: Option<PathBuf>,

    /// Write the growth report as JSON lines, one record per step.
    #[arg(long = "out-report")]
    out_report: Option<PathBuf>,

    /// Write an SVG of the run projected on the first two principal
    /// components.
    #[arg(long = "out-svg")]
    out_svg: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Graph JSON (with positions) to fit instead of the PCA segment.
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Args)]
struct GrowArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Topology class to grow.
    #[arg(long, value_enum, default_value_t = Mode::Tree)]
    mode: Mode,

    /// Number of transformations; one vertex is added per step.
    #[arg(long, default_value_t = 10)]
    steps: usize,

    /// Evaluate only the top fraction q in (0, 1] of applications, ranked
    /// by local energy.
    #[arg(long)]
    preselect: Option<f64>,

    /// Factor budget for complex mode.
    #[arg(long = "max-factors", default_value_t = 3)]
    max_factors: usize,

    /// Graph JSON (with positions) to grow from instead of the PCA segment.
    #[arg(long)]
    graph: Option<PathBuf>,
}

fn config_from(common: CommonArgs) -> RunConfig {
    RunConfig {
        weights_col: common.weights_col,
        lambda: common.lambda,
        mu: common.mu,
        epsilon: common.epsilon,
        max_iterations: common.max_iter,
        seed: common.seed,
        normalize: common.normalize,
        out_graph: common.out_graph,
        out_proj: common.out_proj,
        out_report: common.out_report,
        out_svg: common.out_svg,
        ..RunConfig::new(common.input)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.command {
        Command::Fit(args) => RunConfig {
            steps: 0,
            graph_in: args.graph,
            ..config_from(args.common)
        },
        Command::Grow(args) => RunConfig {
            mode: args.mode,
            steps: args.steps,
            preselect: args.preselect,
            max_factors: args.max_factors,
            graph_in: args.graph,
            ..config_from(args.common)
        },
    };

    match run(&config) {
        Ok(summary) => {
            let dimension = summary
                .dimension
                .map(|d| format!(" dimension={d}"))
                .unwrap_or_default();
            println!(
                "vertices={} steps={} energy_total={:.6e} energy_approx={:.6e}{}",
                summary.vertices,
                summary.steps_taken,
                summary.energy.total(),
                summary.energy.approximation,
                dimension
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}
