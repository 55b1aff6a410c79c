use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

use output::CliError;

/// Ranking-based tree diagnostics and symbolic feature selection.
#[derive(Debug, Parser)]
#[command(name = "symrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate symbolic features from the input columns of a CSV.
    GenFeatures(GenFeaturesArgs),
    /// Score every feature column against the response.
    Score(ScoreArgs),
    /// Pick the best features under each method.
    Select(SelectArgs),
    /// Run a repeated feature-selection experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Preference probability between two piecewise-monotone transforms.
    P12(P12Args),
    /// Best two-way partition of a response column.
    OraclePartition(OracleArgs),
    /// Grow, apply or render a regression tree.
    #[command(subcommand)]
    Tree(TreeCommand),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Headered numeric CSV.
    #[arg(long)]
    input: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    response: String,
}

#[derive(Debug, Args)]
struct GenFeaturesArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON with optional `architecture`, `operators` and `value_dedup`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layer string over {u, b}; overrides the config.
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ScoringArgs {
    /// Comma-separated methods, or `all`.
    #[arg(long, default_value = "all")]
    methods: String,
    /// Seed for the tree-importance bootstrap.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tree depth for tree-importance.
    #[arg(long, default_value_t = 3)]
    depth: usize,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long, default_value_t = 3)]
    n_selected: usize,
    /// Write selection.json here instead of printing it.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct P12Args {
    /// JSON with `theta1`, `theta2`, optional `c_grid` and `measure`.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated thresholds; overrides `c_grid`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Write p12.json here instead of printing it.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Size of the first group; omit to search over all sizes.
    #[arg(long)]
    size: Option<usize>,
    /// Also enumerate every partition (small inputs only).
    #[arg(long)]
    brute_force: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum TreeCommand {
    /// Grow a CART tree and write tree.json.
    Grow {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        min_leaf: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Predict every row of a CSV with a saved tree.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Column to leave out of the inputs, if present.
        #[arg(long)]
        response: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print a saved tree as indented rules or normalized JSON.
    Serialize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_parser = ["text", "json"], default_value = "text")]
        format: String,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SYMRANK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("SYMRANK_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::runtime(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::GenFeatures(a) => commands::gen_features(a),
        Command::Score(a) => commands::score(a),
        Command::Select(a) => commands::select(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::P12(a) => commands::p12(a),
        Command::OraclePartition(a) => commands::oracle_partition(a),
        Command::Tree(c) => commands::tree(c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
