//! `nql`: load knowledge bases, run queries, train and evaluate models, and
//! benchmark traversal at scale.

mod bench;
mod commands;
mod error;
mod kb_source;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;
use kb_source::KbArgs;
use output::{Format, Output};

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "NQL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nql", version, about = "Differentiable knowledge-base query engine")]
struct Cli {
    /// Output format: human-readable text or line-delimited JSON records.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Seed for every random choice a command makes. Echoed in the output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for batch-parallel kernels (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a KB and report its size.
    LoadCheck(LoadCheckArgs),
    /// Evaluate a query and print the resulting multiset.
    Query(QueryArgs),
    /// Train a model on a dataset and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Time traversals over a generated uniform random KB.
    Bench(BenchArgs),
    /// Write a synthetic kinship KB with question datasets.
    GenerateKinship(GenerateArgs),
}

#[derive(Debug, Args)]
struct LoadCheckArgs {
    #[command(flatten)]
    kb: KbArgs,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    kb: KbArgs,

    /// Query text. Several `name = expr` statements may be separated by `;`
    /// or newlines; the last one is printed.
    #[arg(required_unless_present = "file", conflicts_with = "file")]
    query: Option<String>,

    /// Read the query program from a file.
    #[arg(long)]
    file: Option<PathBuf>,

    /// Print at most this many entities per result.
    #[arg(long)]
    top_k: Option<usize>,

    /// Drop entities whose weight is below this.
    #[arg(long, default_value_t = 0.0)]
    min_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Template,
    Qa,
    Multihop,
    Recurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    TargetMass,
    Bce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LeftoverArg {
    Drop,
    AddToLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConstraintArg {
    Identity,
    Softmax,
    Softplus,
    Sigmoid,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    kb: KbArgs,

    /// Training examples: `question<TAB>seed<TAB>target1,target2,...`.
    #[arg(long)]
    dataset: PathBuf,

    /// Optional held-out examples, scored after every epoch.
    #[arg(long)]
    eval_dataset: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = ModelArg::Template)]
    model: ModelArg,

    /// Relation group the model chooses relations from.
    #[arg(long, default_value = "rel_t")]
    group: String,

    #[arg(long, default_value_t = 20)]
    epochs: usize,

    #[arg(long, default_value_t = 32)]
    batch_size: usize,

    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,

    #[arg(long, default_value_t = 0.05)]
    lr: f64,

    /// SGD momentum.
    #[arg(long, default_value_t = 0.0)]
    momentum: f64,

    #[arg(long, value_enum, default_value_t = LossArg::TargetMass)]
    loss: LossArg,

    /// Encoder width for the qa, multihop and recurrent models.
    #[arg(long, default_value_t = 32)]
    dim: usize,

    /// Hop budget of the recurrent model.
    #[arg(long, default_value_t = 5)]
    max_hops: usize,

    /// What the recurrent model does with halting mass left after the last hop.
    #[arg(long, value_enum, default_value_t = LeftoverArg::Drop)]
    leftover: LeftoverArg,

    /// Constraint on the template model's relation weights.
    #[arg(long, value_enum, default_value_t = ConstraintArg::Softplus)]
    constraint: ConstraintArg,

    /// Where to write the trained checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    kb: KbArgs,

    #[arg(long)]
    dataset: PathBuf,

    #[arg(long)]
    checkpoint: PathBuf,

    #[arg(long, default_value_t = 64)]
    batch_size: usize,

    #[arg(long, value_enum, default_value_t = LossArg::TargetMass)]
    loss: LossArg,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    entities: usize,

    /// Distinct facts, split evenly across relations.
    #[arg(long, default_value_t = 1_000_000)]
    tuples: usize,

    /// Relations in the KB; all of them form the group used by `follow`.
    #[arg(long, default_value_t = 12)]
    relations: usize,

    #[arg(long, default_value_t = 32)]
    batch: usize,

    /// Timed runs per measurement, after one warm-up run.
    #[arg(long, default_value_t = 20)]
    repeats: usize,

    /// Abort before building the KB if the estimated footprint exceeds this
    /// many MiB (default: available memory).
    #[arg(long)]
    memory_limit_mb: Option<u64>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Directory to write into; created if missing.
    #[arg(long)]
    out_dir: PathBuf,

    #[arg(long, default_value_t = 4)]
    generations: usize,

    #[arg(long, default_value_t = 75)]
    persons_per_generation: usize,

    #[arg(long, default_value_t = 0.8)]
    marriage_prob: f64,

    #[arg(long, default_value_t = 1)]
    min_children: usize,

    #[arg(long, default_value_t = 4)]
    max_children: usize,

    /// Chain lengths for the multi-hop question set, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    chain_hops: Vec<usize>,

    /// Number of multi-hop questions.
    #[arg(long, default_value_t = 1000)]
    chain_count: usize,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads.unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::runtime(format!("cannot start thread pool: {e}")))?;
    let mut out = Output::new(cli.format, cli.seed);
    match cli.command {
        Command::LoadCheck(a) => commands::load_check(&mut out, &a.kb),
        Command::Query(a) => commands::query(&mut out, &a),
        Command::Train(a) => commands::train(&mut out, &a),
        Command::Eval(a) => commands::eval(&mut out, &a),
        Command::Bench(a) => bench::run(&mut out, &a),
        Command::GenerateKinship(a) => commands::generate_kinship(&mut out, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message);
            ExitCode::from(e.code)
        }
    }
}
