use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbp_core::bench::Algo;

mod commands;
mod launch;

/// Stochastic block partitioning: generate graphs, run inference and sweep
/// benchmarks.
#[derive(Debug, Parser)]
#[command(name = "sbp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic graph with a planted partition.
    Generate(GenerateArgs),
    /// Partition a graph.
    Run(RunArgs),
    /// Sweep presets, algorithms, rank counts and seeds into a CSV file.
    #[command(after_help = BENCH_HELP)]
    Bench(BenchArgs),
}

const BENCH_HELP: &str = "\
CSV columns:
  preset           preset name
  algo             serial, dcsbp or edist
  ranks            number of ranks
  seed             seed for both the graph and the run
  nmi              normalized mutual information against the planted truth
  dl_norm          description length over that of the one-community model
  island_fraction  share of vertices with no edges in their DC-SBP subgraph (0 unless dcsbp)
  seconds          wall time of the run, generation excluded
  final_C          communities in the result
  status           ok, or the error that stopped the cell";

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Named preset, for example TTT33 or tiny-FFF150.
    #[arg(long, required_unless_present = "params")]
    preset: Option<String>,
    /// key=value manifest applied on top of the preset.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output directory for graph.tsv, truth.tsv and params.txt.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "SBP_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    intra_ratio: Option<f64>,
    #[arg(long)]
    dirichlet_alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    powerlaw_exponent: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Serial,
    Dcsbp,
    Edist,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Algo {
        match a {
            AlgoArg::Serial => Algo::Serial,
            AlgoArg::Dcsbp => Algo::Dcsbp,
            AlgoArg::Edist => Algo::Edist,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    /// Every rank is a thread of this process.
    Inprocess,
    /// One process per rank, connected over loopback TCP.
    Multiprocess,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Edge list, one `src dst [weight]` per line.
    #[arg(long)]
    graph: PathBuf,
    /// Planted partition to score against.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlgoArg::Serial)]
    algo: AlgoArg,
    #[arg(long, default_value_t = 1)]
    ranks: usize,
    #[arg(long, value_enum, default_value_t = Backend::Inprocess)]
    backend: Backend,
    /// Threads for the parallel part of each MCMC sweep.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, env = "SBP_SEED", default_value_t = 0)]
    seed: u64,
    /// Partition output, `vertex<TAB>community` per line.
    #[arg(long)]
    out: PathBuf,
    /// Per-phase trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Smallest vertex id used in the input and output files.
    #[arg(long, default_value_t = 0)]
    base_index: usize,
    /// Compare blockmodel checksums across ranks at every sync point.
    #[arg(long)]
    verify_replicas: bool,
    /// Seconds a rank waits for its peers before giving up.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    #[arg(long, hide = true)]
    rank: Option<usize>,
    #[arg(long, hide = true)]
    rendezvous: Option<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated preset names.
    #[arg(long, value_delimiter = ',', required = true)]
    preset_list: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dcsbp")]
    algos: Vec<AlgoArg>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    ranks_list: Vec<usize>,
    /// Number of seeds per cell, counting up from --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, env = "SBP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(commands::EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Run(a) => commands::run(a),
        Command::Bench(a) => commands::bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
