//! `sortbench` — benchmark harness for online sorting strategies.
//!
//! Exit codes: 0 success, 1 an experiment failed or an audit flagged a
//! violation, 2 bad configuration, 3 I/O failure.

use clap::{Parser, Subcommand};
use sortbench::bench::{
    all_ok, emit, run_experiment, BenchError, Config, OutputConfig, OutputFormat, WorkloadConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sortbench",
    about = "Benchmark online sorting strategies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment and print its row.
    Run {
        /// Strategy: sorter, baseline, naive_sequential, random_cell.
        #[arg(long, default_value = "sorter")]
        strategy: String,
        /// Workload name, e.g. uniform or midpoint_adversary.
        #[arg(long, default_value = "uniform")]
        workload: String,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Slack factor in (0, 3].
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gap between the two clusters of the two_cluster workload.
        #[arg(long)]
        gap: Option<f64>,
        /// Width of the interval_flood target window.
        #[arg(long)]
        flood_width: Option<f64>,
        /// Check structural invariants after the run.
        #[arg(long)]
        audit: bool,
        /// Output format: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Write output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment grid described by a JSON config file.
    Sweep {
        /// Path to the JSON config.
        #[arg(long)]
        config: PathBuf,
    },
    /// Cross-check the cost oracle against exhaustive placement search.
    Oracle {
        /// Largest multiset size to test (capped at 8).
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configured_pool() {
        Ok(pool) => pool.install(|| dispatch(cli)),
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn configured_pool() -> Result<rayon::ThreadPool, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("SORTBENCH_THREADS") {
        let threads: usize = raw
            .parse()
            .map_err(|_| format!("SORTBENCH_THREADS must be a positive integer, got '{raw}'"))?;
        if threads == 0 {
            return Err("SORTBENCH_THREADS must be a positive integer, got '0'".into());
        }
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| format!("failed to build thread pool: {e}"))
}

fn dispatch(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run {
            strategy,
            workload,
            n,
            epsilon,
            seed,
            gap,
            flood_width,
            audit,
            format,
            out,
        } => {
            let config = Config {
                strategies: vec![strategy],
                workloads: vec![WorkloadConfig {
                    name: workload,
                    gap,
                    flood_width,
                }],
                ns: vec![n],
                epsilons: vec![epsilon],
                seeds: vec![seed],
                audit,
                timing: true,
                output: OutputConfig { format, path: out },
            };
            sweep(config)
        }
        Command::Sweep { config } => match load_config(&config) {
            Ok(cfg) => sweep(cfg),
            Err(e) => Err(e),
        },
        Command::Oracle {
            max_n,
            trials,
            seed,
        } => match sortbench::bench::oracle_suite(max_n, trials, seed) {
            Ok(()) => {
                println!(
                    "oracle agreement: {trials} trials passed (max_n = {})",
                    max_n.min(8)
                );
                return ExitCode::SUCCESS;
            }
            Err(msg) => {
                eprintln!("oracle disagreement: {msg}");
                return ExitCode::from(1);
            }
        },
    };
    match result {
        Ok(clean) => {
            if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(BenchError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e @ BenchError::Io { .. }) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}

fn load_config(path: &std::path::Path) -> Result<Config, BenchError> {
    let raw = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&raw)
        .map_err(|e| BenchError::Config(format!("invalid config {}: {e}", path.display())))
}

fn sweep(config: Config) -> Result<bool, BenchError> {
    let format: OutputFormat = config.output.format.parse()?;
    let rows = run_experiment(&config)?;
    emit(&rows, format, config.output.path.as_deref())?;
    Ok(all_ok(&rows))
}
