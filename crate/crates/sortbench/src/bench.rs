//! Experiment-grid runner behind the `sortbench` CLI.
//!
//! A config names strategies, workloads, and grids of n / epsilon / seed;
//! every grid point is an independent experiment, so points run in
//! parallel while output keeps the deterministic grid order.

use crate::engine::{new_strategy, AdaptiveSource, Placement, Strategy, StrategyKind};
use crate::metrics::{audit, cost_report, AuditReport};
use crate::omega_params::derive_top;
use crate::workloads::{generate, Workload, WorkloadName, WorkloadSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Deserialize)]
pub struct WorkloadConfig {
    pub name: String,
    #[serde(default)]
    pub gap: Option<f64>,
    #[serde(default)]
    pub flood_width: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct OutputConfig {
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn default_format() -> String {
    "csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            format: default_format(),
            path: None,
        }
    }
}

fn default_timing() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
pub struct Config {
    pub strategies: Vec<String>,
    pub workloads: Vec<WorkloadConfig>,
    pub ns: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub audit: bool,
    /// Wall-clock timing is inherently noisy; disable it (runtime_ms = 0)
    /// when byte-stable output matters.
    #[serde(default = "default_timing")]
    pub timing: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(BenchError::Config(format!(
                "unknown output format '{other}'"
            ))),
        }
    }
}

/// One row of the result table; the CSV column order is the field order.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub strategy: String,
    pub workload: String,
    pub n: u64,
    pub epsilon: f64,
    pub seed: u64,
    pub array_size: u64,
    pub cost: f64,
    pub opt: f64,
    pub ratio: f64,
    pub runtime_ms: f64,
    pub k: u32,
    pub delta: f64,
    pub max_recursion_depth: u32,
    pub audit_pass: bool,
}

pub const CSV_HEADER: &str = "strategy,workload,n,epsilon,seed,array_size,cost,opt,ratio,\
                              runtime_ms,k,delta,max_recursion_depth,audit_pass";

/// Full outcome of one experiment, including the audit detail that the CSV
/// row only summarizes.
pub struct RunReport {
    pub row: ExperimentRow,
    pub audit: Option<AuditReport>,
    pub final_array: Vec<Option<f64>>,
}

fn parse_strategy(name: &str, seed: u64) -> Result<StrategyKind, BenchError> {
    match name {
        "sorter" => Ok(StrategyKind::Sorter),
        "baseline" => Ok(StrategyKind::Baseline),
        "naive_sequential" => Ok(StrategyKind::NaiveSequential),
        "random_cell" => Ok(StrategyKind::RandomCell { seed }),
        other => Err(BenchError::Config(format!("unknown strategy '{other}'"))),
    }
}

fn workload_spec(cfg: &WorkloadConfig, n: usize, seed: u64) -> Result<WorkloadSpec, BenchError> {
    let name = WorkloadName::from_str(&cfg.name).map_err(|e| BenchError::Config(e.to_string()))?;
    let mut spec = WorkloadSpec::new(name, n, seed);
    if let Some(gap) = cfg.gap {
        spec.gap = gap;
    }
    if let Some(w) = cfg.flood_width {
        spec.flood_width = w;
    }
    Ok(spec)
}

fn validate(config: &Config) -> Result<(), BenchError> {
    if config.strategies.is_empty()
        || config.workloads.is_empty()
        || config.ns.is_empty()
        || config.epsilons.is_empty()
        || config.seeds.is_empty()
    {
        return Err(BenchError::Config(
            "grid must be nonempty in every dimension".into(),
        ));
    }
    for s in &config.strategies {
        parse_strategy(s, 0)?;
    }
    for w in &config.workloads {
        workload_spec(w, 1, 0)?;
    }
    for &eps in &config.epsilons {
        if !(eps > 0.0 && eps <= 3.0) {
            return Err(BenchError::Config(format!(
                "epsilon must lie in (0, 3], got {eps}"
            )));
        }
    }
    for &n in &config.ns {
        if n < 2 {
            return Err(BenchError::Config(format!("n must be at least 2, got {n}")));
        }
    }
    config.output.format.parse::<OutputFormat>()?;
    Ok(())
}

/// Runs the full grid in deterministic order
/// (strategy, workload, n, epsilon, seed).
pub fn run_experiment(config: &Config) -> Result<Vec<ExperimentRow>, BenchError> {
    validate(config)?;
    let mut grid = Vec::new();
    for strategy in &config.strategies {
        for workload in &config.workloads {
            for &n in &config.ns {
                for &eps in &config.epsilons {
                    for &seed in &config.seeds {
                        grid.push((strategy.clone(), workload.clone(), n, eps, seed));
                    }
                }
            }
        }
    }
    let rows: Vec<ExperimentRow> = grid
        .par_iter()
        .map(|(strategy, workload, n, eps, seed)| {
            match run_one(
                strategy,
                workload,
                *n,
                *eps,
                *seed,
                config.audit,
                config.timing,
            ) {
                Ok(report) => report.row,
                Err(e) => {
                    // Per-row failures don't abort the sweep.
                    eprintln!(
                        "experiment ({strategy}, {}, n={n}, eps={eps}, seed={seed}) failed: {e}",
                        workload.name
                    );
                    failed_row(strategy, &workload.name, *n, *eps, *seed)
                }
            }
        })
        .collect();
    Ok(rows)
}

fn failed_row(strategy: &str, workload: &str, n: u64, epsilon: f64, seed: u64) -> ExperimentRow {
    let (k, delta, array_size) = derive_top(n, epsilon)
        .map(|t| (t.k, t.delta, t.array_size))
        .unwrap_or((0, 0.0, 0));
    ExperimentRow {
        strategy: strategy.into(),
        workload: workload.into(),
        n,
        epsilon,
        seed,
        array_size,
        cost: f64::NAN,
        opt: f64::NAN,
        ratio: f64::NAN,
        runtime_ms: f64::NAN,
        k,
        delta,
        max_recursion_depth: 0,
        audit_pass: false,
    }
}

#[derive(Debug, Error)]
enum RowError {
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("run failed: {0}")]
    Run(String),
}

/// Runs one grid point end to end.
pub fn run_one(
    strategy_name: &str,
    workload_cfg: &WorkloadConfig,
    n: u64,
    epsilon: f64,
    seed: u64,
    audit_enabled: bool,
    timing: bool,
) -> Result<RunReport, BenchError> {
    match run_one_inner(
        strategy_name,
        workload_cfg,
        n,
        epsilon,
        seed,
        audit_enabled,
        timing,
    ) {
        Ok(r) => Ok(r),
        Err(RowError::Bench(e)) => Err(e),
        Err(RowError::Run(msg)) => Err(BenchError::Config(msg)),
    }
}

fn run_one_inner(
    strategy_name: &str,
    workload_cfg: &WorkloadConfig,
    n: u64,
    epsilon: f64,
    seed: u64,
    audit_enabled: bool,
    timing: bool,
) -> Result<RunReport, RowError> {
    let top = derive_top(n, epsilon).map_err(|e| BenchError::Config(e.to_string()))?;
    let kind = parse_strategy(strategy_name, seed)?;
    // Normalized workloads include the value 1 itself, so the working
    // interval is widened to [0, 1 + 2^-52).
    let beta = 1.0 + f64::EPSILON;
    let mut strategy = new_strategy(kind, top.k as i64, top.delta, n, top.array_size, 0.0, beta)
        .map_err(|e| BenchError::Config(e.to_string()))?;

    let spec = workload_spec(workload_cfg, n as usize, seed)?;
    let workload = generate(&spec).map_err(|e| BenchError::Config(e.to_string()))?;

    let (stream, trace, elapsed) = match workload {
        Workload::Oblivious(stream) => {
            let (trace, elapsed) =
                timed_run(strategy.as_mut(), &stream, timing).map_err(RowError::Run)?;
            (stream, trace, elapsed)
        }
        Workload::Adaptive(mut adversary) => {
            timed_adaptive(strategy.as_mut(), &mut adversary, n as usize, timing)
                .map_err(RowError::Run)?
        }
    };

    let report = cost_report(strategy.array(), &stream);
    let audit_report = if audit_enabled {
        let mut snapshots = Vec::new();
        strategy.collect_snapshots(0, &mut snapshots);
        Some(audit(&trace, &top, &snapshots))
    } else {
        None
    };
    let row = ExperimentRow {
        strategy: strategy_name.into(),
        workload: workload_cfg.name.clone(),
        n,
        epsilon,
        seed,
        array_size: top.array_size,
        cost: report.cost,
        opt: report.opt,
        ratio: report.ratio,
        runtime_ms: if timing {
            elapsed.as_secs_f64() * 1e3
        } else {
            0.0
        },
        k: top.k,
        delta: top.delta,
        max_recursion_depth: strategy.max_depth() as u32,
        audit_pass: audit_report.as_ref().map(|a| a.pass).unwrap_or(true),
    };
    Ok(RunReport {
        row,
        audit: audit_report,
        final_array: strategy.array().cells().to_vec(),
    })
}

fn timed_run(
    strategy: &mut dyn Strategy,
    stream: &[f64],
    timing: bool,
) -> Result<(Vec<Placement>, Duration), String> {
    let start = timing.then(Instant::now);
    let trace = crate::engine::run(strategy, stream).map_err(|e| e.to_string())?;
    Ok((trace, start.map(|s| s.elapsed()).unwrap_or_default()))
}

/// Adaptive runs time only the place calls, not the adversary's own work.
fn timed_adaptive(
    strategy: &mut dyn Strategy,
    source: &mut dyn AdaptiveSource,
    n: usize,
    timing: bool,
) -> Result<(Vec<f64>, Vec<Placement>, Duration), String> {
    let mut trace: Vec<Placement> = Vec::with_capacity(n);
    let mut stream = Vec::with_capacity(n);
    let mut elapsed = Duration::ZERO;
    for step in 0..n {
        let value = source.next_value(strategy.array(), trace.last());
        stream.push(value);
        let start = timing.then(Instant::now);
        let cell = strategy
            .place(value)
            .map_err(|e| format!("placement failed at step {step}: {e}"))?;
        if let Some(s) = start {
            elapsed += s.elapsed();
        }
        trace.push(Placement { step, value, cell });
    }
    Ok((stream, trace, elapsed))
}

/// CSV with IEEE round-trip decimal formatting, byte-stable for identical
/// inputs.
pub fn to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.strategy,
            r.workload,
            r.n,
            r.epsilon,
            r.seed,
            r.array_size,
            r.cost,
            r.opt,
            r.ratio,
            r.runtime_ms,
            r.k,
            r.delta,
            r.max_recursion_depth,
            r.audit_pass
        ));
    }
    out
}

pub fn to_json(rows: &[ExperimentRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows are always serializable")
}

pub fn emit(
    rows: &[ExperimentRow],
    format: OutputFormat,
    path: Option<&Path>,
) -> Result<(), BenchError> {
    let payload = match format {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Json => to_json(rows),
    };
    match path {
        Some(p) => std::fs::write(p, payload).map_err(|source| BenchError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

/// True when every row completed and every requested audit passed.
pub fn all_ok(rows: &[ExperimentRow]) -> bool {
    rows.iter().all(|r| r.audit_pass && !r.cost.is_nan())
}

/// Agreement suite behind `sortbench oracle`: random multisets checked
/// against the exhaustive-placement oracle.
pub fn oracle_suite(max_n: usize, trials: usize, seed: u64) -> Result<(), String> {
    use crate::metrics::{brute_force_opt, opt_cost};
    let max_n = max_n.min(8);
    let mut rng = crate::rng::XorShift64Star::new(seed);
    for t in 0..trials {
        let n = 1 + rng.next_below(max_n);
        let cells = (n + rng.next_below(10 - n.min(9))).min(9).max(n);
        // Values on a 2^-32 lattice keep every gap sum exact in f64, so the
        // two oracles must agree bit-for-bit, not just approximately.
        let values: Vec<f64> = (0..n)
            .map(|_| (rng.next_u64() >> 32) as f64 / (1u64 << 32) as f64)
            .collect();
        let bf = brute_force_opt(&values, cells).map_err(|e| e.to_string())?;
        let direct = opt_cost(&values);
        if bf != direct {
            return Err(format!(
                "trial {t}: brute force gives {bf}, max-min gives {direct} for {values:?}"
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basic_config() -> Config {
        Config {
            strategies: vec!["sorter".into()],
            workloads: vec![WorkloadConfig {
                name: "uniform".into(),
                gap: None,
                flood_width: None,
            }],
            ns: vec![1000],
            epsilons: vec![1.0],
            seeds: vec![42],
            audit: true,
            timing: false,
            output: OutputConfig::default(),
        }
    }

    #[test]
    fn single_point_grid_passes_audit() {
        let rows = run_experiment(&basic_config()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].audit_pass);
        assert_eq!(rows[0].array_size, 2000);
        assert!(rows[0].cost >= rows[0].opt);
    }

    #[test]
    fn epsilon_out_of_range_is_config_error() {
        let mut cfg = basic_config();
        cfg.epsilons = vec![4.0];
        assert!(matches!(run_experiment(&cfg), Err(BenchError::Config(_))));
    }

    #[test]
    fn unknown_strategy_is_config_error() {
        let mut cfg = basic_config();
        cfg.strategies = vec!["quantum".into()];
        assert!(matches!(run_experiment(&cfg), Err(BenchError::Config(_))));
    }

    #[test]
    fn naive_on_sorted_stream_is_optimal() {
        let mut cfg = basic_config();
        cfg.strategies = vec!["naive_sequential".into()];
        cfg.workloads = vec![WorkloadConfig {
            name: "sorted_asc".into(),
            gap: None,
            flood_width: None,
        }];
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows[0].ratio, 1.0);
    }

    #[test]
    fn csv_shape() {
        assert_eq!(to_csv(&[]).lines().count(), 1);
        let rows = run_experiment(&basic_config()).unwrap();
        let csv = to_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("strategy,workload,n,epsilon,seed,array_size,cost,opt,ratio"));
    }

    #[test]
    fn rows_are_byte_stable_without_timing() {
        let cfg = basic_config();
        let a = to_csv(&run_experiment(&cfg).unwrap());
        let b = to_csv(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn grid_rows_are_independent() {
        let mut cfg = basic_config();
        cfg.seeds = vec![1, 2, 3];
        let rows = run_experiment(&cfg).unwrap();
        cfg.seeds = vec![1, 3];
        let fewer = run_experiment(&cfg).unwrap();
        assert_eq!(to_csv(&[rows[0].clone(), rows[2].clone()]), to_csv(&fewer));
    }

    #[test]
    fn oracle_suite_passes() {
        oracle_suite(6, 100, 7).unwrap();
    }

    #[test]
    fn json_mirrors_csv_rows() {
        let rows = run_experiment(&basic_config()).unwrap();
        let json = to_json(&rows);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), rows.len());
        assert_eq!(parsed[0]["strategy"], "sorter");
    }
}
