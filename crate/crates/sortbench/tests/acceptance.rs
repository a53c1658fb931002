//! Acceptance gate: one test per release criterion, each printing a single
//! `criterion N (name): PASS|FAIL` line (visible with `--nocapture`).
//!
//! The heavyweight correctness sweep is shared between criteria through a
//! `OnceLock`, so the grid runs once per process no matter which criteria
//! consume its rows.

use rayon::prelude::*;
use sortbench::bench::{oracle_suite, run_one, ExperimentRow, WorkloadConfig};
use sortbench::engine::{new_strategy, run, StrategyKind};
use sortbench::omega_params::{derive_level, derive_top, growth_root, omega, LevelDerivation};
use sortbench::rng::XorShift64Star;
use std::sync::OnceLock;

fn report(number: u32, name: &str, pass: bool) {
    println!(
        "criterion {number} ({name}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number} ({name}) failed");
}

fn wl(name: &str) -> WorkloadConfig {
    WorkloadConfig {
        name: name.into(),
        gap: None,
        flood_width: None,
    }
}

const WORKLOADS: [&str; 7] = [
    "uniform",
    "sorted_asc",
    "sorted_desc",
    "two_cluster",
    "interval_flood",
    "sawtooth",
    "midpoint_adversary",
];

/// Full correctness grid for the sorter strategy, audits enabled.
/// The midpoint adversary is deterministic and ignores the seed, so its
/// grid points are deduplicated to one seed per (n, epsilon).
fn sweep_rows() -> &'static [Option<ExperimentRow>] {
    static SWEEP: OnceLock<Vec<Option<ExperimentRow>>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let mut points = Vec::new();
        for &n in &[100u64, 1_000, 10_000, 100_000] {
            for &eps in &[0.25f64, 0.5, 1.0, 2.0, 3.0] {
                for workload in WORKLOADS {
                    let seeds: &[u64] = if workload == "midpoint_adversary" {
                        &[1]
                    } else {
                        &[1, 2, 3]
                    };
                    for &seed in seeds {
                        points.push((workload, n, eps, seed));
                    }
                }
            }
        }
        points
            .par_iter()
            .map(|&(workload, n, eps, seed)| {
                run_one("sorter", &wl(workload), n, eps, seed, true, false)
                    .map(|r| r.row)
                    .map_err(|e| {
                        eprintln!("sweep point ({workload}, n={n}, eps={eps}, seed={seed}): {e}")
                    })
                    .ok()
            })
            .collect()
    })
}

#[test]
fn criterion_1_omega_sequence() {
    let expected: [u128; 9] = [4, 6, 8, 10, 14, 20, 28, 38, 52];
    let table_ok = (2..=10).all(|i| omega(i) == expected[(i - 2) as usize]);
    let ratio = omega(61) as f64 / omega(60) as f64;
    let growth_ok = (ratio - growth_root()).abs() < 1e-3;
    report(1, "omega sequence", table_ok && growth_ok);
}

#[test]
fn criterion_2_parameter_golden_values() {
    let level_ok = match derive_level(2, 0.1, 10_000, 18_000, 0.0, 1.0) {
        LevelDerivation::Params(p) => {
            p.n_prime == 14 && p.width == 19 && p.boxes == 947 && p.subintervals == 100
        }
        LevelDerivation::Degenerate => false,
    };
    let top = derive_top(1_000_000, 1.0).expect("valid input");
    let top_ok = top.k == 9 && top.delta == 1.0 / 1024.0 && top.array_size == 2_000_000;
    report(2, "parameter golden values", level_ok && top_ok);
}

#[test]
fn criterion_3_correctness_sweep() {
    let rows = sweep_rows();
    let pass = rows.iter().all(|row| {
        row.as_ref()
            .is_some_and(|r| r.audit_pass && !r.cost.is_nan() && r.cost.is_finite())
    });
    report(3, "correctness sweep", pass);
}

#[test]
fn criterion_4_oracle_equivalence() {
    let oracle_ok = oracle_suite(6, 500, 2024).is_ok();

    // Every strategy's cost dominates the offline optimum, both across the
    // big sorter sweep and a smaller all-strategy grid.
    let sweep_ok = sweep_rows()
        .iter()
        .flatten()
        .all(|r| r.cost >= r.opt - 1e-9 * r.opt.max(1.0));
    let mut grid = Vec::new();
    for strategy in ["sorter", "baseline", "naive_sequential", "random_cell"] {
        for workload in [
            "uniform",
            "sorted_desc",
            "two_cluster",
            "midpoint_adversary",
        ] {
            for n in [100u64, 1_000] {
                for eps in [0.5f64, 2.0] {
                    grid.push((strategy, workload, n, eps));
                }
            }
        }
    }
    let cross_ok = grid.par_iter().all(|&(strategy, workload, n, eps)| {
        match run_one(strategy, &wl(workload), n, eps, 1, false, false) {
            Ok(r) => r.row.cost >= r.row.opt - 1e-9 * r.row.opt.max(1.0),
            Err(_) => false,
        }
    });
    report(4, "oracle equivalence", oracle_ok && sweep_ok && cross_ok);
}

#[test]
fn criterion_5_cost_sanity() {
    let naive = run_one(
        "naive_sequential",
        &wl("uniform"),
        100_000,
        1.0,
        42,
        false,
        false,
    )
    .expect("naive run")
    .row;
    let sorter = run_one("sorter", &wl("uniform"), 100_000, 1.0, 42, false, false)
        .expect("sorter run")
        .row;
    let naive_ok = naive.ratio >= 2.5e4 && naive.ratio <= 4.5e4;
    let sorter_ok = sorter.ratio <= naive.ratio / 10.0;
    report(5, "cost sanity", naive_ok && sorter_ok);
}

#[test]
fn criterion_6_scaling_trend() {
    let avg_cost = |n: u64| -> f64 {
        let rows = sweep_rows();
        let costs: Vec<f64> = rows
            .iter()
            .flatten()
            .filter(|r| r.workload == "uniform" && r.epsilon == 1.0 && r.n == n)
            .map(|r| r.cost)
            .collect();
        assert_eq!(costs.len(), 3, "expected 3 seeds for uniform n={n}");
        costs.iter().sum::<f64>() / costs.len() as f64
    };
    let small = avg_cost(10_000);
    let large = avg_cost(100_000);
    report(6, "scaling trend", large <= 10.0 * small);
}

#[test]
fn criterion_7_determinism_and_fallback() {
    use std::process::Command;

    let dir = tempfile::tempdir().expect("tempdir");
    let config_path = dir.path().join("sweep.json");
    std::fs::write(
        &config_path,
        r#"{
            "strategies": ["sorter", "baseline"],
            "workloads": [{"name": "uniform"}, {"name": "two_cluster", "gap": 0.4}],
            "ns": [50, 500],
            "epsilons": [0.25, 1.0],
            "seeds": [7],
            "audit": true,
            "timing": false
        }"#,
    )
    .expect("write config");
    let run_sweep = |out: &std::path::Path| -> Vec<u8> {
        let status = Command::new(env!("CARGO_BIN_EXE_sortbench"))
            .args(["sweep", "--config"])
            .arg(&config_path)
            .env("SORTBENCH_THREADS", "3")
            .stdout(std::process::Stdio::piped())
            .output()
            .expect("spawn sortbench");
        assert!(status.status.success(), "sweep exited nonzero: {status:?}");
        std::fs::write(out, &status.stdout).expect("save csv");
        status.stdout
    };
    let first = run_sweep(&dir.path().join("a.csv"));
    let second = run_sweep(&dir.path().join("b.csv"));
    let deterministic = !first.is_empty() && first == second;

    // Tiny instances with a forced recursive k collapse to the fallback
    // strategy and still place everything.
    let fallback_ok = (2..=16u64).all(|n| {
        let array_size = 2 * n as usize;
        let mut s = match new_strategy(StrategyKind::Sorter, 2, 0.1, n, array_size as u64, 0.0, 1.0)
        {
            Ok(s) => s,
            Err(_) => return false,
        };
        let mut rng = XorShift64Star::new(n);
        let stream: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        s.max_depth() == 0 && run(s.as_mut(), &stream).is_ok()
    });
    report(7, "determinism and fallback", deterministic && fallback_ok);
}

#[test]
fn criterion_8_baseline_identity() {
    let mut rng = XorShift64Star::new(99);
    let pass = (0..100).all(|trial| {
        let n = 2 + rng.next_below(63);
        let array_size = n + rng.next_below(n + 1);
        let stream: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let k = (trial % 3) as i64 - 1; // k in {-1, 0, 1}
        let mut sorter = new_strategy(
            StrategyKind::Sorter,
            k,
            0.25,
            n as u64,
            array_size as u64,
            0.0,
            1.0,
        )
        .expect("sorter");
        let mut baseline = new_strategy(
            StrategyKind::Baseline,
            k,
            0.25,
            n as u64,
            array_size as u64,
            0.0,
            1.0,
        )
        .expect("baseline");
        let a = run(sorter.as_mut(), &stream).expect("sorter run");
        let b = run(baseline.as_mut(), &stream).expect("baseline run");
        a.iter()
            .zip(&b)
            .all(|(x, y)| x.cell == y.cell && x.value == y.value)
    });
    report(8, "baseline identity", pass);
}
