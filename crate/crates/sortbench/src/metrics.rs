//! Cost functional, offline optimum, brute-force oracle, and the invariant
//! audit over placement traces.

use crate::engine::{ArrayState, LevelSnapshot, Placement};
use crate::omega_params::{pow2, TopLevelConfig};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error(
        "brute force limited to at most 8 values and 10 cells, got {values} values, {cells} cells"
    )]
    TooLarge { values: usize, cells: usize },
}

/// Cost and competitive ratio of one finished placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub cost: f64,
    pub opt: f64,
    pub ratio: f64,
    pub occupied: usize,
    pub array_size: usize,
}

/// Sum of |A[i_k] - A[i_{k+1}]| over consecutive occupied cells, scanning
/// left to right (fixed order keeps the result bit-reproducible).
pub fn cost(array: &ArrayState) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for cell in array.cells() {
        if let Some(v) = *cell {
            if let Some(p) = prev {
                total += (v - p).abs();
            }
            prev = Some(v);
        }
    }
    total
}

/// Offline optimum: the sorted arrangement telescopes to max - min.
pub fn opt_cost(values: &[f64]) -> f64 {
    if values.len() <= 1 {
        return 0.0;
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    max - min
}

/// Ratio convention: 1 when both cost and opt are 0, +infinity when only
/// opt is 0.
pub fn ratio(cost: f64, opt: f64) -> f64 {
    if opt == 0.0 {
        if cost == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        cost / opt
    }
}

pub fn cost_report(array: &ArrayState, values: &[f64]) -> CostReport {
    let c = cost(array);
    let o = opt_cost(values);
    CostReport {
        cost: c,
        opt: o,
        ratio: ratio(c, o),
        occupied: array.occupied(),
        array_size: array.len(),
    }
}

/// Exhaustive minimum cost over all injective placements of `values` into
/// `cells` array cells. Independent oracle for [`opt_cost`]; factorial, so
/// capped at 8 values and 10 cells.
pub fn brute_force_opt(values: &[f64], cells: usize) -> Result<f64, MetricsError> {
    if values.len() > 8 || cells > 10 || values.len() > cells {
        return Err(MetricsError::TooLarge {
            values: values.len(),
            cells,
        });
    }
    if values.len() <= 1 {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(values.len());
    choose_cells(0, cells, values.len(), &mut chosen, &mut |_slots| {
        // Cells are chosen in increasing order, so an arrangement's cost is
        // the sum of adjacent differences in assignment order.
        let mut perm: Vec<f64> = values.to_vec();
        permute(&mut perm, 0, &mut |arrangement| {
            let mut c = 0.0;
            for w in arrangement.windows(2) {
                c += (w[1] - w[0]).abs();
            }
            if c < best {
                best = c;
            }
        });
    });
    Ok(best)
}

fn choose_cells(
    start: usize,
    cells: usize,
    remaining: usize,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if remaining == 0 {
        visit(chosen);
        return;
    }
    for c in start..=cells - remaining {
        chosen.push(c);
        choose_cells(c + 1, cells, remaining - 1, chosen, visit);
        chosen.pop();
    }
}

fn permute(values: &mut [f64], at: usize, visit: &mut impl FnMut(&[f64])) {
    if at == values.len() {
        visit(values);
        return;
    }
    for i in at..values.len() {
        values.swap(at, i);
        permute(values, at + 1, visit);
        values.swap(at, i);
    }
}

/// One failed check, with where it was observed.
#[derive(Debug, Clone)]
pub struct Violation {
    pub invariant: String,
    pub location: String,
    pub detail: String,
}

/// Per-node summary mirrored into experiment reports.
#[derive(Debug, Clone)]
pub struct LevelSummary {
    pub k: u32,
    pub boxes: u64,
    pub subintervals: u64,
    pub n_prime: u64,
    pub width: u64,
    pub s_count: u64,
    pub max_box_count: u64,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
    pub per_level: Vec<LevelSummary>,
}

/// Checks the trace and every recursion node against the correctness
/// conditions: single occupancy, per-box capacity and purity, the box-sorter
/// budget `|S| * (1 + 2^{k-3} d) <= l`, and the two per-level numeric
/// inequalities of the cost analysis. Violations are data, not errors.
pub fn audit(
    trace: &[Placement],
    top: &TopLevelConfig,
    snapshots: &[LevelSnapshot],
) -> AuditReport {
    let mut violations = Vec::new();

    let mut seen = vec![false; top.array_size as usize];
    for p in trace {
        if p.cell >= seen.len() {
            violations.push(Violation {
                invariant: "single occupancy".into(),
                location: format!("step {}", p.step),
                detail: format!("cell {} outside array of size {}", p.cell, seen.len()),
            });
        } else if seen[p.cell] {
            violations.push(Violation {
                invariant: "single occupancy".into(),
                location: format!("step {}", p.step),
                detail: format!("cell {} written twice", p.cell),
            });
        } else {
            seen[p.cell] = true;
        }
    }

    let per_level = snapshots
        .iter()
        .map(|s| LevelSummary {
            k: s.k,
            boxes: s.boxes,
            subintervals: s.subintervals,
            n_prime: s.n_prime,
            width: s.width,
            s_count: s.s_count,
            max_box_count: s.max_box_count,
        })
        .collect();

    for snap in snapshots {
        audit_node(snap, &mut violations);
    }

    AuditReport {
        pass: violations.is_empty(),
        violations,
        per_level,
    }
}

fn audit_node(snap: &LevelSnapshot, violations: &mut Vec<Violation>) {
    let loc = format!("sorter node depth {} (k={})", snap.depth, snap.k);
    let k = snap.k as i32;

    if snap.max_box_count > snap.n_prime {
        violations.push(Violation {
            invariant: "box capacity".into(),
            location: loc.clone(),
            detail: format!(
                "max box count {} exceeds n'={}",
                snap.max_box_count, snap.n_prime
            ),
        });
    }

    let budget_lhs = snap.s_count as f64 * (1.0 + pow2(k - 3) * snap.delta);
    if budget_lhs > snap.boxes as f64 * (1.0 + 1e-9) {
        violations.push(Violation {
            invariant: "box-sorter budget".into(),
            location: loc.clone(),
            detail: format!(
                "|S|={} with (1 + 2^(k-3) d) factor gives {budget_lhs}, above l={}",
                snap.s_count, snap.boxes
            ),
        });
    }

    let l_bound =
        (1.0 + pow2(k) * snap.delta) / (pow2(k - 5) * snap.delta) * snap.subintervals as f64;
    if snap.boxes as f64 > l_bound * (1.0 + 1e-9) {
        violations.push(Violation {
            invariant: "box count bound".into(),
            location: loc.clone(),
            detail: format!("l={} exceeds bound {l_bound}", snap.boxes),
        });
    }

    let s_bound = (pow2(7 - 2 * k) / (snap.delta * snap.delta) + pow2(7 - k) / snap.delta)
        * (snap.n_cap as f64).powf(
            crate::omega_params::omega(snap.k as i64 - 4) as f64
                / crate::omega_params::omega(snap.k as i64) as f64,
        );
    if snap.s_count as f64 > s_bound * (1.0 + 1e-9) {
        violations.push(Violation {
            invariant: "forwarded count bound".into(),
            location: loc.clone(),
            detail: format!("|S|={} exceeds bound {s_bound}", snap.s_count),
        });
    }

    let sub_width = snap.beta / snap.subintervals as f64;
    let tol = sub_width * 1e-9;
    for bs in &snap.box_stats {
        if bs.count > snap.n_prime {
            violations.push(Violation {
                invariant: "box capacity".into(),
                location: loc.clone(),
                detail: format!(
                    "box {} holds {} > n'={}",
                    bs.box_index, bs.count, snap.n_prime
                ),
            });
        }
        let lo = snap.alpha + bs.subinterval as f64 * sub_width;
        let hi = lo + sub_width;
        if bs.min_value < lo - tol || bs.max_value >= hi + tol {
            violations.push(Violation {
                invariant: "box purity".into(),
                location: loc.clone(),
                detail: format!(
                    "box {} (subinterval {}) holds values in [{}, {}], outside [{lo}, {hi})",
                    bs.box_index, bs.subinterval, bs.min_value, bs.max_value
                ),
            });
        }
    }
}
