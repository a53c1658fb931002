//! Deterministic, seeded input-stream generators.
//!
//! Oblivious workloads are fixed sequences; the midpoint adversary is
//! adaptive and inspects the strategy's array state before emitting each
//! value. Identical specs always produce identical streams (oblivious) or
//! identical decision rules (adaptive).

use crate::engine::{AdaptiveSource, ArrayState, Placement};
use crate::rng::XorShift64Star;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadName {
    Uniform,
    SortedAsc,
    SortedDesc,
    TwoCluster,
    IntervalFlood,
    Sawtooth,
    MidpointAdversary,
}

impl WorkloadName {
    pub const ALL: [WorkloadName; 7] = [
        WorkloadName::Uniform,
        WorkloadName::SortedAsc,
        WorkloadName::SortedDesc,
        WorkloadName::TwoCluster,
        WorkloadName::IntervalFlood,
        WorkloadName::Sawtooth,
        WorkloadName::MidpointAdversary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            WorkloadName::Uniform => "uniform",
            WorkloadName::SortedAsc => "sorted_asc",
            WorkloadName::SortedDesc => "sorted_desc",
            WorkloadName::TwoCluster => "two_cluster",
            WorkloadName::IntervalFlood => "interval_flood",
            WorkloadName::Sawtooth => "sawtooth",
            WorkloadName::MidpointAdversary => "midpoint_adversary",
        }
    }
}

impl FromStr for WorkloadName {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WorkloadName::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| WorkloadError::InvalidSpec(format!("unknown workload '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub name: WorkloadName,
    pub n: usize,
    pub seed: u64,
    /// Gap between the clusters of `two_cluster`.
    pub gap: f64,
    /// Width of the flooded subinterval of `interval_flood`.
    pub flood_width: f64,
}

impl WorkloadSpec {
    pub fn new(name: WorkloadName, n: usize, seed: u64) -> Self {
        Self {
            name,
            n,
            seed,
            gap: 0.2,
            flood_width: 0.01,
        }
    }
}

pub enum Workload {
    Oblivious(Vec<f64>),
    Adaptive(MidpointAdversary),
}

pub fn generate(spec: &WorkloadSpec) -> Result<Workload, WorkloadError> {
    if spec.n < 1 {
        return Err(WorkloadError::InvalidSpec("n must be at least 1".into()));
    }
    let n = spec.n;
    let mut rng = XorShift64Star::new(spec.seed);
    let stream = match spec.name {
        WorkloadName::Uniform => (0..n).map(|_| rng.next_f64()).collect(),
        WorkloadName::SortedAsc => equally_spaced(n),
        WorkloadName::SortedDesc => {
            let mut v = equally_spaced(n);
            v.reverse();
            v
        }
        WorkloadName::TwoCluster => {
            if !(0.0..1.0).contains(&spec.gap) {
                return Err(WorkloadError::InvalidSpec(format!(
                    "cluster gap must lie in [0, 1), got {}",
                    spec.gap
                )));
            }
            let half = 0.5 - spec.gap / 2.0;
            (0..n)
                .map(|t| {
                    if t % 2 == 0 {
                        rng.next_f64() * half
                    } else {
                        0.5 + spec.gap / 2.0 + rng.next_f64() * half
                    }
                })
                .collect()
        }
        WorkloadName::IntervalFlood => {
            if !(spec.flood_width > 0.0 && spec.flood_width <= 1.0) {
                return Err(WorkloadError::InvalidSpec(format!(
                    "flood width must lie in (0, 1], got {}",
                    spec.flood_width
                )));
            }
            let head = {
                let r = n.isqrt();
                if r * r < n {
                    r + 1
                } else {
                    r
                }
            };
            let mut v = equally_spaced(head);
            let lo = rng.next_f64() * (1.0 - spec.flood_width);
            v.extend((head..n).map(|_| lo + rng.next_f64() * spec.flood_width));
            v
        }
        WorkloadName::Sawtooth => {
            // Low-discrepancy golden-ratio rotation.
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            (1..=n).map(|t| (t as f64 * phi).fract()).collect()
        }
        WorkloadName::MidpointAdversary => {
            return Ok(Workload::Adaptive(MidpointAdversary::new()));
        }
    };
    Ok(Workload::Oblivious(stream))
}

/// `j / (n-1)` for j = 0..n-1; spans 0 and 1 exactly. A single value is 0.
fn equally_spaced(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|j| j as f64 / (n - 1) as f64).collect()
}

/// Adaptive stress generator.
///
/// Candidates are 0, 1, and the midpoints of consecutive distinct emitted
/// values. A candidate's score is the minimum, over all empty cells, of the
/// incremental cost of writing it there given the current cell contents; the
/// adversary emits the candidate with maximal score, breaking ties toward
/// the smallest value.
///
/// Gap bookkeeping is incremental: each maximal run of empty cells
/// contributes either a two-sided entry (values of the occupied cells
/// flanking it; incremental cost 2 * dist(c, [lo, hi])) or a one-sided
/// anchor at an array end (incremental cost |anchor - c|). Scores for the
/// sorted candidate list are then computed in one merge sweep, so a step
/// costs O(candidates + gaps) rather than O(candidates * cells).
pub struct MidpointAdversary {
    /// Sorted distinct emitted values.
    distinct: Vec<f64>,
    /// Sorted occupied cell indices.
    occupied: Vec<usize>,
    /// Two-sided gap entries (lo <= hi), sorted; a multiset.
    two_sided: Vec<(f64, f64)>,
    /// Upper endpoints of `two_sided`, independently sorted.
    two_hi: Vec<f64>,
    /// One-sided anchors, sorted; a multiset.
    one_sided: Vec<f64>,
}

impl MidpointAdversary {
    pub fn new() -> Self {
        Self {
            distinct: Vec::new(),
            occupied: Vec::new(),
            two_sided: Vec::new(),
            two_hi: Vec::new(),
            one_sided: Vec::new(),
        }
    }

    fn add_two(&mut self, a: f64, b: f64) {
        let entry = (a.min(b), a.max(b));
        let at = self.two_sided.partition_point(|e| *e < entry);
        self.two_sided.insert(at, entry);
        let at = self.two_hi.partition_point(|&h| h < entry.1);
        self.two_hi.insert(at, entry.1);
    }

    fn remove_two(&mut self, a: f64, b: f64) {
        let entry = (a.min(b), a.max(b));
        let at = self.two_sided.partition_point(|e| *e < entry);
        debug_assert!(
            self.two_sided.get(at) == Some(&entry),
            "gap bookkeeping out of sync"
        );
        self.two_sided.remove(at);
        let at = self.two_hi.partition_point(|&h| h < entry.1);
        self.two_hi.remove(at);
    }

    fn add_one(&mut self, a: f64) {
        let at = self.one_sided.partition_point(|&p| p < a);
        self.one_sided.insert(at, a);
    }

    fn remove_one(&mut self, a: f64) {
        let at = self.one_sided.partition_point(|&p| p < a);
        debug_assert!(
            self.one_sided.get(at) == Some(&a),
            "anchor bookkeeping out of sync"
        );
        self.one_sided.remove(at);
    }

    /// Folds the previous step's placement into the gap structures.
    fn absorb(&mut self, array: &ArrayState, placed: &Placement) {
        let pos = placed.cell;
        let val = placed.value;
        let idx = self.occupied.partition_point(|&q| q < pos);
        let left = idx.checked_sub(1).map(|i| self.occupied[i]);
        let right = self.occupied.get(idx).copied();
        let last = array.len() - 1;
        match (left, right) {
            (Some(l), Some(r)) => {
                let a = array.get(l).expect("occupied");
                let b = array.get(r).expect("occupied");
                self.remove_two(a, b);
                if pos - l > 1 {
                    self.add_two(a, val);
                }
                if r - pos > 1 {
                    self.add_two(val, b);
                }
            }
            (Some(l), None) => {
                let a = array.get(l).expect("occupied");
                self.remove_one(a);
                if pos - l > 1 {
                    self.add_two(a, val);
                }
                if pos < last {
                    self.add_one(val);
                }
            }
            (None, Some(r)) => {
                let b = array.get(r).expect("occupied");
                self.remove_one(b);
                if r - pos > 1 {
                    self.add_two(val, b);
                }
                if pos > 0 {
                    self.add_one(val);
                }
            }
            (None, None) => {
                if pos > 0 {
                    self.add_one(val);
                }
                if pos < last {
                    self.add_one(val);
                }
            }
        }
        self.occupied.insert(idx, pos);
    }

    /// 0, the midpoints of consecutive distinct emitted values, and 1, in
    /// strictly increasing order.
    fn candidates(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.distinct.len() + 1);
        c.push(0.0);
        c.extend(self.distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        c.push(1.0);
        c
    }

    /// Argmax of score over the sorted candidates, ties toward the smallest.
    fn pick(&self, candidates: &[f64]) -> f64 {
        if self.two_sided.is_empty() && self.one_sided.is_empty() {
            return candidates[0];
        }
        let mut best = candidates[0];
        let mut best_score = f64::NEG_INFINITY;
        let (mut i_lo, mut i_hi, mut i_pt) = (0usize, 0usize, 0usize);
        let mut run_max_hi = f64::NEG_INFINITY;
        for &c in candidates {
            while i_lo < self.two_sided.len() && self.two_sided[i_lo].0 <= c {
                run_max_hi = run_max_hi.max(self.two_sided[i_lo].1);
                i_lo += 1;
            }
            while i_hi < self.two_hi.len() && self.two_hi[i_hi] < c {
                i_hi += 1;
            }
            while i_pt < self.one_sided.len() && self.one_sided[i_pt] <= c {
                i_pt += 1;
            }
            let d_int = if self.two_sided.is_empty() {
                f64::INFINITY
            } else if i_lo > 0 && run_max_hi >= c {
                0.0
            } else {
                let above = if i_lo < self.two_sided.len() {
                    self.two_sided[i_lo].0 - c
                } else {
                    f64::INFINITY
                };
                let below = if i_hi > 0 {
                    c - self.two_hi[i_hi - 1]
                } else {
                    f64::INFINITY
                };
                above.min(below)
            };
            let d_pt = {
                let above = if i_pt < self.one_sided.len() {
                    self.one_sided[i_pt] - c
                } else {
                    f64::INFINITY
                };
                let below = if i_pt > 0 {
                    c - self.one_sided[i_pt - 1]
                } else {
                    f64::INFINITY
                };
                above.min(below)
            };
            let score = (2.0 * d_int).min(d_pt);
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        best
    }
}

impl Default for MidpointAdversary {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptiveSource for MidpointAdversary {
    fn next_value(&mut self, array: &ArrayState, last: Option<&Placement>) -> f64 {
        if let Some(p) = last {
            self.absorb(array, p);
        }
        let candidates = self.candidates();
        let choice = self.pick(&candidates);
        let at = self.distinct.partition_point(|&v| v < choice);
        if self.distinct.get(at) != Some(&choice) {
            self.distinct.insert(at, choice);
        }
        choice
    }
}
