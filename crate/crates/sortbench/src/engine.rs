//! Online placement strategies.
//!
//! Every strategy consumes one value at a time through [`Strategy::place`],
//! returns the index of a previously empty cell, and never revises a
//! decision. The recursive sorter decomposes its array into boxes, routes
//! each value to a box via a lower-order recursive instance (the box
//! sorter), and picks the exact cell inside the box with another recursive
//! instance. At the bottom of the recursion sits a block-based baseline.

use crate::omega_params::{derive_level, omega, pow2, LevelDerivation, LevelParams};
use crate::rng::XorShift64Star;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("value {value} outside [{alpha}, {alpha_plus_beta})")]
    ValueOutOfInterval {
        value: f64,
        alpha: f64,
        alpha_plus_beta: f64,
    },
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// The target array: cells fill at most once and are never cleared.
#[derive(Debug, Clone)]
pub struct ArrayState {
    cells: Vec<Option<f64>>,
    occupied: usize,
}

impl ArrayState {
    pub fn new(len: usize) -> Self {
        Self {
            cells: vec![None; len],
            occupied: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn occupied(&self) -> usize {
        self.occupied
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.cells.get(index).copied().flatten()
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    pub fn set(&mut self, index: usize, value: f64) -> Result<(), EngineError> {
        if index >= self.cells.len() {
            return Err(EngineError::CapacityExceeded(format!(
                "cell index {index} out of range (array size {})",
                self.cells.len()
            )));
        }
        if self.cells[index].is_some() {
            return Err(EngineError::CapacityExceeded(format!(
                "cell {index} already occupied"
            )));
        }
        self.cells[index] = Some(value);
        self.occupied += 1;
        Ok(())
    }
}

/// Post-run bookkeeping for one sorter node of the recursion tree, consumed
/// by the invariant audit.
#[derive(Debug, Clone)]
pub struct LevelSnapshot {
    pub depth: usize,
    pub k: u32,
    pub delta: f64,
    pub n_cap: u64,
    pub array_size: u64,
    pub n_prime: u64,
    pub width: u64,
    pub boxes: u64,
    pub subintervals: u64,
    pub alpha: f64,
    pub beta: f64,
    /// Number of values forwarded to the box sorter (|S|).
    pub s_count: u64,
    pub max_box_count: u64,
    pub box_stats: Vec<BoxStat>,
}

/// Per-box occupancy and value range for boxes that received anything.
#[derive(Debug, Clone)]
pub struct BoxStat {
    pub box_index: usize,
    pub subinterval: usize,
    pub count: u64,
    pub min_value: f64,
    pub max_value: f64,
}

/// An online placement policy over its own [`ArrayState`].
pub trait Strategy: Send {
    /// Places one value; returns the cell index it now occupies.
    fn place(&mut self, x: f64) -> Result<usize, EngineError>;

    fn array(&self) -> &ArrayState;

    /// Appends snapshots for this node and its recursive children.
    fn collect_snapshots(&self, depth: usize, out: &mut Vec<LevelSnapshot>) {
        let _ = (depth, out);
    }

    /// Depth of the recursion tree below this strategy (0 for flat ones).
    fn max_depth(&self) -> usize {
        0
    }
}

/// Which strategy to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// The recursive box sorter (falls back to the baseline for k <= 1 or
    /// infeasible parameters).
    Sorter,
    /// The block-based bottom-of-recursion strategy.
    Baseline,
    /// Always the leftmost empty cell.
    NaiveSequential,
    /// Uniform over empty cells from a seeded generator.
    RandomCell { seed: u64 },
}

/// Builds a strategy for `n_cap` values from `[alpha, alpha + beta)` on an
/// array of `array_size` cells.
pub fn new_strategy(
    kind: StrategyKind,
    k: i64,
    delta: f64,
    n_cap: u64,
    array_size: u64,
    alpha: f64,
    beta: f64,
) -> Result<Box<dyn Strategy>, EngineError> {
    if n_cap < 1 || array_size < n_cap {
        return Err(EngineError::InvalidParams(format!(
            "need array_size >= n_cap >= 1, got n_cap={n_cap}, array_size={array_size}"
        )));
    }
    if beta <= 0.0 || beta.is_nan() {
        return Err(EngineError::InvalidParams(format!(
            "beta must be positive, got {beta}"
        )));
    }
    match kind {
        StrategyKind::Sorter => {
            if !(delta > 0.0 && delta < 0.5) {
                return Err(EngineError::InvalidParams(format!(
                    "sorter requires delta in (0, 1/2), got {delta}"
                )));
            }
            Ok(build_sorter(k, delta, n_cap, array_size, alpha, beta, true))
        }
        StrategyKind::Baseline => Ok(Box::new(Baseline::new(
            n_cap, array_size, alpha, beta, true,
        ))),
        StrategyKind::NaiveSequential => Ok(Box::new(NaiveSequential::new(array_size))),
        StrategyKind::RandomCell { seed } => Ok(Box::new(RandomCell::new(array_size, seed))),
    }
}

/// Recursive constructor. `check_interval` is enforced only at the public
/// root; internal children receive values their parent already routed, where
/// subinterval arithmetic may sit a rounding error outside the nominal
/// bounds.
fn build_sorter(
    k: i64,
    delta: f64,
    n_cap: u64,
    array_size: u64,
    alpha: f64,
    beta: f64,
    check_interval: bool,
) -> Box<dyn Strategy> {
    if k <= 1 {
        return Box::new(Baseline::new(
            n_cap,
            array_size,
            alpha,
            beta,
            check_interval,
        ));
    }
    match derive_level(k as u32, delta, n_cap, array_size, alpha, beta) {
        LevelDerivation::Degenerate => Box::new(Baseline::new(
            n_cap,
            array_size,
            alpha,
            beta,
            check_interval,
        )),
        LevelDerivation::Params(params) => match Sorter::new(params, check_interval) {
            Some(sorter) => Box::new(sorter),
            None => Box::new(Baseline::new(
                n_cap,
                array_size,
                alpha,
                beta,
                check_interval,
            )),
        },
    }
}

/// `Sorter_k` for k >= 2 with non-degenerate, feasible parameters.
pub struct Sorter {
    params: LevelParams,
    array: ArrayState,
    /// Subinterval -> assigned box (0-based), usize::MAX while unassigned.
    pointer: Vec<usize>,
    /// Elements received per box.
    counts: Vec<u64>,
    /// Subinterval assigned to each box, fixed at first assignment.
    box_sub: Vec<Option<usize>>,
    /// Value range placed into each box, for the purity audit.
    box_range: Vec<Option<(f64, f64)>>,
    box_sorter: Box<dyn Strategy>,
    in_box: Vec<Option<Box<dyn Strategy>>>,
    s_count: u64,
    placed: u64,
    check_interval: bool,
}

const UNASSIGNED: usize = usize::MAX;

impl Sorter {
    /// Returns None when the floored parameters cannot guarantee the box
    /// sorter's budget or the per-level cost inequalities; the caller then
    /// falls back to the baseline. The budget check is conservative: the
    /// number of forwarded values is always at most floor(n/n') + b.
    fn new(params: LevelParams, check_interval: bool) -> Option<Self> {
        let k = params.k as i32;
        let box_cap = (params.boxes as f64 / (1.0 + pow2(k - 3) * params.delta)).floor() as u64;
        if box_cap < 1 {
            return None;
        }
        let worst_forwards = params.n_cap / params.n_prime + params.subintervals;
        if worst_forwards > box_cap {
            return None;
        }
        let l_bound = (1.0 + pow2(k) * params.delta) / (pow2(k - 5) * params.delta)
            * params.subintervals as f64;
        if params.boxes as f64 > l_bound {
            return None;
        }
        let s_bound = (pow2(7 - 2 * k) / (params.delta * params.delta)
            + pow2(7 - k) / params.delta)
            * (params.n_cap as f64)
                .powf(omega(params.k as i64 - 4) as f64 / omega(params.k as i64) as f64);
        if box_cap as f64 > s_bound {
            return None;
        }

        let box_sorter = build_sorter(
            params.k as i64 - 4,
            params.delta,
            box_cap,
            params.boxes,
            params.alpha,
            params.beta,
            false,
        );
        let boxes = params.boxes as usize;
        Some(Self {
            params,
            array: ArrayState::new(params.array_size as usize),
            pointer: vec![UNASSIGNED; params.subintervals as usize],
            counts: vec![0; boxes],
            box_sub: vec![None; boxes],
            box_range: vec![None; boxes],
            box_sorter,
            in_box: (0..boxes).map(|_| None).collect(),
            s_count: 0,
            placed: 0,
            check_interval,
        })
    }

    pub fn params(&self) -> &LevelParams {
        &self.params
    }

    /// Subinterval index (0-based) of x, clamped so boundary rounding never
    /// produces an out-of-range index.
    fn subinterval_of(&self, x: f64) -> usize {
        let b = self.params.subintervals as f64;
        let raw = ((x - self.params.alpha) / self.params.beta * b).floor();
        (raw.max(0.0) as usize).min(self.params.subintervals as usize - 1)
    }
}

impl Strategy for Sorter {
    fn place(&mut self, x: f64) -> Result<usize, EngineError> {
        let p = self.params;
        if self.check_interval && !(x >= p.alpha && x < p.alpha + p.beta) {
            return Err(EngineError::ValueOutOfInterval {
                value: x,
                alpha: p.alpha,
                alpha_plus_beta: p.alpha + p.beta,
            });
        }
        if self.placed >= p.n_cap {
            return Err(EngineError::CapacityExceeded(format!(
                "sorter (k={}) received more than n_cap={} values",
                p.k, p.n_cap
            )));
        }

        let sub = self.subinterval_of(x);
        let assigned = self.pointer[sub];
        let j = if assigned != UNASSIGNED && self.counts[assigned] < p.n_prime {
            assigned
        } else {
            let j = self.box_sorter.place(x).map_err(|e| {
                EngineError::CapacityExceeded(format!("box sorter (k={}): {e}", p.k))
            })?;
            self.s_count += 1;
            self.pointer[sub] = j;
            debug_assert_eq!(self.counts[j], 0, "box sorter must hand out fresh boxes");
            self.box_sub[j] = Some(sub);
            j
        };

        let width = p.width;
        if self.in_box[j].is_none() {
            let sub_width = p.beta / p.subintervals as f64;
            let child_alpha = p.alpha + self.box_sub[j].unwrap() as f64 * sub_width;
            self.in_box[j] = Some(build_sorter(
                p.k as i64 - 1,
                p.delta,
                p.n_prime,
                width,
                child_alpha,
                sub_width,
                false,
            ));
        }
        let child = self.in_box[j].as_mut().unwrap();
        let cell = child.place(x).map_err(|e| {
            EngineError::CapacityExceeded(format!("in-box sorter (k={}, box {j}): {e}", p.k))
        })?;
        let global = j * width as usize + cell;
        self.array.set(global, x)?;
        self.counts[j] += 1;
        self.placed += 1;
        let range = self.box_range[j].get_or_insert((x, x));
        range.0 = range.0.min(x);
        range.1 = range.1.max(x);
        Ok(global)
    }

    fn array(&self) -> &ArrayState {
        &self.array
    }

    fn collect_snapshots(&self, depth: usize, out: &mut Vec<LevelSnapshot>) {
        let p = &self.params;
        let box_stats = (0..self.counts.len())
            .filter(|&j| self.counts[j] > 0)
            .map(|j| {
                let (lo, hi) = self.box_range[j].unwrap();
                BoxStat {
                    box_index: j,
                    subinterval: self.box_sub[j].unwrap(),
                    count: self.counts[j],
                    min_value: lo,
                    max_value: hi,
                }
            })
            .collect();
        out.push(LevelSnapshot {
            depth,
            k: p.k,
            delta: p.delta,
            n_cap: p.n_cap,
            array_size: p.array_size,
            n_prime: p.n_prime,
            width: p.width,
            boxes: p.boxes,
            subintervals: p.subintervals,
            alpha: p.alpha,
            beta: p.beta,
            s_count: self.s_count,
            max_box_count: self.counts.iter().copied().max().unwrap_or(0),
            box_stats,
        });
        self.box_sorter.collect_snapshots(depth + 1, out);
        for child in self.in_box.iter().flatten() {
            child.collect_snapshots(depth + 1, out);
        }
    }

    fn max_depth(&self) -> usize {
        let mut d = self.box_sorter.max_depth();
        for child in self.in_box.iter().flatten() {
            d = d.max(child.max_depth());
        }
        1 + d
    }
}

/// Bottom-of-recursion strategy: lazy block first-fit with global fallback.
///
/// The array is split into ceil(sqrt(n_cap)) blocks and the value interval
/// into as many subintervals. Each subinterval lazily claims the next
/// unallocated block; when its block fills it claims another; once no block
/// is free, values go to the leftmost empty cell of the whole array.
pub struct Baseline {
    array: ArrayState,
    n_cap: u64,
    placed: u64,
    alpha: f64,
    beta: f64,
    m: usize,
    block_size: usize,
    num_blocks: usize,
    open_block: Vec<Option<usize>>,
    next_unallocated: usize,
    block_cursor: Vec<usize>,
    global_cursor: usize,
    check_interval: bool,
}

impl Baseline {
    pub fn new(n_cap: u64, array_size: u64, alpha: f64, beta: f64, check_interval: bool) -> Self {
        assert!(array_size >= n_cap && n_cap >= 1);
        let m = {
            let r = n_cap.isqrt();
            if r * r < n_cap {
                r + 1
            } else {
                r
            }
        } as usize;
        let len = array_size as usize;
        let block_size = len.div_ceil(m);
        let num_blocks = len.div_ceil(block_size);
        Self {
            array: ArrayState::new(len),
            n_cap,
            placed: 0,
            alpha,
            beta,
            m,
            block_size,
            num_blocks,
            open_block: vec![None; m],
            next_unallocated: 0,
            block_cursor: vec![0; num_blocks],
            global_cursor: 0,
            check_interval,
        }
    }

    fn block_bounds(&self, block: usize) -> (usize, usize) {
        let start = block * self.block_size;
        (start, ((block + 1) * self.block_size).min(self.array.len()))
    }

    /// Leftmost empty cell in `block`, advancing its cursor past occupied
    /// cells (cells never empty again, so the cursor is monotone).
    fn leftmost_empty_in_block(&mut self, block: usize) -> Option<usize> {
        let (start, end) = self.block_bounds(block);
        let mut pos = start + self.block_cursor[block];
        while pos < end && self.array.get(pos).is_some() {
            pos += 1;
        }
        self.block_cursor[block] = pos - start;
        (pos < end).then_some(pos)
    }
}

impl Strategy for Baseline {
    fn place(&mut self, x: f64) -> Result<usize, EngineError> {
        if self.check_interval && !(x >= self.alpha && x < self.alpha + self.beta) {
            return Err(EngineError::ValueOutOfInterval {
                value: x,
                alpha: self.alpha,
                alpha_plus_beta: self.alpha + self.beta,
            });
        }
        if self.placed >= self.n_cap || self.array.occupied() >= self.array.len() {
            return Err(EngineError::CapacityExceeded(format!(
                "baseline received more than n_cap={} values",
                self.n_cap
            )));
        }
        let sub = {
            let raw = ((x - self.alpha) / self.beta * self.m as f64).floor();
            (raw.max(0.0) as usize).min(self.m - 1)
        };

        let mut target = None;
        if let Some(block) = self.open_block[sub] {
            target = self.leftmost_empty_in_block(block);
        }
        if target.is_none() && self.next_unallocated < self.num_blocks {
            let block = self.next_unallocated;
            self.next_unallocated += 1;
            self.open_block[sub] = Some(block);
            target = self.leftmost_empty_in_block(block);
        }
        let cell = match target {
            Some(c) => c,
            None => {
                // Global fallback: leftmost empty cell anywhere.
                while self.array.get(self.global_cursor).is_some() {
                    self.global_cursor += 1;
                }
                self.global_cursor
            }
        };
        self.array.set(cell, x)?;
        self.placed += 1;
        Ok(cell)
    }

    fn array(&self) -> &ArrayState {
        &self.array
    }
}

/// Always the leftmost empty cell.
pub struct NaiveSequential {
    array: ArrayState,
    cursor: usize,
}

impl NaiveSequential {
    pub fn new(array_size: u64) -> Self {
        Self {
            array: ArrayState::new(array_size as usize),
            cursor: 0,
        }
    }
}

impl Strategy for NaiveSequential {
    fn place(&mut self, x: f64) -> Result<usize, EngineError> {
        while self.cursor < self.array.len() && self.array.get(self.cursor).is_some() {
            self.cursor += 1;
        }
        if self.cursor >= self.array.len() {
            return Err(EngineError::CapacityExceeded("array full".into()));
        }
        let cell = self.cursor;
        self.array.set(cell, x)?;
        Ok(cell)
    }

    fn array(&self) -> &ArrayState {
        &self.array
    }
}

/// Uniform over the currently empty cells, from the crate's seeded
/// generator (see [`crate::rng`]).
pub struct RandomCell {
    array: ArrayState,
    empty: Vec<usize>,
    rng: XorShift64Star,
}

impl RandomCell {
    pub fn new(array_size: u64, seed: u64) -> Self {
        Self {
            array: ArrayState::new(array_size as usize),
            empty: (0..array_size as usize).collect(),
            rng: XorShift64Star::new(seed),
        }
    }
}

impl Strategy for RandomCell {
    fn place(&mut self, x: f64) -> Result<usize, EngineError> {
        if self.empty.is_empty() {
            return Err(EngineError::CapacityExceeded("array full".into()));
        }
        let pick = self.rng.next_below(self.empty.len());
        let cell = self.empty.swap_remove(pick);
        self.array.set(cell, x)?;
        Ok(cell)
    }

    fn array(&self) -> &ArrayState {
        &self.array
    }
}

/// One placement decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub step: usize,
    pub value: f64,
    pub cell: usize,
}

#[derive(Debug, Error, PartialEq)]
#[error("placement failed at step {step}: {source}")]
pub struct RunError {
    pub step: usize,
    pub source: EngineError,
}

/// Feeds an oblivious stream one value at a time.
pub fn run(strategy: &mut dyn Strategy, stream: &[f64]) -> Result<Vec<Placement>, RunError> {
    let mut trace = Vec::with_capacity(stream.len());
    for (step, &value) in stream.iter().enumerate() {
        let cell = strategy
            .place(value)
            .map_err(|source| RunError { step, source })?;
        trace.push(Placement { step, value, cell });
    }
    Ok(trace)
}

/// A generator that inspects the strategy's array before emitting the next
/// value. `last` is the previous step's placement (derivable from the array
/// by diffing; passed explicitly so generators can update incrementally).
pub trait AdaptiveSource {
    fn next_value(&mut self, array: &ArrayState, last: Option<&Placement>) -> f64;
}

/// Drives an adaptive generator against a strategy for `n` steps.
pub fn run_adaptive(
    strategy: &mut dyn Strategy,
    source: &mut dyn AdaptiveSource,
    n: usize,
) -> Result<(Vec<f64>, Vec<Placement>), RunError> {
    let mut trace: Vec<Placement> = Vec::with_capacity(n);
    let mut stream = Vec::with_capacity(n);
    for step in 0..n {
        let value = source.next_value(strategy.array(), trace.last());
        stream.push(value);
        let cell = strategy
            .place(value)
            .map_err(|source| RunError { step, source })?;
        trace.push(Placement { step, value, cell });
    }
    Ok((stream, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    // proptest's prelude also exports a `Strategy` trait; ours wins here.
    use super::Strategy;

    fn sorter_golden() -> Sorter {
        match derive_level(2, 0.1, 10_000, 18_000, 0.0, 1.0) {
            LevelDerivation::Params(p) => Sorter::new(p, true).expect("feasible"),
            LevelDerivation::Degenerate => panic!("golden params degenerate"),
        }
    }

    #[test]
    fn baseline_block_layout() {
        // N=9, n_cap=9 => m=3, block_size=3.
        let mut b = Baseline::new(9, 9, 0.0, 1.0, true);
        assert_eq!(b.place(0.1).unwrap(), 0);
        assert_eq!(b.place(0.2).unwrap(), 1);
        assert_eq!(b.place(0.95).unwrap(), 3);
    }

    #[test]
    fn baseline_single_element() {
        let mut b = Baseline::new(1, 1, 0.0, 1.0, true);
        assert_eq!(b.place(0.5).unwrap(), 0);
    }

    #[test]
    fn baseline_two_cells() {
        let mut b = Baseline::new(2, 2, 0.0, 1.0, true);
        assert_eq!(b.place(0.9).unwrap(), 0);
        assert_eq!(b.place(0.1).unwrap(), 1);
    }

    #[test]
    fn baseline_always_succeeds_up_to_capacity() {
        let mut b = Baseline::new(50, 60, 0.0, 1.0, true);
        let mut rng = XorShift64Star::new(3);
        for _ in 0..50 {
            b.place(rng.next_f64()).unwrap();
        }
        assert_eq!(b.array().occupied(), 50);
        assert!(matches!(
            b.place(0.5),
            Err(EngineError::CapacityExceeded(_))
        ));
    }

    #[test]
    fn baseline_rejects_out_of_interval() {
        let mut b = Baseline::new(4, 4, 0.0, 1.0, true);
        assert!(matches!(
            b.place(1.5),
            Err(EngineError::ValueOutOfInterval { .. })
        ));
    }

    #[test]
    fn sorter_low_k_is_baseline() {
        let mut s = new_strategy(StrategyKind::Sorter, 1, 0.1, 100, 100, 0.0, 1.0).unwrap();
        let mut b = new_strategy(StrategyKind::Baseline, 0, 0.1, 100, 100, 0.0, 1.0).unwrap();
        let mut rng = XorShift64Star::new(11);
        for _ in 0..100 {
            let x = rng.next_f64();
            assert_eq!(s.place(x).unwrap(), b.place(x).unwrap());
        }
    }

    #[test]
    fn sorter_degenerate_falls_back_to_baseline() {
        let mut s = new_strategy(StrategyKind::Sorter, 2, 0.1, 4, 8, 0.0, 1.0).unwrap();
        assert_eq!(s.max_depth(), 0);
        for x in [0.3, 0.9, 0.1, 0.5] {
            s.place(x).unwrap();
        }
        assert_eq!(s.array().occupied(), 4);
    }

    #[test]
    fn sorter_golden_structure() {
        let s = sorter_golden();
        assert_eq!(s.params.n_prime, 14);
        assert_eq!(s.params.boxes, 947);
        assert_eq!(s.params.subintervals, 100);
        assert!(s.pointer.iter().all(|&p| p == UNASSIGNED));
        // Box sorter is Sorter_{-2} = baseline over 947 virtual cells with
        // capacity floor(947 / 1.05) = 901.
        assert_eq!(s.box_sorter.array().len(), 947);
        assert_eq!((947.0f64 / 1.05).floor() as u64, 901);
    }

    #[test]
    fn sorter_reuses_open_box_until_full() {
        let mut s = sorter_golden();
        let first = s.place(0.0).unwrap();
        assert_eq!(s.s_count, 1);
        let j = first / s.params.width as usize;
        assert_eq!(s.counts[j], 1);

        // Same subinterval while the box is below n' stays in the same box.
        let second = s.place(1e-9).unwrap();
        assert_eq!(second / s.params.width as usize, j);
        assert_eq!(s.s_count, 1);

        // Fill the box to exactly n'; the next value from the subinterval
        // must trigger a fresh box-sorter call and pointer reassignment.
        for _ in 2..s.params.n_prime {
            let cell = s.place(1e-9).unwrap();
            assert_eq!(cell / s.params.width as usize, j);
        }
        assert_eq!(s.counts[j], s.params.n_prime);
        let overflow = s.place(2e-9).unwrap();
        let j2 = overflow / s.params.width as usize;
        assert_ne!(j2, j);
        assert_eq!(s.s_count, 2);
        assert_eq!(s.pointer[0], j2);
    }

    #[test]
    fn sorter_rejects_out_of_interval() {
        let mut s = sorter_golden();
        assert!(matches!(
            s.place(-0.1),
            Err(EngineError::ValueOutOfInterval { .. })
        ));
        assert!(matches!(
            s.place(1.0),
            Err(EngineError::ValueOutOfInterval { .. })
        ));
    }

    #[test]
    fn sorter_rejects_beyond_capacity() {
        let mut s = new_strategy(StrategyKind::Sorter, 2, 0.1, 4, 8, 0.0, 1.0).unwrap();
        for x in [0.1, 0.2, 0.3, 0.4] {
            s.place(x).unwrap();
        }
        assert!(matches!(
            s.place(0.5),
            Err(EngineError::CapacityExceeded(_))
        ));
    }

    #[test]
    fn run_empty_stream() {
        let mut s = new_strategy(StrategyKind::NaiveSequential, 0, 0.1, 5, 5, 0.0, 1.0).unwrap();
        let trace = run(s.as_mut(), &[]).unwrap();
        assert!(trace.is_empty());
        assert_eq!(s.array().occupied(), 0);
    }

    #[test]
    fn run_reports_failing_step() {
        let mut s = new_strategy(StrategyKind::Baseline, 0, 0.1, 2, 2, 0.0, 1.0).unwrap();
        let err = run(s.as_mut(), &[0.1, 0.2, 0.3]).unwrap_err();
        assert_eq!(err.step, 2);
    }

    #[test]
    fn random_cell_is_seed_deterministic() {
        let mut a = RandomCell::new(100, 77);
        let mut c = RandomCell::new(100, 77);
        for i in 0..60 {
            let x = i as f64 / 60.0;
            assert_eq!(a.place(x).unwrap(), c.place(x).unwrap());
        }
    }

    #[test]
    fn snapshot_records_box_bookkeeping() {
        let mut s = sorter_golden();
        for i in 0..200u32 {
            s.place(i as f64 / 200.0).unwrap();
        }
        let mut snaps = Vec::new();
        s.collect_snapshots(0, &mut snaps);
        let top = &snaps[0];
        assert_eq!(top.k, 2);
        assert!(top.s_count >= 1);
        assert!(top.max_box_count <= top.n_prime);
        for bs in &top.box_stats {
            let lo = top.alpha + bs.subinterval as f64 * top.beta / top.subintervals as f64;
            let hi = lo + top.beta / top.subintervals as f64;
            assert!(bs.min_value >= lo - 1e-12 && bs.max_value < hi + 1e-12);
        }
    }

    proptest! {
        /// Distinct in-range cells for any strategy and any stream.
        #[test]
        fn single_occupancy(seed in 0u64..1000, kind in 0usize..4, n in 1u64..400) {
            let eps = 0.5;
            let array_size = ((1.0 + eps) * n as f64).floor() as u64;
            let top = crate::omega_params::derive_top(n.max(2), eps).unwrap();
            let kind = match kind {
                0 => StrategyKind::Sorter,
                1 => StrategyKind::Baseline,
                2 => StrategyKind::NaiveSequential,
                _ => StrategyKind::RandomCell { seed },
            };
            let mut s = new_strategy(
                kind, top.k as i64, top.delta, n, array_size, 0.0, 1.0,
            ).unwrap();
            let mut rng = XorShift64Star::new(seed);
            let stream: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let trace = run(s.as_mut(), &stream).unwrap();
            let mut seen = std::collections::HashSet::new();
            for p in &trace {
                prop_assert!(p.cell < array_size as usize);
                prop_assert!(seen.insert(p.cell));
            }
            prop_assert_eq!(s.array().occupied(), n as usize);
        }
    }
}
