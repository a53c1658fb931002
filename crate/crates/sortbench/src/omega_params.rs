//! Level-schedule parameters for the recursive sorter.
//!
//! The sequence `omega_i` (2 for i <= 1, then `omega_i = omega_{i-1} +
//! omega_{i-4}`) controls the exponents `n^{omega_j/omega_k}` used when a
//! level of the recursion is split into boxes and subintervals. This module
//! computes the sequence, the growth root of its recurrence, the top-level
//! `(k, delta)` wrapper derived from `(n, epsilon)`, and the per-level
//! quantities `(n', w, l, b)`.

use std::sync::OnceLock;
use thiserror::Error;

/// Largest index the shared omega table covers; `omega_{274}` overflows
/// u128, so the table stops shortly before that.
const OMEGA_TABLE_MAX: usize = 270;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("epsilon must lie in (0, 3], got {0}")]
    InvalidEpsilon(f64),
    #[error("n must be at least 2, got {0}")]
    InvalidN(u64),
}

/// Memoized values of the omega recurrence for indices `0..=max`.
/// Negative indices are always 2 and are not stored.
#[derive(Debug, Clone)]
pub struct OmegaSequence {
    memo: Vec<u128>,
}

impl OmegaSequence {
    pub fn with_capacity(max_index: usize) -> Self {
        assert!(
            max_index <= OMEGA_TABLE_MAX,
            "omega overflows u128 near index 274"
        );
        let mut memo = vec![2u128; max_index + 1];
        for i in 2..=max_index {
            let prev = memo[i - 1];
            let back4 = if i >= 4 { memo[i - 4] } else { 2 };
            memo[i] = prev.checked_add(back4).expect("omega overflow");
        }
        Self { memo }
    }

    pub fn value(&self, i: i64) -> u128 {
        if i <= 1 {
            2
        } else {
            self.memo[i as usize]
        }
    }
}

fn shared_table() -> &'static OmegaSequence {
    static TABLE: OnceLock<OmegaSequence> = OnceLock::new();
    TABLE.get_or_init(|| OmegaSequence::with_capacity(OMEGA_TABLE_MAX))
}

/// `omega_i`: 2 for all i <= 1, otherwise `omega_{i-1} + omega_{i-4}`.
///
/// Backed by a table populated once, so concurrent callers only read.
pub fn omega(i: i64) -> u128 {
    assert!(
        i <= OMEGA_TABLE_MAX as i64,
        "omega({i}) exceeds the u128-safe range"
    );
    shared_table().value(i)
}

/// The unique real root of x^4 = x^3 + 1 with |x| >= 1 (about 1.380278),
/// found by bisection on [1, 2].
pub fn growth_root() -> f64 {
    let f = |x: f64| x * x * x * x - x * x * x - 1.0;
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Top-level wrapper parameters derived from `(n, epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopLevelConfig {
    pub n: u64,
    pub epsilon: f64,
    /// Recursion depth parameter.
    pub k: u32,
    /// Per-level slack unit; `2^{k+1} * delta = epsilon`.
    pub delta: f64,
    /// Total array cells, `floor((1 + epsilon) * n)`.
    pub array_size: u64,
}

/// Derives `(k, delta, N)` from `(n, epsilon)`.
///
/// `k = max(0, floor(log_1.38(log2 n)))`; if the resulting
/// `delta = epsilon / 2^{k+1}` is not below 1/2 (tiny n, large epsilon),
/// k is raised by the minimal amount that restores `delta < 1/2`.
pub fn derive_top(n: u64, epsilon: f64) -> Result<TopLevelConfig, ParamError> {
    if !(epsilon > 0.0 && epsilon <= 3.0) {
        return Err(ParamError::InvalidEpsilon(epsilon));
    }
    if n < 2 {
        return Err(ParamError::InvalidN(n));
    }
    let inner = (n as f64).log2();
    let raw = inner.ln() / 1.38f64.ln();
    let mut k = if raw.is_finite() && raw > 0.0 {
        raw.floor() as u32
    } else {
        0
    };
    // delta = epsilon / 2^{k+1} is exact: scaling by a power of two.
    let mut delta = epsilon / pow2(k as i32 + 1);
    while delta >= 0.5 {
        k += 1;
        delta = epsilon / pow2(k as i32 + 1);
    }
    let array_size = ((1.0 + epsilon) * n as f64).floor() as u64;
    Ok(TopLevelConfig {
        n,
        epsilon,
        k,
        delta,
        array_size,
    })
}

/// All derived quantities for one recursion level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelParams {
    pub k: u32,
    pub delta: f64,
    /// Maximum number of elements this instance accepts.
    pub n_cap: u64,
    /// Array cells available to this instance.
    pub array_size: u64,
    /// Per-box element capacity n'.
    pub n_prime: u64,
    /// Box width w (cells per box).
    pub width: u64,
    /// Number of boxes l that fit into the array.
    pub boxes: u64,
    /// Number of value subintervals b.
    pub subintervals: u64,
    /// Interval left endpoint.
    pub alpha: f64,
    /// Interval length.
    pub beta: f64,
}

/// Outcome of [`derive_level`]: either usable parameters or a degenerate
/// combination the caller must handle by falling back to the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelDerivation {
    Params(LevelParams),
    Degenerate,
}

pub fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Floor with near-integer inputs snapped first: powf and products can land
/// one ulp under an exact integer.
fn snap_floor(y: f64) -> u64 {
    let r = y.round();
    let y = if (y - r).abs() < 1e-9 * r.max(1.0) {
        r
    } else {
        y
    };
    y.floor() as u64
}

/// `floor(base^(num/den))` in double precision.
fn floor_pow(base: u64, num: u128, den: u128) -> u64 {
    let exp = num as f64 / den as f64;
    snap_floor((base as f64).powf(exp))
}

/// Per-level parameters for a `Sorter_k` instance with `k >= 2`:
///
/// - `n' = floor((2^{k-1} d / (1 + 2^k d)) * n^{omega_{k-1}/omega_k})`
/// - `w  = floor((1 + 2^k d) * n')`
/// - `l  = floor(N / w)`
/// - `b  = floor(n^{omega_{k-4}/omega_k})`
pub fn derive_level(
    k: u32,
    delta: f64,
    n_cap: u64,
    array_size: u64,
    alpha: f64,
    beta: f64,
) -> LevelDerivation {
    assert!(k >= 2, "derive_level requires k >= 2");
    assert!(delta > 0.0 && delta < 0.5, "delta must lie in (0, 1/2)");
    assert!(array_size >= n_cap && n_cap >= 1);
    assert!(beta > 0.0);

    let ki = k as i64;
    let w_k = omega(ki);
    let w_k1 = omega(ki - 1);
    let w_k4 = omega(ki - 4);

    let coef = pow2(k as i32 - 1) * delta / (1.0 + pow2(k as i32) * delta);
    let n_prime = snap_floor(coef * (n_cap as f64).powf(w_k1 as f64 / w_k as f64));
    let subintervals = floor_pow(n_cap, w_k4, w_k);

    if n_prime < 1 || subintervals < 1 {
        return LevelDerivation::Degenerate;
    }
    let width = snap_floor((1.0 + pow2(k as i32) * delta) * n_prime as f64);
    if width < 1 || width > array_size {
        return LevelDerivation::Degenerate;
    }
    let boxes = array_size / width;
    if boxes < 1 {
        return LevelDerivation::Degenerate;
    }
    LevelDerivation::Params(LevelParams {
        k,
        delta,
        n_cap,
        array_size,
        n_prime,
        width,
        boxes,
        subintervals,
        alpha,
        beta,
    })
}
