//! Online sorting: place a stream of reals into an array immediately and
//! irrevocably, minimizing the sum of absolute differences of adjacent
//! occupied cells.
//!
//! The crate provides:
//!
//! - [`engine`]: online placement strategies behind one [`engine::Strategy`]
//!   trait: a recursive box-decomposition sorter, a `sqrt(n)`-style block
//!   baseline, and naive comparators.
//! - [`omega_params`]: the integer sequence and derived quantities that
//!   drive the recursive sorter's level schedule.
//! - [`metrics`]: the cost functional, the offline optimum, a brute-force
//!   oracle for tiny instances, and the runtime invariant audit.
//! - [`workloads`]: deterministic seeded input generators, oblivious and
//!   adaptive.
//! - [`bench`]: the experiment-grid runner behind the `sortbench` CLI.

pub mod bench;
pub mod engine;
pub mod metrics;
pub mod omega_params;
pub mod rng;
pub mod workloads;
