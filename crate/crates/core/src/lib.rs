//! Analytic solver and simulation cross-validator for the discrete-time
//! `GI^X/Geo^Y/1` queue under the early arrival system.
//!
//! Batches of random size arrive by a renewal process on a slotted time
//! axis; a single server removes up to a freshly drawn capacity per
//! geometric service completion. The steady-state queue-length
//! distribution at pre-arrival and arbitrary epochs is a mixture of
//! geometric terms built from the roots of a characteristic equation
//! inside the unit circle.
//!
//! The crate is organized along the solution pipeline:
//!
//! - [`pgf`]: finite pmfs and rational probability generating functions;
//! - [`model`]: model assembly, derived rates, stability validation;
//! - [`chareq`]: the characteristic equation, denominator clearing, and
//!   the interior root search;
//! - [`steady`]: mixture constants, closed-form distributions, moments,
//!   tail behavior, and the reduced special-case forms;
//! - [`ct`]: the continuous-time `GI^X/M^Y/1` limit;
//! - [`sim`]: an independent slot-by-slot simulator and the
//!   analytic-versus-empirical comparison report.
//!
//! All types are immutable once built and all operations are pure, so
//! everything here is safe to share across threads.

mod error;
mod poly;

pub mod chareq;
pub mod ct;
pub mod model;
pub mod pgf;
pub mod sim;
pub mod steady;

pub use error::{Error, Result};

pub use chareq::{build_cleared_poly, char_fn, find_interior_roots, CharSystem};
pub use ct::{ct_char_roots, ct_distributions, ct_solution, CtInterArrival, CtModel};
pub use model::{CapacityDist, InterArrivalDist, QueueModel};
pub use pgf::{FinitePmf, RationalPgf};
pub use sim::{
    compare, compare_with_thresholds, simulate, CompareReport, CompareThresholds, EmpiricalDist,
    SimConfig,
};
pub use steady::{
    arbitrary_dist, mean_queue_length, pre_arrival_dist, solve, solve_constants, solve_special,
    tail_decay_rate, EpochDist, EpochKind, SteadySolution, TailDecay,
};

#[doc(hidden)]
pub fn test_probe_all_roots(c: &[f64]) -> Option<Vec<num_complex::Complex64>> {
    poly::all_roots(c)
}
