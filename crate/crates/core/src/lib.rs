//! Solver core for the star-star single-allocation hub-and-spoke network
//! design problem (equivalently, metric labeling under a star metric).
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`instance`]: problem data, the star metric and assignment evaluation,
//! * [`lp`]: the linear relaxation and a dense two-phase simplex,
//! * [`rounding`]: hub classing and the two-stage dependent rounding,
//! * [`transport`]: Hitchcock transportation tools (north-west corner rule,
//!   Monge checks, the line-metric surrogate cost and marginal couplings),
//! * [`exact`]: a depth-first enumeration oracle,
//! * [`ratio`]: the approximation-ratio curve and its minimizer.
//!
//! IO, file formats, the experiment harness and the CLI live in the `starhub`
//! crate.

#![no_std]

extern crate alloc;

pub mod exact;
pub mod instance;
pub mod lp;
pub mod ratio;
pub mod rng;
pub mod rounding;
pub mod transport;

pub use exact::{solve_exact, ExactError, ExactSolution};
pub use instance::{evaluate_cost, Assignment, Instance, InstanceError, StarMetric};
pub use lp::{build_lrp, solve_lrp, FractionalSolution, LinearProgram, SolverStatus};
pub use rounding::{run_pipeline, HubClassing, PipelineOutcome, RoundingOptions, RoundingTrace};

/// Default classing base: the minimizer of the approximation-ratio curve.
pub const DEFAULT_R: f64 = 1.91065;
