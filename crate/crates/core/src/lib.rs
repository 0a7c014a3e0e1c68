//! Deep-pipelined conjugate gradients.
//!
//! `plcg-core` implements the l-length pipelined CG method together with the
//! solvers it is measured against (classic CG, single-stage pipelined CG and a
//! full-storage pipelined GMRES), the finite-precision diagnostics used to
//! study attainable accuracy, and an analytical/event-driven model of how
//! global reductions overlap with sparse matrix-vector products.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use plcg_core::{
//!     build_poisson_2d, chebyshev_shifts, gershgorin_interval, solve_plcg, Preconditioner,
//!     SolveConfig, Status,
//! };
//!
//! let a = build_poisson_2d(20, 20).unwrap();
//! let b = vec![1.0; a.n()];
//! let shifts = chebyshev_shifts(gershgorin_interval(&a), 2).unwrap();
//! let cfg = SolveConfig { tol: 1e-8, max_iter: 200, ..SolveConfig::default() };
//! let trace = solve_plcg(&a, &Preconditioner::Identity, &b, None, &shifts, &cfg, &mut ()).unwrap();
//! assert_eq!(trace.status, Status::Converged);
//! ```
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;

pub mod classic;
pub mod dense;
pub mod diagnostics;
pub mod observe;
pub mod perf;
pub mod plcg;
pub mod plgmres;
pub mod precond;
pub mod shifts;
pub mod solver;
pub mod sparse;
pub mod vecops;

pub use classic::{solve_cg, solve_pipecg};
pub use error::Error;
pub use observe::{Observer, Probe};
pub use plcg::{solve_plcg, PipelineState, StepOutcome};
pub use plgmres::{solve_plgmres, LeastSquaresMode, PlGmresRun};
pub use precond::Preconditioner;
pub use shifts::{chebyshev_shifts, monomial_shifts, user_shifts, ShiftKind, ShiftSet};
pub use solver::{Breakdown, BreakdownKind, ConvergenceTrace, Event, SolveConfig, Status, TraceRecord};
pub use sparse::{build_poisson_2d, gershgorin_interval, SparseOperator, SpectralInterval};
