//! Deep-pipelined conjugate gradients, p(l)-CG.
//!
//! The method runs an auxiliary Krylov basis `z_j = P_l(A) v_{j−l}` `l`
//! steps ahead of the orthonormal Lanczos basis `v_j`. The dot products that
//! orthogonalize `z_{i+1}` are issued in iteration `i` and only needed in
//! iteration `i + l`, so in a distributed setting each global reduction can
//! overlap `l` SPMVs. Symmetry makes the transformation `Z = V G` banded
//! (bandwidth `2l+1`) and the Hessenberg matrix tridiagonal, so only
//! `3l + 2` vectors are ever live; the iterate follows from an LU
//! factorization of the tridiagonal matrix (D-Lanczos) and `|ζ_k|` equals
//! the residual norm without extra reductions.
//!
//! A negative square-root argument (loss of orthogonality) triggers an
//! explicit restart from the newest iterate.

mod state;
mod transform;
mod window;

pub use state::{PipelineState, StepOutcome};
pub use transform::BandedTransform;
pub use window::SlidingWindow;

use alloc::vec::Vec;

use crate::error::Error;
use crate::observe::Observer;
use crate::precond::Preconditioner;
use crate::shifts::ShiftSet;
use crate::solver::{Breakdown, BreakdownKind, ConvergenceTrace, Event, Recorder, SolveConfig, Status};
use crate::sparse::SparseOperator;

/// Solves `A x = b` with p(l)-CG, `l = shifts.len()`.
///
/// The iterate reported at outer iteration `i` is `x_{i−l}`; the loop ends
/// once `cfg.max_iter` solution updates were made (counted across restarts),
/// on convergence, or after `cfg.max_restarts` unsuccessful restarts.
pub fn solve_plcg(
    a: &SparseOperator,
    m: &Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    shifts: &ShiftSet,
    cfg: &SolveConfig,
    obs: &mut dyn Observer,
) -> Result<ConvergenceTrace, Error> {
    let mut state = PipelineState::new(a, m, b, x0, shifts, cfg, obs)?;
    let mut rec = Recorder::new(a, m, b, cfg);
    let mut breakdowns = Vec::new();

    rec.push(0, state.r0_norm(), state.x(), Event::None);
    if rec.below_tol(state.r0_norm()) {
        rec.mark_last(Event::Converged);
        return Ok(rec.finish(state.into_solution(), Status::Converged, 0, breakdowns));
    }

    loop {
        let outcome = state.step(obs);
        if state.has_new_solution() {
            rec.push(state.global_index(), state.residual_norm(), state.x(), Event::None);
        }
        let failure = match outcome {
            StepOutcome::Continue => None,
            StepOutcome::Converged { .. } => {
                rec.mark_last(Event::Converged);
                let restarts = state.restarts();
                return Ok(rec.finish(state.into_solution(), Status::Converged, restarts, breakdowns));
            }
            StepOutcome::HappyBreakdown { root_argument, .. } => {
                let explicit = state.finish_happy();
                rec.push(state.global_index(), 0.0, state.x(), Event::None);
                if rec.below_tol(explicit) {
                    rec.mark_last(Event::Converged);
                    let restarts = state.restarts();
                    return Ok(rec.finish(state.into_solution(), Status::Converged, restarts, breakdowns));
                }
                Some(BreakdownKind::FalseHappy { argument: root_argument })
            }
            StepOutcome::HardBreakdown { root_argument, .. } => {
                Some(BreakdownKind::SquareRoot { argument: root_argument })
            }
            StepOutcome::Unstable { kind, .. } => Some(kind),
        };

        if let Some(kind) = failure {
            breakdowns.push(Breakdown { iter: state.global_index(), kind });
            if rec.records.last().is_some_and(|r| r.event == Event::None) {
                rec.mark_last(Event::Breakdown);
            }
            if state.restarts() == cfg.max_restarts {
                let restarts = state.restarts();
                return Ok(rec.finish(state.into_solution(), Status::Breakdown, restarts, breakdowns));
            }
            state.handle_breakdown(obs)?;
            rec.push(state.global_index(), state.r0_norm(), state.x(), Event::Restart);
            if rec.below_tol(state.r0_norm()) {
                rec.mark_last(Event::Converged);
                let restarts = state.restarts();
                return Ok(rec.finish(state.into_solution(), Status::Converged, restarts, breakdowns));
            }
        }

        if state.global_index() >= cfg.max_iter {
            let restarts = state.restarts();
            return Ok(rec.finish(state.into_solution(), Status::MaxIterations, restarts, breakdowns));
        }
    }
}
