//! Configuration and convergence traces shared by all solvers.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{check_len, Error};
use crate::precond::Preconditioner;
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Relative tolerance on the recursively computed residual norm.
    pub tol: f64,
    /// Budget of solution updates.
    pub max_iter: usize,
    /// Also record `‖b − A x_k‖₂` (one extra SPMV per record).
    pub record_true_residual: bool,
    /// Restarts allowed after square-root or pivot breakdowns.
    pub max_restarts: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 1000, record_true_residual: false, max_restarts: 5 }
    }
}

impl SolveConfig {
    /// Runs exactly `max_iter` updates; the tolerance can never trigger.
    pub fn fixed(max_iter: usize) -> Self {
        Self { tol: f64::MIN_POSITIVE, max_iter, record_true_residual: true, max_restarts: 5 }
    }

    pub(crate) fn validate(&self) -> Result<(), Error> {
        if !(self.tol > 0.0) {
            return Err(Error::Argument("tolerance must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Argument("iteration budget must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    None,
    Breakdown,
    Restart,
    Converged,
}

impl Event {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Breakdown => "breakdown",
            Self::Restart => "restart",
            Self::Converged => "converged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Solution index `k` of `x_k`.
    pub iter: usize,
    /// Recursively available residual norm (`|ζ_k|` for p(l)-CG).
    pub recursive_norm: f64,
    pub true_norm: Option<f64>,
    pub event: Event,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreakdownKind {
    /// Non-positive argument under the square root of a transform diagonal.
    SquareRoot { argument: f64 },
    /// Zero pivot in the LU factorization of the tridiagonal matrix.
    Pivot,
    /// A recurrence produced a non-finite scalar.
    NonFinite,
    /// A near-zero root whose explicit residual was not small enough.
    FalseHappy { argument: f64 },
    /// Non-positive `(p, A p)` in CG or pipelined CG after the residual
    /// had already dropped to rounding level.
    Curvature { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    /// Solution index of the last iterate before the breakdown.
    pub iter: usize,
    pub kind: BreakdownKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    Breakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub x: Vec<f64>,
    pub status: Status,
    pub restarts: usize,
    pub breakdowns: Vec<Breakdown>,
    /// Reference norm the tolerance is relative to (`‖b‖`, or `‖b‖_{M⁻¹}`
    /// when preconditioned).
    pub b_norm: f64,
}

impl ConvergenceTrace {
    /// Index of the last solution update.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Shared bookkeeping: records, optional true residuals and the stopping test.
pub(crate) struct Recorder<'a> {
    a: &'a SparseOperator,
    b: &'a [f64],
    record_true: bool,
    pub(crate) tol: f64,
    pub(crate) b_norm: f64,
    pub(crate) records: Vec<TraceRecord>,
    work: Vec<f64>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(
        a: &'a SparseOperator,
        m: &Preconditioner,
        b: &'a [f64],
        cfg: &SolveConfig,
    ) -> Self {
        let mut work = vec![0.0; b.len()];
        m.apply_unchecked(b, &mut work);
        let b_norm = Float::sqrt(crate::vecops::dot(b, &work).max(0.0));
        Self { a, b, record_true: cfg.record_true_residual, tol: cfg.tol, b_norm, records: Vec::new(), work }
    }

    pub(crate) fn push(&mut self, iter: usize, recursive_norm: f64, x: &[f64], event: Event) {
        let true_norm = self.record_true.then(|| self.a.residual_norm(self.b, x, &mut self.work));
        self.records.push(TraceRecord { iter, recursive_norm, true_norm, event });
    }

    pub(crate) fn below_tol(&self, norm: f64) -> bool {
        norm <= self.tol * self.b_norm
    }

    pub(crate) fn mark_last(&mut self, event: Event) {
        if let Some(r) = self.records.last_mut() {
            r.event = event;
        }
    }

    pub(crate) fn finish(
        self,
        x: Vec<f64>,
        status: Status,
        restarts: usize,
        breakdowns: Vec<Breakdown>,
    ) -> ConvergenceTrace {
        ConvergenceTrace { records: self.records, x, status, restarts, breakdowns, b_norm: self.b_norm }
    }
}

/// Checks shapes and returns the starting vector.
pub(crate) fn prepare(
    a: &SparseOperator,
    m: &Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolveConfig,
) -> Result<Vec<f64>, Error> {
    cfg.validate()?;
    check_len(a.n(), b.len())?;
    m.check_dim(a.n())?;
    match x0 {
        Some(x0) => {
            check_len(a.n(), x0.len())?;
            Ok(x0.to_vec())
        }
        None => Ok(vec![0.0; a.n()]),
    }
}
