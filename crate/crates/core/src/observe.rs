//! Hooks through which solvers expose intermediate quantities.
//!
//! Diagnostics are written as [`Observer`]s so gap traces can be evaluated
//! while a solve runs instead of storing every vector.

/// Quantities published by the solvers.
///
/// For p(l)-CG every index is local to the current restart cycle; a
/// [`Probe::Restart`] marks the start of a new cycle.
#[derive(Debug, Clone, Copy)]
pub enum Probe<'a> {
    /// Orthonormal basis vector `v_k`.
    Basis { k: usize, v: &'a [f64] },
    /// Auxiliary vector `z_k`, after its recurrence is complete.
    Auxiliary { k: usize, z: &'a [f64] },
    /// Finalized column `k` of the basis transformation; `entries[t]` is
    /// `g_{first_row + t, k}`.
    Column { k: usize, first_row: usize, entries: &'a [f64] },
    /// `γ_k = t_{k,k}` and `δ_k = t_{k+1,k}`.
    Tridiagonal { k: usize, gamma: f64, delta: f64 },
    /// Iterate `x_k` with implicit residual `r_k = ζ_k v_k`. `global` counts
    /// solution updates across restarts.
    Solution { k: usize, global: usize, x: &'a [f64], zeta: f64, v: &'a [f64] },
    /// A new cycle starts from the iterate with global index `global`.
    Restart { global: usize },
    /// Classic CG iterate with its recursive residual.
    Cg { k: usize, x: &'a [f64], r: &'a [f64] },
    /// Pipelined CG state after the direction update of iteration `k`.
    PipeCg {
        k: usize,
        x: &'a [f64],
        r: &'a [f64],
        w: &'a [f64],
        p: &'a [f64],
        s: &'a [f64],
        z: &'a [f64],
        beta: f64,
    },
}

pub trait Observer {
    fn observe(&mut self, probe: Probe<'_>);
}

/// Ignores everything.
impl Observer for () {
    fn observe(&mut self, _: Probe<'_>) {}
}

impl<T: Observer + ?Sized> Observer for &mut T {
    fn observe(&mut self, probe: Probe<'_>) {
        (**self).observe(probe);
    }
}
