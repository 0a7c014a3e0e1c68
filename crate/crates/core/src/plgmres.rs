//! Full-storage pipelined GMRES, used as a reference for the transform and
//! Hessenberg recurrences on general (nonsymmetric) operators.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::dense::DenseMatrix;
use crate::error::Error;
use crate::precond::Preconditioner;
use crate::shifts::ShiftSet;
use crate::solver::{prepare, Breakdown, BreakdownKind, ConvergenceTrace, Event, SolveConfig, Status, TraceRecord};
use crate::sparse::SparseOperator;
use crate::vecops::{axpy, dot, norm, scale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeastSquaresMode {
    /// Minimize `‖H_{k+1,k} y − ‖r_0‖ e_1‖` (GMRES).
    #[default]
    Gmres,
    /// Solve `H_{k,k} y = ‖r_0‖ e_1` (full orthogonalization method).
    Fom,
}

/// Bases, transform and Hessenberg matrix of a finished run.
#[derive(Debug, Clone)]
pub struct PlGmresRun {
    /// `v_0..v_m` (one fewer after a breakdown).
    pub basis: Vec<Vec<f64>>,
    /// Auxiliary vectors `z_0, z_1, ...`.
    pub aux: Vec<Vec<f64>>,
    /// Column `k` of `G` holds rows `0..=k`.
    pub g_cols: Vec<Vec<f64>>,
    /// Column `k` of `H` holds rows `0..=k+1`.
    pub h_cols: Vec<Vec<f64>>,
    pub r0_norm: f64,
    pub x0: Vec<f64>,
    /// Column index and square-root argument of a breakdown.
    pub breakdown: Option<(usize, f64)>,
    pub trace: ConvergenceTrace,
}

impl PlGmresRun {
    /// Number of completed Hessenberg columns.
    pub fn steps(&self) -> usize {
        self.h_cols.len()
    }

    /// `H_{k+1,k}`.
    pub fn hessenberg(&self, k: usize) -> DenseMatrix {
        let mut h = DenseMatrix::zeros(k + 1, k);
        for (j, col) in self.h_cols.iter().enumerate().take(k) {
            for (i, &v) in col.iter().enumerate() {
                h[(i, j)] = v;
            }
        }
        h
    }

    /// Leading `k × k` block of `G`.
    pub fn transform(&self, k: usize) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(k, k);
        for (j, col) in self.g_cols.iter().enumerate().take(k) {
            for (i, &v) in col.iter().enumerate() {
                g[(i, j)] = v;
            }
        }
        g
    }

    /// Least-squares residual norms for `k = 0..=steps()` from one sweep of
    /// Givens rotations.
    pub fn residual_norms(&self) -> Vec<f64> {
        self.givens(self.steps()).2
    }

    /// QR of `H_{k+1,k}` by Givens rotations. Returns the columns of `R`,
    /// the rotated right-hand side `Qᵀ ‖r_0‖ e_1`, and the residual norm after
    /// each step.
    fn givens(&self, k: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let mut r: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut rot: Vec<(f64, f64)> = Vec::with_capacity(k);
        let mut g = vec![0.0; k + 1];
        g[0] = self.r0_norm;
        let mut resid = vec![self.r0_norm];
        for j in 0..k {
            let mut col = self.h_cols[j].clone();
            col.resize(j + 2, 0.0);
            for (i, &(c, s)) in rot.iter().enumerate() {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = c * a + s * b;
                col[i + 1] = -s * a + c * b;
            }
            let (a, b) = (col[j], col[j + 1]);
            let h = Float::hypot(a, b);
            let (c, s) = if h == 0.0 { (1.0, 0.0) } else { (a / h, b / h) };
            col[j] = h;
            col.truncate(j + 1);
            let gj = g[j];
            g[j] = c * gj;
            g[j + 1] = -s * gj;
            rot.push((c, s));
            r.push(col);
            resid.push(Float::abs(g[j + 1]));
        }
        (r, g, resid)
    }

    fn combine(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.x0.clone();
        for (v, &c) in self.basis.iter().zip(y) {
            axpy(c, v, &mut x);
        }
        x
    }

    /// GMRES iterate `x_k = x_0 + V_k y_k`.
    pub fn gmres_iterate(&self, k: usize) -> Vec<f64> {
        let (r, g, _) = self.givens(k);
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= r[j][i] * y[j];
            }
            y[i] = s / r[i][i];
        }
        self.combine(&y)
    }

    /// FOM iterate `x_k = x_0 + V_k H_{k,k}⁻¹ ‖r_0‖ e_1`.
    pub fn fom_iterate(&self, k: usize) -> Result<Vec<f64>, Error> {
        Ok(self.combine(&self.fom_coefficients(k)?))
    }

    fn fom_coefficients(&self, k: usize) -> Result<Vec<f64>, Error> {
        let h = self.hessenberg(k).block(k, k);
        let mut rhs = vec![0.0; k];
        if k > 0 {
            rhs[0] = self.r0_norm;
        }
        h.lu_solve(&rhs)
    }
}

/// Pipelined GMRES with `l = shifts.len()` and `m = cfg.max_iter` steps.
///
/// Follows the pipelined Arnoldi recurrences for general `G` and `H`
/// literally and stores every basis vector. The small least-squares problem
/// is solved once at the end; the trace holds the residual norms for every
/// `k`. A square-root breakdown ends the run with the basis built so far.
pub fn solve_plgmres(
    a: &SparseOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    shifts: &ShiftSet,
    cfg: &SolveConfig,
    mode: LeastSquaresMode,
) -> Result<PlGmresRun, Error> {
    let x0 = prepare(a, &Preconditioner::Identity, b, x0, cfg)?;
    let l = shifts.len();
    if l == 0 {
        return Err(Error::Argument("pipeline depth must be at least 1".into()));
    }
    let sigma = shifts.sigma();
    let m = cfg.max_iter;
    let n = a.n();

    let mut r0 = vec![0.0; n];
    a.apply(&x0, &mut r0);
    for (ri, bi) in r0.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let r0_norm = norm(&r0);
    let mut run = PlGmresRun {
        basis: Vec::new(),
        aux: Vec::new(),
        g_cols: vec![vec![1.0]],
        h_cols: Vec::new(),
        r0_norm,
        x0,
        breakdown: None,
        trace: ConvergenceTrace {
            records: Vec::new(),
            x: Vec::new(),
            status: Status::Converged,
            restarts: 0,
            breakdowns: Vec::new(),
            b_norm: norm(b),
        },
    };
    if r0_norm == 0.0 {
        run.trace.records.push(TraceRecord { iter: 0, recursive_norm: 0.0, true_norm: Some(0.0), event: Event::Converged });
        run.trace.x = run.x0.clone();
        return Ok(run);
    }
    scale(1.0 / r0_norm, &mut r0);
    run.basis.push(r0.clone());
    run.aux.push(r0);

    let mut next = vec![0.0; n];
    'outer: for i in 0..m + l {
        // Line 5
        a.apply(&run.aux[i], &mut next);
        if i < l {
            axpy(-sigma[i], &run.aux[i], &mut next);
        }
        run.aux.push(next.clone());

        if i >= l {
            let c = i + 1 - l;
            let mm = c - 1;
            // Lines 7-9
            {
                let (done, cur) = run.g_cols.split_at_mut(c);
                let gc = &mut cur[0];
                for j in (c + 1).saturating_sub(l)..c {
                    let mut s = gc[j];
                    for k in 0..j {
                        s -= done[j][k] * gc[k];
                    }
                    gc[j] = s / done[j][j];
                }
                let mut arg = gc[c];
                for k in 0..c {
                    arg -= gc[k] * gc[k];
                }
                if !(arg > 0.0) {
                    run.breakdown = Some((c, arg));
                    gc[c] = 0.0;
                } else {
                    gc[c] = Float::sqrt(arg);
                }
            }
            // Lines 10-16
            let g = &run.g_cols;
            let gmm = g[mm][mm];
            let mut h = vec![0.0; mm + 2];
            if i < 2 * l {
                for j in 0..=mm {
                    let mut s = g[c][j] + sigma[mm] * g[mm][j];
                    for k in 0..mm {
                        s -= run.h_cols[k].get(j).copied().unwrap_or(0.0) * g[mm][k];
                    }
                    h[j] = s / gmm;
                }
                h[c] = g[c][c] / gmm;
            } else {
                let back = mm - l;
                for j in 0..=mm {
                    let mut s = 0.0;
                    for k in 0..=back + 1 {
                        let gj = g[k + l].get(j).copied().unwrap_or(0.0);
                        s += gj * run.h_cols[back][k];
                    }
                    for k in j.saturating_sub(1)..mm {
                        s -= run.h_cols[k].get(j).copied().unwrap_or(0.0) * g[mm][k];
                    }
                    h[j] = s / gmm;
                }
                h[c] = g[c][c] * run.h_cols[back][back + 1] / gmm;
            }
            run.h_cols.push(h);
            if run.breakdown.is_some() {
                break 'outer;
            }
            // Line 17
            let mut v = run.aux[c].clone();
            for j in 0..c {
                axpy(-run.g_cols[c][j], &run.basis[j], &mut v);
            }
            scale(1.0 / run.g_cols[c][c], &mut v);
            run.basis.push(v);
            if c == m {
                break 'outer;
            }
            // Line 18
            let hcol = &run.h_cols[mm];
            let mut z = run.aux[i + 1].clone();
            for j in 0..=mm {
                axpy(-hcol[j], &run.aux[j + l], &mut z);
            }
            scale(1.0 / hcol[c], &mut z);
            run.aux[i + 1] = z;
        }

        // Line 20
        let zi = &run.aux[i + 1];
        let mut col = Vec::with_capacity(i + 2);
        for j in 0..=i + 1 {
            let basis = if j + l <= i + 1 { &run.basis[j] } else { &run.aux[j] };
            col.push(dot(zi, basis));
        }
        run.g_cols.push(col);
    }
    run.g_cols.truncate(run.basis.len() + usize::from(run.breakdown.is_some()));

    finish_trace(a, b, &mut run, cfg, mode)?;
    Ok(run)
}

fn finish_trace(
    a: &SparseOperator,
    b: &[f64],
    run: &mut PlGmresRun,
    cfg: &SolveConfig,
    mode: LeastSquaresMode,
) -> Result<(), Error> {
    let steps = run.steps();
    let norms: Vec<f64> = match mode {
        LeastSquaresMode::Gmres => run.residual_norms(),
        LeastSquaresMode::Fom => {
            let mut out = vec![run.r0_norm];
            for k in 1..=steps {
                let y = run.fom_coefficients(k)?;
                out.push(Float::abs(run.h_cols[k - 1][k] * y[k - 1]));
            }
            out
        }
    };
    let iterate = |k: usize| -> Result<Vec<f64>, Error> {
        match mode {
            LeastSquaresMode::Gmres => Ok(run.gmres_iterate(k)),
            LeastSquaresMode::Fom => run.fom_iterate(k),
        }
    };
    let mut work = vec![0.0; a.n()];
    let mut records = Vec::with_capacity(steps + 1);
    for (k, &r) in norms.iter().enumerate() {
        let true_norm = if cfg.record_true_residual {
            Some(a.residual_norm(b, &iterate(k)?, &mut work))
        } else {
            None
        };
        records.push(TraceRecord { iter: k, recursive_norm: r, true_norm, event: Event::None });
    }
    let x = iterate(steps)?;
    let converged = norms[steps] <= cfg.tol * run.trace.b_norm;
    if let Some((c, arg)) = run.breakdown {
        run.trace.breakdowns.push(Breakdown { iter: c, kind: BreakdownKind::SquareRoot { argument: arg } });
    }
    let status = if converged {
        Status::Converged
    } else if run.breakdown.is_some() {
        Status::Breakdown
    } else {
        Status::MaxIterations
    };
    if let Some(last) = records.last_mut() {
        last.event = match status {
            Status::Converged => Event::Converged,
            Status::Breakdown => Event::Breakdown,
            Status::MaxIterations => Event::None,
        };
    }
    run.trace.records = records;
    run.trace.x = x;
    run.trace.status = status;
    Ok(())
}

/// Column `k − 1` of `H_{k+1,k} = G_{k+1} B_{k+1,k} G_k⁻¹`, given the
/// previous columns of `H`:
/// `(G_k b_{:,k−1} + g_{:,k} b_{k,k−1} − H_{k,k−1} g_{:,k−1}) / g_{k−1,k−1}`
/// with last entry `g_{k,k} b_{k,k−1} / g_{k−1,k−1}`.
///
/// `g` is `(k+1) × (k+1)` upper triangular, `bmat` is `(k+1) × k` and
/// `h_prev` is `k × (k−1)`.
pub fn hessenberg_column(g: &DenseMatrix, bmat: &DenseMatrix, h_prev: &DenseMatrix) -> Result<Vec<f64>, Error> {
    let k = bmat.cols();
    if k == 0 || g.rows() != k + 1 || bmat.rows() != k + 1 || h_prev.rows() != k || h_prev.cols() + 1 != k {
        return Err(Error::Argument("inconsistent shapes for a Hessenberg column".into()));
    }
    let d = g[(k - 1, k - 1)];
    if d == 0.0 {
        return Err(Error::Argument("zero transform diagonal".into()));
    }
    let mut out = vec![0.0; k + 1];
    for (i, o) in out.iter_mut().enumerate().take(k) {
        let mut s = 0.0;
        for t in 0..k {
            s += g[(i, t)] * bmat[(t, k - 1)];
        }
        s += g[(i, k)] * bmat[(k, k - 1)];
        for t in 0..k - 1 {
            s -= h_prev[(i, t)] * g[(t, k - 1)];
        }
        *o = s / d;
    }
    out[k] = g[(k, k)] * bmat[(k, k - 1)] / d;
    Ok(out)
}
