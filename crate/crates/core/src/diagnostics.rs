//! Finite-precision instrumentation and brute-force oracles.
//!
//! The gap monitors are [`Observer`]s: pass them to a solver and they
//! evaluate, per iteration, the distance between recursively updated and
//! explicitly recomputed quantities. Each costs one extra SPMV per
//! quantity; nothing is stored beyond a few vectors.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::dense::DenseMatrix;
use crate::error::{check_len, Error};
use crate::observe::{Observer, Probe};
use crate::shifts::ShiftSet;
use crate::sparse::SparseOperator;
use crate::vecops::{axpy, dist, dot, norm, scale};

/// Largest order for which spectra are computed densely.
pub const DENSE_CAP: usize = 1024;
pub const SNAPSHOT_MAX_N: usize = 100_000;
pub const SNAPSHOT_MAX_ITERS: usize = 500;

/// Lanczos with full reorthogonalization.
#[derive(Debug, Clone)]
pub struct DenseLanczosResult {
    /// Orthonormal vectors `v_0..v_{k−1}`.
    pub basis: Vec<Vec<f64>>,
    /// Diagonal of `T_k`.
    pub alpha: Vec<f64>,
    /// `beta[j] = t_{j+1,j}`; has length `k`, the last entry couples to the
    /// (unstored) next vector and is zero after early termination.
    pub beta: Vec<f64>,
}

impl DenseLanczosResult {
    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    /// Square tridiagonal `T_k`.
    pub fn t_matrix(&self) -> DenseMatrix {
        let k = self.k();
        let mut t = DenseMatrix::zeros(k, k);
        for j in 0..k {
            t[(j, j)] = self.alpha[j];
            if j + 1 < k {
                t[(j + 1, j)] = self.beta[j];
                t[(j, j + 1)] = self.beta[j];
            }
        }
        t
    }

    pub fn ritz_values(&self) -> Vec<f64> {
        let mut d = self.alpha.clone();
        let mut e = self.beta.clone();
        crate::dense::tridiagonal_eigenvalues(&mut d, &mut e).expect("QL converges on tridiagonals");
        d.sort_by(f64::total_cmp);
        d
    }

    /// `‖VᵀV − I‖_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, vi) in self.basis.iter().enumerate() {
            for (j, vj) in self.basis.iter().enumerate().skip(i) {
                let e = dot(vi, vj) - if i == j { 1.0 } else { 0.0 };
                worst = worst.max(Float::abs(e));
            }
        }
        worst
    }
}

/// Runs `k` Lanczos steps from `v0`, reorthogonalizing twice against the
/// whole basis. Stops early on an invariant subspace.
pub fn dense_lanczos(a: &SparseOperator, v0: &[f64], k: usize) -> Result<DenseLanczosResult, Error> {
    check_len(a.n(), v0.len())?;
    if k == 0 || k > a.n() {
        return Err(Error::Argument(alloc::format!("Lanczos length {k} outside 1..={}", a.n())));
    }
    let nv = norm(v0);
    if nv == 0.0 {
        return Err(Error::Argument("zero starting vector".into()));
    }
    let mut v = v0.to_vec();
    scale(1.0 / nv, &mut v);
    let mut out = DenseLanczosResult { basis: vec![v], alpha: Vec::new(), beta: Vec::new() };
    let mut w = vec![0.0; a.n()];
    for j in 0..k {
        a.apply(&out.basis[j], &mut w);
        let scale_w = norm(&w);
        let alpha = dot(&w, &out.basis[j]);
        for _ in 0..2 {
            for b in &out.basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let beta = norm(&w);
        out.alpha.push(alpha);
        if beta < 1e-14 * scale_w.max(1.0) {
            out.beta.push(0.0);
            break;
        }
        out.beta.push(beta);
        if j + 1 < k {
            let mut next = w.clone();
            scale(1.0 / beta, &mut next);
            out.basis.push(next);
        }
    }
    Ok(out)
}

/// `max_i |P(λ_i)|` over a set of eigenvalue estimates, taking the largest
/// over all partial products `P_0..P_degree`.
fn poly_sup(shifts: &ShiftSet, degree: usize, points: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for d in 0..=degree {
        for &t in points {
            best = best.max(Float::abs(shifts.poly(d, t)));
        }
    }
    best
}

/// Spectrum (or Ritz estimate for large operators) used by the polynomial
/// norm; the flag is set when the values are estimates.
pub fn spectrum_estimate(a: &SparseOperator) -> Result<(Vec<f64>, bool), Error> {
    if a.n() <= DENSE_CAP {
        return Ok((DenseMatrix::from_sparse(a).symmetric_eigenvalues()?, false));
    }
    let v0: Vec<f64> = (0..a.n()).map(|i| 1.0 + 0.5 * Float::sin(i as f64)).collect();
    let lz = dense_lanczos(a, &v0, 80.min(a.n()))?;
    Ok((lz.ritz_values(), true))
}

/// `‖P_degree(A)‖₂ = max_i |P(λ_i)|` for symmetric `A`.
pub fn poly_norm(a: &SparseOperator, shifts: &ShiftSet, degree: usize) -> Result<f64, Error> {
    let (ev, _) = spectrum_estimate(a)?;
    let mut best: f64 = 0.0;
    for t in ev {
        best = best.max(Float::abs(shifts.poly(degree, t)));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma41Report {
    /// `max_{0≤d≤l} ‖P_d(A)‖₂`.
    pub poly_norm: f64,
    /// `poly_norm · (1 + n ε)`; the rounding terms are over-estimated by
    /// `n ε ‖P(A)‖`.
    pub bound: f64,
    /// Spectrum estimated from Ritz values instead of a dense solve.
    pub estimated: bool,
    /// `(k, ‖Ḡ_{k+1}‖_max, bound)` per finalized column.
    pub rows: Vec<(usize, f64, f64)>,
}

impl Lemma41Report {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|&(_, g, b)| g <= b)
    }
}

/// Bound on the entries of the computed transform. The first `l` columns
/// hold `z_k = P_k(A) v_0` with partial products, hence the maximum over
/// all degrees up to `l`.
pub fn lemma41_bound(a: &SparseOperator, shifts: &ShiftSet, g_max: &[f64]) -> Result<Lemma41Report, Error> {
    let (ev, estimated) = spectrum_estimate(a)?;
    let poly_norm = poly_sup(shifts, shifts.len(), &ev);
    let bound = poly_norm * (1.0 + a.n() as f64 * f64::EPSILON);
    let rows = g_max.iter().enumerate().map(|(k, &g)| (k, g, bound)).collect();
    Ok(Lemma41Report { poly_norm, bound, estimated, rows })
}

/// Compares the transform of exact (fully reorthogonalized) bases with
/// `P_l(T_j)` shifted up by `l` rows: for `a, b < j − l`,
/// `g_{l+a, l+b} = P_l(T_j)_{a+l, b}`. Returns the largest deviation.
pub fn lemma_a1_check(a: &SparseOperator, v0: &[f64], shifts: &ShiftSet, j: usize) -> Result<f64, Error> {
    let l = shifts.len();
    if j < l + 1 {
        return Err(Error::Argument(alloc::format!("need j ≥ l + 1, got j = {j}, l = {l}")));
    }
    let lz = dense_lanczos(a, v0, j)?;
    if lz.k() < j {
        return Err(Error::Argument("Krylov space is invariant before step j".into()));
    }
    let n = a.n();
    let mut tmp = vec![0.0; n];
    let apply_poly = |x: &[f64], degree: usize, tmp: &mut Vec<f64>| -> Vec<f64> {
        let mut y = x.to_vec();
        for &s in &shifts.sigma()[..degree] {
            a.apply(&y, tmp);
            for (yi, ti) in y.iter_mut().zip(tmp.iter()) {
                *yi = ti - s * *yi;
            }
        }
        y
    };
    let z: Vec<Vec<f64>> = (0..j)
        .map(|k| if k < l { apply_poly(&lz.basis[0], k, &mut tmp) } else { apply_poly(&lz.basis[k - l], l, &mut tmp) })
        .collect();

    let t = lz.t_matrix();
    let mut pt = DenseMatrix::identity(j);
    for &s in shifts.sigma() {
        pt = t.shifted(s).matmul(&pt);
    }
    let mut worst: f64 = 0.0;
    for ra in 0..j - l {
        for cb in 0..j - l {
            let g = dot(&lz.basis[l + ra], &z[l + cb]);
            worst = worst.max(Float::abs(g - pt[(ra + l, cb)]));
        }
    }
    Ok(worst)
}

/// Explicit `‖G⁻¹‖_max` of an upper triangular matrix; infinite when a
/// diagonal entry vanishes.
pub fn ginv_max_norm(g: &DenseMatrix) -> f64 {
    g.upper_triangular_inverse().map_or(f64::INFINITY, |inv| inv.max_abs())
}

/// Incrementally inverts a growing upper triangular matrix supplied column
/// by column, tracking `‖G_k⁻¹‖_max`.
#[derive(Debug, Clone, Default)]
pub struct InverseTracker {
    cols: Vec<Vec<f64>>,
    max: f64,
    singular: bool,
}

impl InverseTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds column `k = len()`; `entries` are rows `first_row..=k`.
    pub fn push(&mut self, first_row: usize, entries: &[f64]) -> f64 {
        let k = self.cols.len();
        debug_assert_eq!(first_row + entries.len(), k + 1);
        let d = entries[entries.len() - 1];
        if self.singular || d == 0.0 {
            self.singular = true;
            self.cols.push(Vec::new());
            return f64::INFINITY;
        }
        // G_{k+1}⁻¹ e_k = [−G_k⁻¹ g / d ; 1/d]
        let mut y = vec![0.0; k + 1];
        for (t, &g) in entries[..entries.len() - 1].iter().enumerate() {
            let r = first_row + t;
            for (yi, ci) in y.iter_mut().zip(&self.cols[r]) {
                *yi -= g * ci;
            }
        }
        for yi in &mut y[..k] {
            *yi /= d;
        }
        y[k] = 1.0 / d;
        self.max = self.max.max(crate::vecops::max_abs(&y));
        self.cols.push(y);
        self.max
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        if self.singular {
            f64::INFINITY
        } else {
            self.max
        }
    }
}

/// One row of a [`GapTrace`], for iteration index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GapRow {
    pub k: usize,
    /// `‖(b − A x̄_k) − r̄_k‖`.
    pub residual_gap: Option<f64>,
    /// `‖v̄_k^true − v̄_k‖`.
    pub basis_gap: Option<f64>,
    /// `‖Ḡ_{k+1}⁻¹‖_max` over the leading `(k+1)×(k+1)` block.
    pub ginv_max: Option<f64>,
    /// `‖Ḡ_{k+1}‖_max`.
    pub g_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapTrace {
    pub rows: Vec<GapRow>,
}

impl GapTrace {
    fn row(&mut self, k: usize) -> &mut GapRow {
        while self.rows.len() <= k {
            let k = self.rows.len();
            self.rows.push(GapRow { k, ..GapRow::default() });
        }
        &mut self.rows[k]
    }

    pub fn max_residual_gap(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.residual_gap).fold(0.0, f64::max)
    }
}

/// Online gap monitor for p(l)-CG (first restart cycle only).
pub struct PlcgGapMonitor<'a> {
    a: &'a SparseOperator,
    b: &'a [f64],
    work: Vec<f64>,
    prev: [(Option<usize>, Vec<f64>); 2],
    gamma: Vec<f64>,
    delta: Vec<f64>,
    inverse: InverseTracker,
    inverse_limit: usize,
    g_max: f64,
    restarted: bool,
    pub trace: GapTrace,
}

impl<'a> PlcgGapMonitor<'a> {
    /// `inverse_limit` caps how many transform columns are inverted
    /// (memory grows quadratically).
    pub fn new(a: &'a SparseOperator, b: &'a [f64], inverse_limit: usize) -> Self {
        Self {
            a,
            b,
            work: vec![0.0; a.n()],
            prev: [(None, Vec::new()), (None, Vec::new())],
            gamma: Vec::new(),
            delta: Vec::new(),
            inverse: InverseTracker::new(),
            inverse_limit,
            g_max: 0.0,
            restarted: false,
            trace: GapTrace::default(),
        }
    }

    pub fn restarted(&self) -> bool {
        self.restarted
    }

    fn basis_gap(&mut self, k: usize, v: &[f64]) -> Option<f64> {
        let j = k - 1;
        let gamma = *self.gamma.get(j)?;
        let delta = *self.delta.get(j)?;
        if delta == 0.0 {
            return None;
        }
        let Self { a, prev, work, delta: deltas, .. } = self;
        let find = |idx: usize| prev.iter().position(|e| e.0 == Some(idx));
        let pj = find(j)?;
        a.apply(&prev[pj].1, work);
        axpy(-gamma, &prev[pj].1, work);
        if j > 0 {
            let pm = find(j - 1)?;
            axpy(-deltas[j - 1], &prev[pm].1, work);
        }
        scale(1.0 / delta, work);
        Some(dist(work, v))
    }
}

impl Observer for PlcgGapMonitor<'_> {
    fn observe(&mut self, probe: Probe<'_>) {
        if self.restarted {
            return;
        }
        match probe {
            Probe::Restart { .. } => self.restarted = true,
            Probe::Solution { k, x, zeta, v, .. } => {
                self.a.apply(x, &mut self.work);
                let mut s = 0.0;
                for ((bi, ai), vi) in self.b.iter().zip(&self.work).zip(v) {
                    let d = (bi - ai) - zeta * vi;
                    s += d * d;
                }
                self.trace.row(k).residual_gap = Some(Float::sqrt(s));
            }
            Probe::Tridiagonal { k, gamma, delta } => {
                debug_assert_eq!(self.gamma.len(), k);
                self.gamma.push(gamma);
                self.delta.push(delta);
            }
            Probe::Basis { k, v } => {
                let gap = if k == 0 { Some(0.0) } else { self.basis_gap(k, v) };
                self.trace.row(k).basis_gap = gap;
                // Keep v_k and v_{k−1}.
                let slot = match (self.prev[0].0, self.prev[1].0) {
                    (None, _) => 0,
                    (_, None) => 1,
                    (Some(p), Some(q)) => usize::from(q < p),
                };
                self.prev[slot].0 = Some(k);
                self.prev[slot].1.clear();
                self.prev[slot].1.extend_from_slice(v);
            }
            Probe::Column { k, first_row, entries } => {
                self.g_max = self.g_max.max(crate::vecops::max_abs(entries));
                let ginv = (k < self.inverse_limit).then(|| self.inverse.push(first_row, entries));
                let row = self.trace.row(k);
                row.g_max = Some(self.g_max);
                row.ginv_max = ginv;
            }
            _ => {}
        }
    }
}

/// Residual gap `‖(b − A x̄_k) − r̄_k‖` of classic CG. The transform
/// amplification for CG is identically one.
pub struct CgGapMonitor<'a> {
    a: &'a SparseOperator,
    b: &'a [f64],
    work: Vec<f64>,
    pub trace: GapTrace,
}

impl<'a> CgGapMonitor<'a> {
    pub fn new(a: &'a SparseOperator, b: &'a [f64]) -> Self {
        Self { a, b, work: vec![0.0; a.n()], trace: GapTrace::default() }
    }
}

impl Observer for CgGapMonitor<'_> {
    fn observe(&mut self, probe: Probe<'_>) {
        if let Probe::Cg { k, x, r } = probe {
            self.a.apply(x, &mut self.work);
            let mut s = 0.0;
            for ((bi, ai), ri) in self.b.iter().zip(&self.work).zip(r) {
                let d = (bi - ai) - ri;
                s += d * d;
            }
            let row = self.trace.row(k);
            row.residual_gap = Some(Float::sqrt(s));
            row.ginv_max = Some(1.0);
        }
    }
}

/// Directly measured gaps of pipelined CG at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeCgGapRow {
    pub k: usize,
    /// `‖A p̄ − s̄‖`
    pub s_gap: f64,
    /// `‖A r̄ − w̄‖`
    pub w_gap: f64,
    /// `‖A s̄ − z̄‖`
    pub z_gap: f64,
    /// `‖(b − A x̄) − r̄‖`
    pub r_gap: f64,
    pub beta: f64,
    /// Max norm of the leading block of `𝓑⁻¹`, whose entry `(i, j)` is
    /// `β_{i+1} ⋯ β_j`.
    pub binv_max: f64,
}

/// Observer for the unpreconditioned pipelined CG recurrences.
pub struct PipeCgGapMonitor<'a> {
    a: &'a SparseOperator,
    b: &'a [f64],
    work: Vec<f64>,
    column_max: f64,
    overall: f64,
    pub rows: Vec<PipeCgGapRow>,
}

impl<'a> PipeCgGapMonitor<'a> {
    pub fn new(a: &'a SparseOperator, b: &'a [f64]) -> Self {
        Self { a, b, work: vec![0.0; a.n()], column_max: 0.0, overall: 0.0, rows: Vec::new() }
    }

    fn gap(&mut self, x: &[f64], y: &[f64]) -> f64 {
        self.a.apply(x, &mut self.work);
        dist(&self.work, y)
    }
}

impl Observer for PipeCgGapMonitor<'_> {
    fn observe(&mut self, probe: Probe<'_>) {
        let Probe::PipeCg { k, x, r, w, p, s, z, beta } = probe else { return };
        let s_gap = self.gap(p, s);
        let w_gap = self.gap(r, w);
        let z_gap = self.gap(s, z);
        self.a.apply(x, &mut self.work);
        let mut acc = 0.0;
        for ((bi, ai), ri) in self.b.iter().zip(&self.work).zip(r) {
            let d = (bi - ai) - ri;
            acc += d * d;
        }
        self.column_max = if k == 0 { 1.0 } else { (beta * self.column_max).max(1.0) };
        self.overall = self.overall.max(self.column_max);
        self.rows.push(PipeCgGapRow {
            k,
            s_gap,
            w_gap,
            z_gap,
            r_gap: Float::sqrt(acc),
            beta,
            binv_max: self.overall,
        });
    }
}

/// Dense `𝓑⁻¹` from recorded `β_1..β_j` (`betas[0]` is `β_0` and unused).
pub fn binv_matrix(betas: &[f64]) -> DenseMatrix {
    let m = betas.len();
    let mut b = DenseMatrix::identity(m);
    for i in 0..m {
        let mut prod = 1.0;
        for j in i + 1..m {
            prod *= betas[j];
            b[(i, j)] = prod;
        }
    }
    b
}

/// Copies of p(l)-CG quantities for dense oracle comparisons (first cycle
/// only). Refuses problems larger than [`SNAPSHOT_MAX_N`] or longer than
/// [`SNAPSHOT_MAX_ITERS`].
#[derive(Debug, Clone, Default)]
pub struct Snapshots {
    limit: usize,
    restarted: bool,
    pub v: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub zeta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    /// `(first_row, entries)` of each finalized transform column.
    pub columns: Vec<(usize, Vec<f64>)>,
}

impl Snapshots {
    pub fn new(n: usize, iters: usize) -> Result<Self, Error> {
        if n > SNAPSHOT_MAX_N || iters > SNAPSHOT_MAX_ITERS {
            return Err(Error::Capacity(alloc::format!(
                "snapshots limited to n ≤ {SNAPSHOT_MAX_N} and {SNAPSHOT_MAX_ITERS} iterations, got n = {n}, {iters} iterations"
            )));
        }
        Ok(Self { limit: iters + 1, ..Self::default() })
    }

    /// Leading `j × j` block of `Ḡ` assembled from the recorded columns.
    pub fn g_matrix(&self, j: usize) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(j, j);
        for (k, (first, entries)) in self.columns.iter().enumerate().take(j) {
            for (t, &e) in entries.iter().enumerate() {
                g[(first + t, k)] = e;
            }
        }
        g
    }

    /// `T_k` from the recorded coefficients.
    pub fn t_matrix(&self, k: usize) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(k, k);
        for j in 0..k {
            t[(j, j)] = self.gamma[j];
            if j + 1 < k {
                t[(j + 1, j)] = self.delta[j];
                t[(j, j + 1)] = self.delta[j];
            }
        }
        t
    }

    pub fn restarted(&self) -> bool {
        self.restarted
    }
}

impl Observer for Snapshots {
    fn observe(&mut self, probe: Probe<'_>) {
        if self.restarted {
            return;
        }
        let lim = self.limit;
        match probe {
            Probe::Restart { .. } => self.restarted = true,
            Probe::Basis { v, .. } if self.v.len() < lim => self.v.push(v.to_vec()),
            Probe::Auxiliary { z, .. } if self.z.len() < lim => self.z.push(z.to_vec()),
            Probe::Solution { x, zeta, .. } if self.x.len() < lim => {
                self.x.push(x.to_vec());
                self.zeta.push(zeta);
            }
            Probe::Tridiagonal { gamma, delta, .. } if self.gamma.len() < lim => {
                self.gamma.push(gamma);
                self.delta.push(delta);
            }
            Probe::Column { first_row, entries, .. } if self.columns.len() < lim => {
                self.columns.push((first_row, entries.to_vec()));
            }
            _ => {}
        }
    }
}
