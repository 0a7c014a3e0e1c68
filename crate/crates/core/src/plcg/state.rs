use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::transform::BandedTransform;
use super::window::SlidingWindow;
use crate::error::Error;
use crate::observe::{Observer, Probe};
use crate::precond::Preconditioner;
use crate::shifts::ShiftSet;
use crate::solver::{prepare, BreakdownKind, SolveConfig};
use crate::sparse::SparseOperator;
use crate::vecops::{axpy, dot, scale};

/// Root arguments within this many ulps of the pre-subtraction value are
/// treated as candidates for a happy breakdown.
const HAPPY_ULPS: f64 = 16.0;

/// Result of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Continue,
    /// `|ζ_iter| ≤ τ‖b‖` right after `x_iter` was formed.
    Converged { iter: usize, zeta: f64 },
    /// Negative square-root argument; `iter` is the last formed iterate.
    HardBreakdown { iter: usize, root_argument: f64 },
    /// Square-root argument vanished to rounding level: the Krylov space is
    /// (numerically) invariant. Finish with [`PipelineState::finish_happy`].
    HappyBreakdown { iter: usize, root_argument: f64 },
    /// Zero LU pivot or a non-finite recurrence scalar.
    Unstable { iter: usize, kind: BreakdownKind },
}

/// Dot products issued in one iteration and consumed `l` iterations later.
#[derive(Debug, Clone)]
struct DotBatch {
    tag: usize,
    column: usize,
    first_row: usize,
    values: Vec<f64>,
}

enum RootFailure {
    Hard(f64),
    Happy(f64),
}

/// Mutable state of one p(l)-CG solve.
///
/// One outer iteration `i` runs the kernels in pipeline order:
/// [`advance_z`](Self::advance_z) (SPMV), then for `i ≥ l`
/// [`update_transform`](Self::update_transform),
/// [`update_tridiagonal`](Self::update_tridiagonal) and
/// [`update_bases`](Self::update_bases), then
/// [`queue_dot_products`](Self::queue_dot_products) and finally, for
/// `i ≥ l`, [`update_solution`](Self::update_solution).
/// [`step`](Self::step) runs them all.
///
/// Indices are local to the current restart cycle; the iterate `x_k` of the
/// cycle has global index `base + k`.
pub struct PipelineState<'a> {
    a: &'a SparseOperator,
    m: &'a Preconditioner,
    b: &'a [f64],
    l: usize,
    sigma: Vec<f64>,
    i: usize,
    z: SlidingWindow,
    zhat: Option<SlidingWindow>,
    v: SlidingWindow,
    g: BandedTransform,
    gamma: Vec<f64>,
    delta: Vec<f64>,
    eta: Vec<f64>,
    lambda: Vec<f64>,
    zeta: Vec<f64>,
    p: Vec<f64>,
    x: Vec<f64>,
    pending: VecDeque<DotBatch>,
    az: Vec<f64>,
    maz: Vec<f64>,
    r0_norm: f64,
    threshold: f64,
    base: usize,
    restarts: usize,
    root_argument: f64,
    last_fresh_dots: usize,
    new_solution: bool,
}

impl<'a> PipelineState<'a> {
    /// Forms `r_0 = b − A x_0` and seeds the windows with `v_0 = z_0`.
    ///
    /// When `r_0 = 0` the state is returned with
    /// [`r0_norm`](Self::r0_norm) zero and must not be stepped.
    pub fn new(
        a: &'a SparseOperator,
        m: &'a Preconditioner,
        b: &'a [f64],
        x0: Option<&[f64]>,
        shifts: &ShiftSet,
        cfg: &SolveConfig,
        obs: &mut dyn Observer,
    ) -> Result<Self, Error> {
        let x = prepare(a, m, b, x0, cfg)?;
        let l = shifts.len();
        if l == 0 {
            return Err(Error::Argument("pipeline depth must be at least 1".into()));
        }
        let n = a.n();
        let pre = !m.is_identity();
        let mut bm = vec![0.0; n];
        m.apply_unchecked(b, &mut bm);
        let b_norm = Float::sqrt(dot(b, &bm).max(0.0));
        let mut state = Self {
            a,
            m,
            b,
            l,
            sigma: shifts.sigma().to_vec(),
            i: 0,
            // Line 18 also reads z_{i−1}, so depth 1 needs three slots.
            z: SlidingWindow::new((l + 1).max(3), n),
            zhat: pre.then(|| SlidingWindow::new(3, n)),
            v: SlidingWindow::new(2 * l + 1, n),
            g: BandedTransform::new(l),
            gamma: Vec::new(),
            delta: Vec::new(),
            eta: Vec::new(),
            lambda: Vec::new(),
            zeta: Vec::new(),
            p: vec![0.0; n],
            x,
            pending: VecDeque::with_capacity(l + 1),
            az: vec![0.0; n],
            maz: if pre { vec![0.0; n] } else { Vec::new() },
            r0_norm: 0.0,
            threshold: cfg.tol * b_norm,
            base: 0,
            restarts: 0,
            root_argument: 1.0,
            last_fresh_dots: 0,
            new_solution: false,
        };
        state.seed(obs)?;
        Ok(state)
    }

    fn seed(&mut self, obs: &mut dyn Observer) -> Result<(), Error> {
        self.i = 0;
        self.z.clear();
        self.v.clear();
        if let Some(zh) = &mut self.zhat {
            zh.clear();
        }
        self.g.clear();
        self.pending.clear();
        for h in [&mut self.gamma, &mut self.delta, &mut self.eta, &mut self.lambda, &mut self.zeta] {
            h.clear();
        }
        self.new_solution = false;
        self.root_argument = 1.0;

        self.a.apply(&self.x, &mut self.az);
        for (u, bi) in self.az.iter_mut().zip(self.b) {
            *u = bi - *u;
        }
        let rho = match &mut self.zhat {
            None => crate::vecops::norm(&self.az),
            Some(_) => {
                self.m.apply_unchecked(&self.az, &mut self.maz);
                Float::sqrt(dot(&self.az, &self.maz).max(0.0))
            }
        };
        if !rho.is_finite() {
            return Err(Error::Argument("initial residual is not finite".into()));
        }
        self.r0_norm = rho;
        if rho == 0.0 {
            return Ok(());
        }
        let inv = 1.0 / rho;
        let mut z0 = self.z.take_next();
        match &mut self.zhat {
            None => z0.copy_from_slice(&self.az),
            Some(zh) => {
                let mut h = zh.take_next();
                h.copy_from_slice(&self.az);
                scale(inv, &mut h);
                zh.commit(h);
                z0.copy_from_slice(&self.maz);
            }
        }
        scale(inv, &mut z0);
        self.v.push_copy(&z0);
        self.z.commit(z0);
        self.g.push(0, vec![1.0]);

        let v0 = self.v.get(0);
        obs.observe(Probe::Basis { k: 0, v: v0 });
        obs.observe(Probe::Auxiliary { k: 0, z: self.z.get(0) });
        obs.observe(Probe::Column { k: 0, first_row: 0, entries: &[1.0] });
        obs.observe(Probe::Solution { k: 0, global: self.base, x: &self.x, zeta: rho, v: v0 });
        Ok(())
    }

    /// Runs one outer iteration.
    pub fn step(&mut self, obs: &mut dyn Observer) -> StepOutcome {
        debug_assert!(self.r0_norm > 0.0, "stepping a converged state");
        let l = self.l;
        let i = self.i;
        self.new_solution = false;
        self.advance_z(obs);
        let mut happy = None;
        if i >= l {
            match self.update_transform(obs) {
                Ok(()) => {}
                Err(RootFailure::Hard(arg)) => {
                    return StepOutcome::HardBreakdown { iter: self.global_index(), root_argument: arg }
                }
                Err(RootFailure::Happy(arg)) => happy = Some(arg),
            }
            self.update_tridiagonal(obs);
            if happy.is_none() {
                self.update_bases(obs);
            }
        }
        if happy.is_none() {
            self.queue_dot_products();
        }
        let mut outcome = StepOutcome::Continue;
        if i >= l {
            outcome = self.update_solution(obs);
        }
        self.i += 1;
        match (outcome, happy) {
            (StepOutcome::Continue, Some(arg)) => {
                StepOutcome::HappyBreakdown { iter: self.global_index(), root_argument: arg }
            }
            _ => outcome,
        }
    }

    /// K1: `z_{i+1}` from one SPMV (and one preconditioner application).
    ///
    /// While `i < l` the shifted product `(M⁻¹A − σ_i) z_i` is final.
    /// Afterwards the raw product is stored and corrected by
    /// [`update_bases`](Self::update_bases).
    pub fn advance_z(&mut self, obs: &mut dyn Observer) {
        let i = self.i;
        self.a.apply(self.z.get(i), &mut self.az);
        let pre = self.zhat.is_some();
        if pre {
            self.m.apply_unchecked(&self.az, &mut self.maz);
        }
        let mut next = self.z.take_next();
        let src = if pre { &self.maz } else { &self.az };
        let zi = self.z.get(i);
        if i < self.l {
            let s = self.sigma[i];
            for ((o, a), z) in next.iter_mut().zip(src).zip(zi) {
                *o = a - s * z;
            }
        } else {
            next.copy_from_slice(src);
        }
        self.z.commit(next);
        if let Some(zh) = &mut self.zhat {
            let mut h = zh.take_next();
            if i < self.l {
                let s = self.sigma[i];
                for ((o, a), z) in h.iter_mut().zip(&self.az).zip(zh.get(i)) {
                    *o = a - s * z;
                }
            } else {
                h.copy_from_slice(&self.az);
            }
            zh.commit(h);
        }
        if i < self.l {
            obs.observe(Probe::Auxiliary { k: i + 1, z: self.z.get(i + 1) });
        }
    }

    /// K2: consumes the reduction issued `l` iterations ago and finalizes
    /// column `c = i − l + 1` of `G`.
    fn update_transform(&mut self, obs: &mut dyn Observer) -> Result<(), RootFailure> {
        let l = self.l;
        let c = self.i + 1 - l;
        let batch = self.pending.pop_front().expect("reduction for this column is in flight");
        assert_eq!(batch.tag + l, self.i, "reduction consumed at the wrong iteration");
        assert_eq!(batch.column, c);

        let lo = self.g.first_row(c);
        let mut col = vec![0.0; c - lo + 1];
        // Rows above c−l mirror finalized columns: g_{r,c} = g_{c−l, r+l}.
        for r in lo..batch.first_row {
            col[r - lo] = self.g.get(c - l, r + l);
        }
        for (t, &val) in batch.values.iter().enumerate() {
            col[batch.first_row + t - lo] = val;
        }
        // Rows strictly between c−l and c hold (z_c, z_r): orthogonalize.
        for r in (c + 1).saturating_sub(l).max(1)..c {
            let mut s = col[r - lo];
            for k in lo..r {
                s -= self.g.get(k, r) * col[k - lo];
            }
            col[r - lo] = s / self.g.diag(r);
        }
        let pre = col[c - lo];
        let mut arg = pre;
        for &gk in &col[..c - lo] {
            arg -= gk * gk;
        }
        self.root_argument = arg;

        let cutoff = HAPPY_ULPS * f64::EPSILON * Float::abs(pre);
        let failure = if Float::abs(arg) <= cutoff {
            col[c - lo] = 0.0;
            Some(RootFailure::Happy(arg))
        } else if !(arg > 0.0) {
            return Err(RootFailure::Hard(arg));
        } else {
            col[c - lo] = Float::sqrt(arg);
            None
        };
        obs.observe(Probe::Column { k: c, first_row: lo, entries: &col });
        self.g.push(c, col);
        failure.map_or(Ok(()), Err)
    }

    /// Public wrapper of the transform update for callers driving the
    /// kernels by hand. Returns the square-root argument on failure.
    pub fn update_transform_checked(&mut self, obs: &mut dyn Observer) -> Result<(), f64> {
        self.update_transform(obs).map_err(|f| match f {
            RootFailure::Hard(a) | RootFailure::Happy(a) => a,
        })
    }

    /// K3: `γ_k` and `δ_k` for `k = i − l` from the transform band.
    pub fn update_tridiagonal(&mut self, obs: &mut dyn Observer) {
        let l = self.l;
        let k = self.i - l;
        let g = &self.g;
        let gkk = g.diag(k);
        let gkc = g.get(k, k + 1);
        let gcc = g.diag(k + 1);
        let back = if k > 0 { g.get(k - 1, k) * self.delta[k - 1] } else { 0.0 };
        let (gamma, delta) = if k < l {
            ((gkc + self.sigma[k] * gkk - back) / gkk, gcc / gkk)
        } else {
            let (gm, dm) = (self.gamma[k - l], self.delta[k - l]);
            ((gkk * gm + gkc * dm - back) / gkk, gcc * dm / gkk)
        };
        self.gamma.push(gamma);
        self.delta.push(delta);
        obs.observe(Probe::Tridiagonal { k, gamma, delta });
    }

    /// K4: new basis vector `v_{i−l+1}` and the three-term correction of
    /// `z_{i+1}` (and `ẑ_{i+1}`).
    pub fn update_bases(&mut self, obs: &mut dyn Observer) {
        let l = self.l;
        let i = self.i;
        let c = i + 1 - l;
        let k = i - l;
        let lo = self.g.first_row(c);

        let mut vc = self.v.take_next();
        vc.copy_from_slice(self.z.get(c));
        for j in lo..c {
            axpy(-self.g.get(j, c), self.v.get(j), &mut vc);
        }
        scale(1.0 / self.g.diag(c), &mut vc);
        self.v.commit(vc);
        obs.observe(Probe::Basis { k: c, v: self.v.get(c) });

        let gamma = self.gamma[k];
        let delta = self.delta[k];
        let dprev = if k > 0 { self.delta[k - 1] } else { 0.0 };
        three_term(&mut self.z, i, gamma, dprev, delta);
        if let Some(zh) = &mut self.zhat {
            three_term(zh, i, gamma, dprev, delta);
        }
        obs.observe(Probe::Auxiliary { k: i + 1, z: self.z.get(i + 1) });
    }

    /// K5: issues the reduction for column `i + 1`.
    ///
    /// Only `(z_{i+1}, v_{i+1−l})` and `(z_{i+1}, z_j)` for
    /// `j = i−l+2..=i+1` are computed; the older rows of that column equal
    /// entries of already finalized columns and are mirrored when the batch
    /// is consumed.
    pub fn queue_dot_products(&mut self) {
        let l = self.l;
        let col = self.i + 1;
        let first_row = col.saturating_sub(l);
        let src = match &self.zhat {
            Some(zh) => zh.get(col),
            None => self.z.get(col),
        };
        let values: Vec<f64> = (first_row..=col)
            .map(|r| {
                let basis = if r == first_row && col >= l { self.v.get(r) } else { self.z.get(r) };
                dot(src, basis)
            })
            .collect();
        self.last_fresh_dots = values.len();
        self.pending.push_back(DotBatch { tag: self.i, column: col, first_row, values });
    }

    /// K6: LU recurrences and the solution update `x_{i−l}`, followed by
    /// the stopping test on `|ζ_{i−l}|`.
    pub fn update_solution(&mut self, obs: &mut dyn Observer) -> StepOutcome {
        let k = self.i - self.l;
        let gamma = self.gamma[k];
        let delta = self.delta[k];
        if !(gamma.is_finite() && delta.is_finite()) {
            return StepOutcome::Unstable { iter: self.global_index(), kind: BreakdownKind::NonFinite };
        }
        if k == 0 {
            if gamma == 0.0 {
                return StepOutcome::Unstable { iter: self.global_index(), kind: BreakdownKind::Pivot };
            }
            self.eta.push(gamma);
            self.lambda.push(0.0);
            self.zeta.push(self.r0_norm);
            self.p.copy_from_slice(self.v.get(0));
            scale(1.0 / gamma, &mut self.p);
            return StepOutcome::Continue;
        }
        let dprev = self.delta[k - 1];
        let lambda = dprev / self.eta[k - 1];
        let eta = gamma - lambda * dprev;
        let zeta = -lambda * self.zeta[k - 1];
        if eta == 0.0 || !eta.is_finite() || !zeta.is_finite() {
            let kind = if eta == 0.0 { BreakdownKind::Pivot } else { BreakdownKind::NonFinite };
            return StepOutcome::Unstable { iter: self.global_index(), kind };
        }
        axpy(self.zeta[k - 1], &self.p, &mut self.x);
        let vk = self.v.get(k);
        for (p, v) in self.p.iter_mut().zip(vk) {
            *p = (v - dprev * *p) / eta;
        }
        self.eta.push(eta);
        self.lambda.push(lambda);
        self.zeta.push(zeta);
        self.new_solution = true;
        let global = self.global_index();
        obs.observe(Probe::Solution { k, global, x: &self.x, zeta, v: vk });
        if Float::abs(zeta) <= self.threshold {
            StepOutcome::Converged { iter: global, zeta: Float::abs(zeta) }
        } else {
            StepOutcome::Continue
        }
    }

    /// Completes a happy breakdown: `x_{k+1} = x_k + ζ_k p_k` is exact in
    /// the invariant Krylov space. Returns the explicitly computed residual
    /// norm (`M⁻¹`-norm when preconditioned) so the caller can verify it.
    pub fn finish_happy(&mut self) -> f64 {
        let k = self.zeta.len() - 1;
        axpy(self.zeta[k], &self.p, &mut self.x);
        self.zeta.push(0.0);
        self.new_solution = true;
        self.explicit_residual_norm()
    }

    /// `‖b − A x‖` in the norm `|ζ|` approximates.
    pub fn explicit_residual_norm(&mut self) -> f64 {
        self.a.apply(&self.x, &mut self.az);
        for (u, bi) in self.az.iter_mut().zip(self.b) {
            *u = bi - *u;
        }
        if self.zhat.is_some() {
            self.m.apply_unchecked(&self.az, &mut self.maz);
            Float::sqrt(dot(&self.az, &self.maz).max(0.0))
        } else {
            crate::vecops::norm(&self.az)
        }
    }

    /// Restarts from the newest iterate after a breakdown: recomputes the
    /// residual and reseeds windows, transform and histories.
    pub fn handle_breakdown(&mut self, obs: &mut dyn Observer) -> Result<(), Error> {
        self.base = self.global_index();
        self.restarts += 1;
        obs.observe(Probe::Restart { global: self.base });
        self.seed(obs)
    }

    pub fn depth(&self) -> usize {
        self.l
    }

    /// Outer iteration index of the next step.
    pub fn iteration(&self) -> usize {
        self.i
    }

    /// Cycle-local index of the newest iterate.
    pub fn solution_index(&self) -> usize {
        self.zeta.len().saturating_sub(1)
    }

    /// Index of the newest iterate counted across restarts.
    pub fn global_index(&self) -> usize {
        self.base + self.solution_index()
    }

    /// Whether the last step formed a new iterate.
    pub fn has_new_solution(&self) -> bool {
        self.new_solution
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn into_solution(self) -> Vec<f64> {
        self.x
    }

    pub fn r0_norm(&self) -> f64 {
        self.r0_norm
    }

    /// `|ζ_k|` of the newest iterate; `‖r_0‖` before the first update.
    pub fn residual_norm(&self) -> f64 {
        self.zeta.last().map_or(self.r0_norm, |z| Float::abs(*z))
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn transform(&self) -> &BandedTransform {
        &self.g
    }

    pub fn z_window(&self) -> &SlidingWindow {
        &self.z
    }

    pub fn v_window(&self) -> &SlidingWindow {
        &self.v
    }

    pub fn zhat_window(&self) -> Option<&SlidingWindow> {
        self.zhat.as_ref()
    }

    /// Vectors currently held by all windows.
    pub fn live_vectors(&self) -> usize {
        self.z.len() + self.v.len() + self.zhat.as_ref().map_or(0, SlidingWindow::len)
    }

    /// Reductions issued but not yet consumed.
    pub fn pending_reductions(&self) -> usize {
        self.pending.len()
    }

    /// Dot products computed by the last [`queue_dot_products`](Self::queue_dot_products).
    pub fn last_fresh_dots(&self) -> usize {
        self.last_fresh_dots
    }

    /// Argument of the newest transform square root.
    pub fn root_argument(&self) -> f64 {
        self.root_argument
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }
}

/// `w_{i+1} ← (w_{i+1} − γ w_i − δ_prev w_{i−1}) / δ` on the newest window slot.
fn three_term(w: &mut SlidingWindow, i: usize, gamma: f64, dprev: f64, delta: f64) {
    let mut head = w.take_newest();
    let wi = w.get(i);
    if dprev != 0.0 {
        let wm = w.get(i - 1);
        for ((h, a), b) in head.iter_mut().zip(wi).zip(wm) {
            *h = (*h - gamma * a - dprev * b) / delta;
        }
    } else {
        for (h, a) in head.iter_mut().zip(wi) {
            *h = (*h - gamma * a) / delta;
        }
    }
    w.restore_newest(head);
}
