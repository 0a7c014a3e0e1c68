//! Reference solvers: textbook CG and single-stage pipelined CG.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::Error;
use crate::observe::{Observer, Probe};
use crate::precond::Preconditioner;
use crate::solver::{prepare, Breakdown, BreakdownKind, ConvergenceTrace, Event, Recorder, SolveConfig, Status};
use crate::sparse::SparseOperator;
use crate::vecops::{axpy, dot};

/// Preconditioned conjugate gradients.
///
/// The recorded norm is `‖r_k‖₂`, or `√(r_kᵀ M⁻¹ r_k)` with a preconditioner.
pub fn solve_cg(
    a: &SparseOperator,
    m: &Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolveConfig,
    obs: &mut dyn Observer,
) -> Result<ConvergenceTrace, Error> {
    let mut x = prepare(a, m, b, x0, cfg)?;
    let n = a.n();
    let mut rec = Recorder::new(a, m, b, cfg);

    let mut r = vec![0.0; n];
    a.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    m.apply_unchecked(&r, &mut z);
    let mut p = z.clone();
    let mut s = vec![0.0; n];
    let mut rz = dot(&r, &z);

    let mut k = 0;
    loop {
        let norm = Float::sqrt(rz.max(0.0));
        rec.push(k, norm, &x, Event::None);
        obs.observe(Probe::Cg { k, x: &x, r: &r });
        if rec.below_tol(norm) {
            rec.mark_last(Event::Converged);
            return Ok(rec.finish(x, Status::Converged, 0, Vec::new()));
        }
        if k == cfg.max_iter {
            return Ok(rec.finish(x, Status::MaxIterations, 0, Vec::new()));
        }
        a.apply(&p, &mut s);
        let ps = dot(&p, &s);
        if !(ps > 0.0) {
            return curvature_breakdown(rec, x, norm, ps, k);
        }
        let alpha = rz / ps;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &s, &mut r);
        m.apply_unchecked(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        k += 1;
    }
}

/// A non-positive curvature is an error unless the residual is already at
/// rounding level, where the search direction is noise (typically an
/// exhausted Krylov space in a fixed-length run). Then the run stops with
/// the current iterate.
fn curvature_breakdown(
    mut rec: Recorder<'_>,
    x: Vec<f64>,
    norm: f64,
    value: f64,
    k: usize,
) -> Result<ConvergenceTrace, Error> {
    if !(norm <= Float::sqrt(f64::EPSILON) * rec.b_norm) {
        return Err(Error::Definiteness(alloc::format!("non-positive curvature {value} at iteration {k}")));
    }
    rec.mark_last(Event::Breakdown);
    let breakdowns = alloc::vec![Breakdown { iter: k, kind: BreakdownKind::Curvature { value } }];
    Ok(rec.finish(x, Status::Breakdown, 0, breakdowns))
}

/// Pipelined CG with one fused reduction per iteration overlapped by one
/// SPMV (auxiliary recurrences for `w = Au`, `s = Ap`, `z = As`).
///
/// With a preconditioner the extra vectors `u = M⁻¹r`, `q = M⁻¹s` are
/// carried; the recorded norm is then `√(r_kᵀ u_k)`.
pub fn solve_pipecg(
    a: &SparseOperator,
    m: &Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolveConfig,
    obs: &mut dyn Observer,
) -> Result<ConvergenceTrace, Error> {
    let mut x = prepare(a, m, b, x0, cfg)?;
    let n = a.n();
    let pre = !m.is_identity();
    let mut rec = Recorder::new(a, m, b, cfg);

    let mut r = vec![0.0; n];
    a.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let (mut u, mut q, mut mv) = if pre {
        let mut u = vec![0.0; n];
        m.apply_unchecked(&r, &mut u);
        (u, vec![0.0; n], vec![0.0; n])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    let mut w = vec![0.0; n];
    a.apply(if pre { &u } else { &r }, &mut w);
    let mut nv = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut p = vec![0.0; n];

    let mut gamma_prev = 0.0;
    let mut alpha_prev = 0.0;
    let mut i = 0;
    loop {
        let uu = if pre { &u } else { &r };
        let gamma = dot(&r, uu);
        let delta = dot(&w, uu);
        let norm = Float::sqrt(gamma.max(0.0));
        rec.push(i, norm, &x, Event::None);
        if rec.below_tol(norm) {
            rec.mark_last(Event::Converged);
            return Ok(rec.finish(x, Status::Converged, 0, Vec::new()));
        }
        if i == cfg.max_iter {
            return Ok(rec.finish(x, Status::MaxIterations, 0, Vec::new()));
        }

        if pre {
            m.apply_unchecked(&w, &mut mv);
            a.apply(&mv, &mut nv);
        } else {
            a.apply(&w, &mut nv);
        }

        let (beta, curvature) = if i == 0 {
            (0.0, delta / gamma)
        } else {
            let beta = gamma / gamma_prev;
            (beta, delta / gamma - beta / alpha_prev)
        };
        // curvature = (p_i, A p_i) / γ_i
        if !(curvature > 0.0) {
            return curvature_breakdown(rec, x, norm, curvature, i);
        }
        let alpha = 1.0 / curvature;

        for j in 0..n {
            z[j] = nv[j] + beta * z[j];
            s[j] = w[j] + beta * s[j];
        }
        if pre {
            for j in 0..n {
                q[j] = mv[j] + beta * q[j];
                p[j] = u[j] + beta * p[j];
            }
        } else {
            for j in 0..n {
                p[j] = r[j] + beta * p[j];
            }
        }
        obs.observe(Probe::PipeCg { k: i, x: &x, r: &r, w: &w, p: &p, s: &s, z: &z, beta });

        axpy(alpha, &p, &mut x);
        axpy(-alpha, &s, &mut r);
        if pre {
            axpy(-alpha, &q, &mut u);
        }
        axpy(-alpha, &z, &mut w);

        gamma_prev = gamma;
        alpha_prev = alpha;
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::sparse::build_poisson_2d;
    use crate::vecops::{dist, norm};

    pub(crate) fn spd_with_condition(n: usize, kappa: f64, seed: u64) -> SparseOperator {
        // Q diag(λ) Qᵀ with a random orthogonal Q from Householder reflectors.
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let lambdas: Vec<f64> =
            (0..n).map(|i| kappa.powf(i as f64 / (n - 1) as f64)).collect();
        let mut d = DenseMatrix::from_diagonal(&lambdas);
        for _ in 0..3 {
            let mut h: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let hn = norm(&h);
            h.iter_mut().for_each(|v| *v /= hn);
            d = d.reflect_both(&h);
        }
        d.symmetrize();
        d.to_sparse()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = SparseOperator::identity(6);
        let b = [1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let cfg = SolveConfig::default();
        for solve in [solve_cg, solve_pipecg] {
            let t = solve(&a, &Preconditioner::Identity, &b, None, &cfg, &mut ()).unwrap();
            assert_eq!(t.status, Status::Converged);
            assert_eq!(t.iterations(), 1);
            assert!(dist(&t.x, &b) < 1e-15);
        }
    }

    #[test]
    fn zero_rhs_is_already_converged() {
        let a = build_poisson_2d(3, 3).unwrap();
        let t = solve_cg(&a, &Preconditioner::Identity, &[0.0; 9], None, &SolveConfig::default(), &mut ())
            .unwrap();
        assert_eq!(t.iterations(), 0);
        assert!(t.converged());
    }

    #[test]
    fn indefinite_operator_is_rejected() {
        let a = SparseOperator::from_diagonal(&[1.0, -1.0]);
        let cfg = SolveConfig::default();
        let b = [1.0, 1.0];
        assert!(matches!(
            solve_cg(&a, &Preconditioner::Identity, &b, None, &cfg, &mut ()),
            Err(Error::Definiteness(_))
        ));
        assert!(matches!(
            solve_pipecg(&a, &Preconditioner::Identity, &b, None, &cfg, &mut ()),
            Err(Error::Definiteness(_))
        ));
    }

    #[test]
    fn exhausted_krylov_space_stops_with_iterate() {
        // Nine-point stencil with a constant-generated RHS: the Krylov space
        // is exhausted after about 55 steps, after which the pipelined
        // curvature is rounding noise.
        let nx = 30;
        let mut trip = Vec::new();
        for i in 0..nx * nx {
            let (r, c) = ((i / nx) as isize, (i % nx) as isize);
            for (dr, dc) in [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1)] {
                let (rr, cc) = (r + dr, c + dc);
                if (0..nx as isize).contains(&rr) && (0..nx as isize).contains(&cc) {
                    let j = rr as usize * nx + cc as usize;
                    trip.push((i, j, if i == j { 8.0 } else { -1.0 }));
                }
            }
        }
        let a = SparseOperator::from_triplets(nx * nx, &trip, false).unwrap();
        let b = a.spmv(&vec![1.0; nx * nx]).unwrap();
        let t = solve_pipecg(&a, &Preconditioner::Identity, &b, None, &SolveConfig::fixed(100), &mut ()).unwrap();
        assert_eq!(t.status, Status::Breakdown);
        assert!(t.iterations() < 100);
        assert!(matches!(t.breakdowns[0].kind, BreakdownKind::Curvature { value } if value <= 0.0));
        assert_eq!(t.last().unwrap().event, Event::Breakdown);
        let rel = t.last().unwrap().true_norm.unwrap() / norm(&b);
        assert!(rel < 1e-10, "{rel:e} at {}", t.iterations());
    }

    #[test]
    fn pipecg_matches_cg_on_well_conditioned_spd() {
        let a = spd_with_condition(100, 1e3, 3);
        let b: Vec<f64> = (0..100).map(|i| 1.0 + (i as f64).sin()).collect();
        let cfg = SolveConfig::fixed(30);
        let cg = solve_cg(&a, &Preconditioner::Identity, &b, None, &cfg, &mut ()).unwrap();
        let pcg = solve_pipecg(&a, &Preconditioner::Identity, &b, None, &cfg, &mut ()).unwrap();
        for (c, p) in cg.records.iter().zip(&pcg.records) {
            let rel = (c.recursive_norm - p.recursive_norm).abs() / c.recursive_norm;
            assert!(rel < 1e-6, "k={} rel={rel}", c.iter);
        }
        let rel = dist(&cg.x, &pcg.x) / norm(&cg.x);
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn preconditioned_variants_agree() {
        let a = build_poisson_2d(12, 9).unwrap();
        let d: Vec<f64> = (0..a.n()).map(|i| 1.0 + (i % 5) as f64).collect();
        let a = DenseMatrix::from_sparse(&a).scale_symmetric(&d).to_sparse();
        let m = Preconditioner::jacobi(&a).unwrap();
        let b = vec![1.0; a.n()];
        let cfg = SolveConfig::fixed(25);
        let cg = solve_cg(&a, &m, &b, None, &cfg, &mut ()).unwrap();
        let pcg = solve_pipecg(&a, &m, &b, None, &cfg, &mut ()).unwrap();
        for (c, p) in cg.records.iter().zip(&pcg.records) {
            let rel = (c.recursive_norm - p.recursive_norm).abs() / c.recursive_norm;
            assert!(rel < 1e-6, "k={} rel={rel}", c.iter);
        }
        let plain = solve_cg(&a, &Preconditioner::Identity, &b, None, &cfg, &mut ()).unwrap();
        assert!(cg.last().unwrap().true_norm < plain.last().unwrap().true_norm);
    }

    #[test]
    fn cg_energy_error_decreases() {
        let a = build_poisson_2d(15, 15).unwrap();
        let d = DenseMatrix::from_sparse(&a);
        let b: Vec<f64> = (0..a.n()).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let xstar = d.cholesky_solve(&b).unwrap();
        struct Energy<'a> {
            d: &'a DenseMatrix,
            xstar: &'a [f64],
            out: Vec<f64>,
        }
        impl Observer for Energy<'_> {
            fn observe(&mut self, p: Probe<'_>) {
                if let Probe::Cg { x, .. } = p {
                    let e: Vec<f64> = x.iter().zip(self.xstar).map(|(a, b)| a - b).collect();
                    self.out.push(dot(&e, &self.d.matvec(&e)).sqrt());
                }
            }
        }
        let mut obs = Energy { d: &d, xstar: &xstar, out: Vec::new() };
        solve_cg(&a, &Preconditioner::Identity, &b, None, &SolveConfig::fixed(60), &mut obs).unwrap();
        for w in obs.out.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) || w[1] < 1e-10, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn recursive_norm_tracks_true_residual_early() {
        let a = build_poisson_2d(20, 20).unwrap();
        let b = vec![1.0; a.n()];
        let t = solve_pipecg(&a, &Preconditioner::Identity, &b, None, &SolveConfig::fixed(20), &mut ())
            .unwrap();
        for r in &t.records {
            let tr = r.true_norm.unwrap();
            assert!((r.recursive_norm - tr).abs() < 1e-9 * tr);
        }
    }
}
