//! Per-iteration cost model and an event replay of the overlap schedule.
//!
//! Times are in arbitrary units. Vector work is counted in multiples of
//! `n · t_flop`; SPMV (including the preconditioner) and global reductions
//! have their own costs. The p(l)-GMRES figures exclude the final
//! least-squares solve and solution assembly.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::Error;

/// Latency of one global reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Latency {
    Constant(f64),
    /// `base + per_level · log2(N)` for a reduction tree over `N` nodes.
    Tree { base: f64, per_level: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub t_spmv: f64,
    pub glred: Latency,
    pub t_flop: f64,
    /// Local vector length.
    pub n: usize,
    /// Node count `N`.
    pub nodes: usize,
}

impl CostModel {
    /// Constant-latency model with no vector work.
    pub fn new(t_spmv: f64, t_glred: f64) -> Self {
        Self { t_spmv, glred: Latency::Constant(t_glred), t_flop: 0.0, n: 1, nodes: 1 }
    }

    pub fn t_glred(&self) -> f64 {
        match self.glred {
            Latency::Constant(t) => t,
            Latency::Tree { base, per_level } => base + per_level * Float::log2(self.nodes.max(1) as f64),
        }
    }

    fn flops(&self, count: f64) -> f64 {
        count * self.n as f64 * self.t_flop
    }

    pub fn validate(&self) -> Result<(), Error> {
        let ok = [self.t_spmv, self.t_glred(), self.t_flop].iter().all(|t| *t >= 0.0 && t.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Argument("costs must be finite and non-negative".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cg,
    PipeCg,
    Plcg(usize),
    /// Depth `l` at iteration index `i`.
    PlGmres { l: usize, i: usize },
}

/// Modeled time of one iteration.
pub fn iteration_time(method: Method, cm: &CostModel) -> f64 {
    let (g, s) = (cm.t_glred(), cm.t_spmv);
    match method {
        Method::Cg => 2.0 * g + s + cm.flops(10.0),
        Method::PipeCg => g.max(s) + cm.flops(16.0),
        Method::Plcg(l) => (g / l as f64).max(s) + cm.flops((6 * l + 10) as f64),
        Method::PlGmres { l, i } => {
            (g / l as f64).max(s) + cm.flops(6.0 * i as f64 - 4.0 * l as f64 + 8.0)
        }
    }
}

/// CG time over p(l)-CG time per iteration.
pub fn predicted_speedup(l: usize, cm: &CostModel) -> f64 {
    iteration_time(Method::Cg, cm) / iteration_time(Method::Plcg(l), cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    K1,
    K2,
    K3,
    K4,
    K5,
    K6,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Self::K1 => "K1",
            Self::K2 => "K2",
            Self::K3 => "K3",
            Self::K4 => "K4",
            Self::K5 => "K5",
            Self::K6 => "K6",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEvent {
    pub iteration: usize,
    pub kernel: Kernel,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionRecord {
    pub initiated_at_iter: usize,
    pub initiated_at_time: f64,
    pub completes_at_time: f64,
    pub consumed_at_iter: Option<usize>,
    /// Start of the consuming kernel (after any wait).
    pub consumed_at_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScheduleTimeline {
    pub events: Vec<KernelEvent>,
    pub reductions: Vec<ReductionRecord>,
    /// Time spent waiting for a reduction, per iteration.
    pub idle: Vec<f64>,
    pub makespan: f64,
}

impl ScheduleTimeline {
    pub fn total_idle(&self) -> f64 {
        self.idle.iter().sum()
    }

    /// Every consumed reduction had completed before its consumer started.
    pub fn is_causal(&self) -> bool {
        self.reductions.iter().all(|r| match r.consumed_at_time {
            Some(t) => r.completes_at_time <= t,
            None => true,
        })
    }
}

/// Per-kernel vector work of p(l)-CG, in units of `n`: basis updates,
/// local dot products and the solution update. Sums to `6l + 10`.
fn kernel_flops(l: usize) -> (f64, f64, f64) {
    ((4 * l + 4) as f64, (2 * l + 2) as f64, 4.0)
}

/// Replays `iters` outer iterations of p(l)-CG on one node.
///
/// Each iteration runs K1; from iteration `l` on it waits for the
/// reduction issued `l` iterations earlier, then runs K2–K4. K5 computes the
/// local dot products and issues a reduction that completes `t_glred`
/// later; K6 follows immediately. Scalar kernels K2/K3 take no time.
pub fn simulate_schedule(l: usize, iters: usize, cm: &CostModel) -> Result<ScheduleTimeline, Error> {
    cm.validate()?;
    if l == 0 || iters < l + 1 {
        return Err(Error::Argument(alloc::format!("need l ≥ 1 and iters ≥ l + 1, got l = {l}, iters = {iters}")));
    }
    let (f4, f5, f6) = kernel_flops(l);
    let (d4, d5, d6) = (cm.flops(f4), cm.flops(f5), cm.flops(f6));
    let glred = cm.t_glred();
    let mut tl = ScheduleTimeline::default();
    let mut t = 0.0;
    let push = |tl: &mut ScheduleTimeline, iteration, kernel, start: f64, dur: f64| {
        tl.events.push(KernelEvent { iteration, kernel, start, end: start + dur });
        start + dur
    };
    for i in 0..iters {
        t = push(&mut tl, i, Kernel::K1, t, cm.t_spmv);
        let mut idle = 0.0;
        if i >= l {
            let red = &mut tl.reductions[i - l];
            if red.completes_at_time > t {
                idle = red.completes_at_time - t;
                t = red.completes_at_time;
            }
            red.consumed_at_iter = Some(i);
            red.consumed_at_time = Some(t);
            t = push(&mut tl, i, Kernel::K2, t, 0.0);
            t = push(&mut tl, i, Kernel::K3, t, 0.0);
            t = push(&mut tl, i, Kernel::K4, t, d4);
        }
        tl.idle.push(idle);
        t = push(&mut tl, i, Kernel::K5, t, d5);
        tl.reductions.push(ReductionRecord {
            initiated_at_iter: i,
            initiated_at_time: t,
            completes_at_time: t + glred,
            consumed_at_iter: None,
            consumed_at_time: None,
        });
        if i >= l {
            t = push(&mut tl, i, Kernel::K6, t, d6);
        }
    }
    tl.makespan = t;
    Ok(tl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_arithmetic() {
        let cm = CostModel::new(1.0, 3.0);
        assert_eq!(iteration_time(Method::Cg, &cm), 7.0);
        assert_eq!(iteration_time(Method::Plcg(3), &cm), 1.0);
        assert_eq!(predicted_speedup(3, &cm), 7.0);
        assert_eq!(iteration_time(Method::PipeCg, &cm), 3.0);
        let cm = CostModel { t_flop: 0.5, n: 2, ..CostModel::new(1.0, 3.0) };
        assert_eq!(iteration_time(Method::Cg, &cm), 17.0);
        assert_eq!(iteration_time(Method::PipeCg, &cm), 19.0);
        assert_eq!(iteration_time(Method::Plcg(2), &cm), 1.5 + 22.0);
        assert_eq!(iteration_time(Method::PlGmres { l: 2, i: 5 }, &cm), 1.5 + 30.0);
    }

    #[test]
    fn speedup_examples() {
        for l in 1..=8 {
            let cm = CostModel::new(1.0, l as f64);
            assert_eq!(predicted_speedup(l, &cm), (2 * l + 1) as f64);
        }
        assert_eq!(predicted_speedup(1, &CostModel::new(1.0, 1.0)), 3.0);
        assert_eq!(predicted_speedup(2, &CostModel::new(1.0, 2.0)), 5.0);
        let cm = CostModel::new(1.0, 4.0);
        assert_eq!(predicted_speedup(1000, &cm), 9.0);
    }

    #[test]
    fn saturated_depth_is_irrelevant() {
        let cm = CostModel::new(2.0, 1.5);
        let t1 = iteration_time(Method::Plcg(1), &cm);
        for l in 2..6 {
            assert_eq!(iteration_time(Method::Plcg(l), &cm), t1);
        }
    }

    #[test]
    fn tree_latency() {
        let cm = CostModel { glred: Latency::Tree { base: 1.0, per_level: 0.5 }, nodes: 16, ..CostModel::new(1.0, 0.0) };
        assert_eq!(cm.t_glred(), 3.0);
    }

    #[test]
    fn no_latency_no_idle() {
        let cm = CostModel { t_flop: 0.25, n: 4, ..CostModel::new(1.0, 0.0) };
        let l = 2;
        let iters = 10;
        let tl = simulate_schedule(l, iters, &cm).unwrap();
        assert_eq!(tl.total_idle(), 0.0);
        let (f4, f5, f6) = kernel_flops(l);
        let fill = l as f64 * (1.0 + f5);
        let steady = (iters - l) as f64 * (1.0 + f4 + f5 + f6);
        assert_eq!(tl.makespan, fill + steady);
    }

    #[test]
    fn perfect_overlap() {
        for l in 1..6 {
            let cm = CostModel::new(1.0, l as f64);
            let tl = simulate_schedule(l, 20 * l, &cm).unwrap();
            assert_eq!(tl.total_idle(), 0.0);
            assert_eq!(tl.makespan, (20 * l) as f64);
        }
    }

    #[test]
    fn latency_twice_the_overlap() {
        // Hand trace for l = 2, t_glred = 4, t_spmv = 1: reductions issued
        // at t = 1, 2 complete at 5, 6. Iteration 2 finishes K1 at 3 and
        // waits 2; iteration 3 finds reduction 1 ready at 6.
        let tl = simulate_schedule(2, 6, &CostModel::new(1.0, 4.0)).unwrap();
        assert_eq!(tl.idle, alloc::vec![0.0, 0.0, 2.0, 0.0, 2.0, 0.0]);
        assert_eq!(tl.makespan, 10.0);
        assert!(tl.is_causal());
    }

    #[test]
    fn kernel_order_within_iteration() {
        let tl = simulate_schedule(2, 5, &CostModel { t_flop: 0.1, n: 3, ..CostModel::new(1.0, 2.5) }).unwrap();
        let order: Vec<_> = tl.events.iter().filter(|e| e.iteration == 3).map(|e| e.kernel).collect();
        assert_eq!(order, [Kernel::K1, Kernel::K2, Kernel::K3, Kernel::K4, Kernel::K5, Kernel::K6]);
        for w in tl.events.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
        for r in &tl.reductions {
            if let Some(c) = r.consumed_at_iter {
                assert_eq!(c, r.initiated_at_iter + 2);
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(simulate_schedule(3, 3, &CostModel::new(1.0, 1.0)).is_err());
        assert!(simulate_schedule(0, 3, &CostModel::new(1.0, 1.0)).is_err());
        assert!(simulate_schedule(1, 3, &CostModel::new(-1.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn causal_and_close_to_closed_form(
            l in 1usize..6,
            spmv in 0.01f64..5.0,
            ratio in 0.0f64..10.0,
            mult in 10usize..40,
        ) {
            let cm = CostModel::new(spmv, ratio * spmv);
            let iters = mult * l;
            let tl = simulate_schedule(l, iters, &cm).unwrap();
            prop_assert!(tl.is_causal());
            let model = iteration_time(Method::Plcg(l), &cm);
            let per = tl.makespan / iters as f64;
            prop_assert!((per - model).abs() <= model * (2 * l) as f64 / iters as f64 + 1e-9 * model);
        }

        #[test]
        fn deeper_pipelines_are_never_slower(spmv in 0.1f64..2.0, ratio in 1.01f64..8.0) {
            let cm = CostModel::new(spmv, ratio * spmv);
            let iters = 600;
            let mut prev = f64::INFINITY;
            for l in 1..6 {
                let m = simulate_schedule(l, iters, &cm).unwrap().makespan;
                prop_assert!(m <= prev * (1.0 + 1e-12));
                prev = m;
            }
        }
    }
}
