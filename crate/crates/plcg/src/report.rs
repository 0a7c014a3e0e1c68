//! CSV emitters. Floats are written in shortest round-trip scientific
//! notation, so identical runs give byte-identical files.

use std::io::Write;

use plcg_core::diagnostics::GapTrace;
use plcg_core::perf::{Kernel, ScheduleTimeline};
use plcg_core::{ConvergenceTrace, Status};

use crate::Error;

pub(crate) fn float(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIterations => "max_iterations",
        Status::Breakdown => "breakdown",
    }
}

/// One row per recorded iterate, then a `total` row carrying the final
/// norms and `iterations=<k> restarts=<r> status=<s>` in the event column.
pub fn write_trace<W: Write>(trace: &ConvergenceTrace, w: W) -> Result<(), Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iter", "zeta_abs", "true_resid", "event"])?;
    for r in &trace.records {
        out.write_record([r.iter.to_string(), float(r.recursive_norm.abs()), opt(r.true_norm), r.event.as_str().into()])?;
    }
    let last = trace.last();
    out.write_record([
        "total".to_owned(),
        opt(last.map(|r| r.recursive_norm.abs())),
        opt(last.and_then(|r| r.true_norm)),
        format!("iterations={} restarts={} status={}", trace.iterations(), trace.restarts, status_name(trace.status)),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn write_gaps<W: Write>(gaps: &GapTrace, w: W) -> Result<(), Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "residual_gap", "basis_gap", "ginv_max", "g_max"])?;
    for r in &gaps.rows {
        out.write_record([r.k.to_string(), opt(r.residual_gap), opt(r.basis_gap), opt(r.ginv_max), opt(r.g_max)])?;
    }
    out.flush()?;
    Ok(())
}

/// Kernel events; `idle` is the wait that preceded the event (only ever
/// nonzero on K2, which consumes a reduction).
pub fn write_timeline<W: Write>(tl: &ScheduleTimeline, w: W) -> Result<(), Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "kernel", "start", "end", "idle"])?;
    for e in &tl.events {
        let idle = if e.kernel == Kernel::K2 { tl.idle[e.iteration] } else { 0.0 };
        out.write_record([e.iteration.to_string(), e.kernel.name().into(), float(e.start), float(e.end), float(idle)])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub solver: String,
    pub iterations: usize,
    pub relative_residual: f64,
    pub status: Status,
    pub restarts: usize,
}

pub fn write_compare<W: Write>(rows: &[CompareRow], w: W) -> Result<(), Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["solver", "iterations", "relative_residual", "status", "restarts"])?;
    for r in rows {
        out.write_record([
            r.solver.clone(),
            r.iterations.to_string(),
            float(r.relative_residual),
            status_name(r.status).into(),
            r.restarts.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupRow {
    pub l: usize,
    pub cg_time: f64,
    pub plcg_time: f64,
    pub speedup: f64,
    pub makespan: f64,
    pub idle: f64,
}

pub fn write_speedup<W: Write>(rows: &[SpeedupRow], w: W) -> Result<(), Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["l", "cg_time", "plcg_time", "speedup", "makespan", "idle"])?;
    for r in rows {
        out.write_record([
            r.l.to_string(),
            float(r.cg_time),
            float(r.plcg_time),
            float(r.speedup),
            float(r.makespan),
            float(r.idle),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use plcg_core::{Event, TraceRecord};

    #[test]
    fn trace_layout() {
        let trace = ConvergenceTrace {
            records: vec![
                TraceRecord { iter: 0, recursive_norm: 2.0, true_norm: Some(2.0), event: Event::None },
                TraceRecord { iter: 1, recursive_norm: -0.5, true_norm: None, event: Event::Converged },
            ],
            x: vec![],
            status: Status::Converged,
            restarts: 0,
            breakdowns: vec![],
            b_norm: 2.0,
        };
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,zeta_abs,true_resid,event\n0,2e0,2e0,none\n1,5e-1,,converged\n\
             total,5e-1,,iterations=1 restarts=0 status=converged\n"
        );
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 4.47e-15, f64::MAX, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
    }
}
