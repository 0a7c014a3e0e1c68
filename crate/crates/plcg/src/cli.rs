//! Command-line front end: `solve`, `compare`, `perf` and `diagnose`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use plcg_core::diagnostics::{
    lemma41_bound, lemma_a1_check, CgGapMonitor, PlcgGapMonitor, Snapshots,
};
use plcg_core::perf::{iteration_time, simulate_schedule, CostModel, Latency, Method};
use plcg_core::{
    chebyshev_shifts, monomial_shifts, solve_cg, solve_pipecg, solve_plcg, solve_plgmres, user_shifts,
    ConvergenceTrace, LeastSquaresMode, Preconditioner, ShiftSet, SolveConfig, SpectralInterval, Status,
};

use crate::problem::{Problem, Source};
use crate::report::{self, CompareRow, SpeedupRow};
use crate::Error;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_BREAKDOWN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "plcg", version, about = "Deep-pipelined conjugate gradient experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one system and write its convergence trace.
    Solve(SolveArgs),
    /// Final relative residuals of several solvers at a fixed iteration count.
    Compare(CompareArgs),
    /// Cost model and overlap schedule replay.
    Perf(PerfArgs),
    /// Residual gap, basis gap and transform norm traces.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ProblemArgs {
    /// 5-point Poisson operator on an NX × NY grid.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    pub poisson: Option<Vec<usize>>,
    /// Matrix Market file; bare names are also looked up in the fixture directory.
    #[arg(long, value_name = "PATH")]
    pub mm: Option<PathBuf>,
}

impl ProblemArgs {
    pub fn source(&self) -> Source {
        match (&self.poisson, &self.mm) {
            (Some(dims), _) => Source::Poisson { nx: dims[0], ny: dims[1] },
            (None, Some(path)) => Source::MatrixMarket(path.clone()),
            (None, None) => unreachable!("clap requires one problem source"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Cg,
    Pcg,
    Plcg,
    Plgmres,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum PrecondKind {
    #[default]
    None,
    Jacobi,
}

/// `chebyshev LMIN LMAX`, `chebyshev-auto` (Gershgorin), `monomial` or
/// `list S1 .. Sl`.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSpec {
    Chebyshev(f64, f64),
    ChebyshevAuto,
    Monomial,
    List(Vec<f64>),
}

impl ShiftSpec {
    pub fn parse(words: &[String]) -> Result<Self, Error> {
        let nums = |ws: &[String]| -> Result<Vec<f64>, Error> {
            ws.iter()
                .map(|w| w.parse().map_err(|_| Error::Usage(format!("bad shift value `{w}`"))))
                .collect()
        };
        match words.split_first() {
            Some((kind, rest)) => match kind.as_str() {
                "chebyshev" => match nums(rest)?.as_slice() {
                    [lo, hi] => Ok(Self::Chebyshev(*lo, *hi)),
                    _ => Err(Error::Usage("`--shifts chebyshev` takes LMIN LMAX".into())),
                },
                "chebyshev-auto" if rest.is_empty() => Ok(Self::ChebyshevAuto),
                "monomial" if rest.is_empty() => Ok(Self::Monomial),
                "list" => Ok(Self::List(nums(rest)?)),
                other => Err(Error::Usage(format!("unknown shift choice `{other}`"))),
            },
            None => Ok(Self::ChebyshevAuto),
        }
    }

    pub fn resolve(&self, l: usize, problem: &Problem, m: &Preconditioner) -> Result<ShiftSet, Error> {
        if l == 0 {
            return Err(Error::Usage("pipeline depth must be at least 1".into()));
        }
        Ok(match self {
            Self::Chebyshev(lo, hi) => chebyshev_shifts(SpectralInterval::new(*lo, *hi)?, l)?,
            Self::ChebyshevAuto => chebyshev_shifts(problem.gershgorin(m)?, l)?,
            Self::Monomial => monomial_shifts(l),
            Self::List(s) if s.len() == l => user_shifts(s.clone()),
            Self::List(s) => {
                return Err(Error::Usage(format!("{} shifts given for depth {l}", s.len())));
            }
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Shift choice: chebyshev LMIN LMAX | chebyshev-auto | monomial | list S1 .. Sl
    #[arg(long, num_args = 1.., allow_negative_numbers = true, value_name = "SPEC")]
    pub shifts: Vec<String>,
    #[arg(long, value_enum, default_value_t = PrecondKind::None)]
    pub precond: PrecondKind,
    /// Restarts allowed after a breakdown.
    #[arg(long, default_value_t = 5)]
    pub max_restarts: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t = SolverKind::Plcg)]
    pub solver: SolverKind,
    /// Pipeline depth.
    #[arg(short = 'l', long = "depth", default_value_t = 1)]
    pub depth: usize,
    /// Relative tolerance; without it exactly `--maxit` iterations run.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub maxit: usize,
    /// Record ‖b − A x_k‖ at every iterate.
    #[arg(long)]
    pub true_residual: bool,
    /// Trace CSV (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated: cg, pcg, plcg-<l>, plgmres-<l>.
    #[arg(long, value_delimiter = ',', default_value = "cg,pcg,plcg-1,plcg-2,plcg-3,plcg-4,plcg-5")]
    pub solvers: Vec<String>,
    #[arg(long)]
    pub maxit: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PerfArgs {
    #[arg(long, default_value_t = 1.0)]
    pub t_spmv: f64,
    /// Constant reduction latency.
    #[arg(long, conflicts_with_all = ["glred_base", "glred_per_level"])]
    pub t_glred: Option<f64>,
    /// Tree latency `base + per_level · log2(nodes)`.
    #[arg(long, requires = "glred_per_level")]
    pub glred_base: Option<f64>,
    #[arg(long, requires = "glred_base")]
    pub glred_per_level: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub nodes: usize,
    #[arg(long, default_value_t = 0.0)]
    pub t_flop: f64,
    /// Local vector length multiplying the flop counts.
    #[arg(short, long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Writes `timeline_l<l>.csv` per depth into this directory.
    #[arg(long)]
    pub timeline_dir: Option<PathBuf>,
    /// Speedup CSV (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl PerfArgs {
    pub fn cost_model(&self) -> CostModel {
        let glred = match (self.glred_base, self.glred_per_level) {
            (Some(base), Some(per_level)) => Latency::Tree { base, per_level },
            _ => Latency::Constant(self.t_glred.unwrap_or(self.t_spmv)),
        };
        CostModel { t_spmv: self.t_spmv, glred, t_flop: self.t_flop, n: self.n, nodes: self.nodes }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, num_args = 1.., allow_negative_numbers = true, value_name = "SPEC")]
    pub shifts: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5")]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub maxit: usize,
    /// Also check the alternative construction of the transform up to column J.
    #[arg(long, value_name = "J")]
    pub alt_transform: Option<usize>,
    /// Also write the transform entry bound per depth.
    #[arg(long)]
    pub bound: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn preconditioner(kind: PrecondKind, problem: &Problem) -> Result<Preconditioner, Error> {
    Ok(match kind {
        PrecondKind::None => Preconditioner::Identity,
        PrecondKind::Jacobi => Preconditioner::jacobi(&problem.a)?,
    })
}

fn require_symmetric(problem: &Problem) -> Result<(), Error> {
    if problem.a.is_symmetric() {
        Ok(())
    } else {
        Err(Error::Usage(format!("{} is not symmetric", problem.name)))
    }
}

/// Maps a finished run to the process exit code.
pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_CONVERGED,
        Status::MaxIterations => EXIT_BUDGET,
        Status::Breakdown => EXIT_BREAKDOWN,
    }
}

#[allow(clippy::too_many_arguments)]
fn run_solver(
    solver: SolverKind,
    depth: usize,
    problem: &Problem,
    m: &Preconditioner,
    spec: &ShiftSpec,
    cfg: &SolveConfig,
) -> Result<ConvergenceTrace, Error> {
    let (a, b) = (&problem.a, problem.b.as_slice());
    if solver != SolverKind::Plgmres {
        require_symmetric(problem)?;
    }
    Ok(match solver {
        SolverKind::Cg => solve_cg(a, m, b, None, cfg, &mut ())?,
        SolverKind::Pcg => solve_pipecg(a, m, b, None, cfg, &mut ())?,
        SolverKind::Plcg => {
            let shifts = spec.resolve(depth, problem, m)?;
            solve_plcg(a, m, b, None, &shifts, cfg, &mut ())?
        }
        SolverKind::Plgmres => {
            if !m.is_identity() {
                return Err(Error::Usage("plgmres runs without a preconditioner".into()));
            }
            let shifts = spec.resolve(depth, problem, m)?;
            solve_plgmres(a, b, None, &shifts, cfg, LeastSquaresMode::Gmres)?.trace
        }
    })
}

fn config(tol: Option<f64>, maxit: usize, true_residual: bool, max_restarts: usize) -> SolveConfig {
    match tol {
        Some(tol) => SolveConfig { tol, max_iter: maxit, record_true_residual: true_residual, max_restarts },
        None => SolveConfig { record_true_residual: true_residual, max_restarts, ..SolveConfig::fixed(maxit) },
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, Error> {
    let problem = Problem::load(&args.run.problem.source())?;
    let m = preconditioner(args.run.precond, &problem)?;
    let spec = ShiftSpec::parse(&args.run.shifts)?;
    let cfg = config(args.tol, args.maxit, args.true_residual, args.run.max_restarts);
    let trace = run_solver(args.solver, args.depth, &problem, &m, &spec, &cfg)?;
    report::write_trace(&trace, sink(args.output.as_deref())?)?;
    Ok(exit_code(trace.status))
}

/// Parses `cg`, `pcg`, `plcg-<l>` or `plgmres-<l>`.
pub fn parse_solver(name: &str) -> Result<(SolverKind, usize), Error> {
    let bad = || Error::Usage(format!("unknown solver `{name}`"));
    match name {
        "cg" => return Ok((SolverKind::Cg, 0)),
        "pcg" => return Ok((SolverKind::Pcg, 0)),
        _ => {}
    }
    let (kind, l) = name.rsplit_once('-').ok_or_else(bad)?;
    let l: usize = l.parse().map_err(|_| bad())?;
    match kind {
        "plcg" => Ok((SolverKind::Plcg, l)),
        "plgmres" => Ok((SolverKind::Plgmres, l)),
        _ => Err(bad()),
    }
}

/// Runs every solver for exactly `maxit` iterations on the same problem.
pub fn compare(
    problem: &Problem,
    m: &Preconditioner,
    spec: &ShiftSpec,
    solvers: &[String],
    maxit: usize,
    max_restarts: usize,
) -> Result<Vec<CompareRow>, Error> {
    let cfg = config(None, maxit, false, max_restarts);
    solvers
        .iter()
        .map(|name| {
            let (kind, l) = parse_solver(name)?;
            let trace = run_solver(kind, l, problem, m, spec, &cfg)?;
            Ok(CompareRow {
                solver: name.clone(),
                iterations: trace.iterations(),
                relative_residual: problem.relative_residual(&trace.x)?,
                status: trace.status,
                restarts: trace.restarts,
            })
        })
        .collect()
}

pub fn cmd_compare(args: &CompareArgs) -> Result<i32, Error> {
    let problem = Problem::load(&args.run.problem.source())?;
    let m = preconditioner(args.run.precond, &problem)?;
    let spec = ShiftSpec::parse(&args.run.shifts)?;
    let rows = compare(&problem, &m, &spec, &args.solvers, args.maxit, args.run.max_restarts)?;
    report::write_compare(&rows, sink(args.output.as_deref())?)?;
    Ok(EXIT_CONVERGED)
}

pub fn cmd_perf(args: &PerfArgs) -> Result<i32, Error> {
    let cm = args.cost_model();
    cm.validate()?;
    if let Some(dir) = &args.timeline_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut rows = Vec::with_capacity(args.depths.len());
    for &l in &args.depths {
        if l == 0 {
            return Err(Error::Usage("depths must be at least 1".into()));
        }
        let tl = simulate_schedule(l, args.iters, &cm)?;
        if let Some(dir) = &args.timeline_dir {
            report::write_timeline(&tl, create(&dir.join(format!("timeline_l{l}.csv")))?)?;
        }
        let cg_time = iteration_time(Method::Cg, &cm);
        let plcg_time = iteration_time(Method::Plcg(l), &cm);
        rows.push(SpeedupRow {
            l,
            cg_time,
            plcg_time,
            speedup: cg_time / plcg_time,
            makespan: tl.makespan,
            idle: tl.total_idle(),
        });
    }
    report::write_speedup(&rows, sink(args.output.as_deref())?)?;
    Ok(EXIT_CONVERGED)
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<i32, Error> {
    let problem = Problem::load(&args.problem.source())?;
    require_symmetric(&problem)?;
    // Refuses sizes the snapshot machinery would not accept.
    Snapshots::new(problem.n(), args.maxit)?;
    let spec = ShiftSpec::parse(&args.shifts)?;
    let m = Preconditioner::Identity;
    let (a, b) = (&problem.a, problem.b.as_slice());
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = SolveConfig::fixed(args.maxit);

    let mut cg = CgGapMonitor::new(a, b);
    solve_cg(a, &m, b, None, &cfg, &mut cg)?;
    report::write_gaps(&cg.trace, create(&dir.join("gaps_cg.csv"))?)?;

    for &l in &args.depths {
        let shifts = spec.resolve(l, &problem, &m)?;
        let mut mon = PlcgGapMonitor::new(a, b, args.maxit + 1);
        solve_plcg(a, &m, b, None, &shifts, &cfg, &mut mon)?;
        report::write_gaps(&mon.trace, create(&dir.join(format!("gaps_l{l}.csv")))?)?;
        if args.bound {
            let g_max: Vec<f64> = mon.trace.rows.iter().filter_map(|r| r.g_max).collect();
            let rep = lemma41_bound(a, &shifts, &g_max)?;
            let mut out = csv::Writer::from_writer(create(&dir.join(format!("bound_l{l}.csv")))?);
            out.write_record(["k", "g_max", "bound", "estimated"])?;
            for (k, g, bound) in rep.rows {
                out.write_record([k.to_string(), report::float(g), report::float(bound), rep.estimated.to_string()])?;
            }
            out.flush()?;
        }
    }

    if let Some(j) = args.alt_transform {
        let mut out = csv::Writer::from_writer(create(&dir.join("alt_transform.csv"))?);
        out.write_record(["l", "j", "max_deviation"])?;
        for &l in &args.depths {
            let shifts = spec.resolve(l, &problem, &m)?;
            let dev = lemma_a1_check(a, b, &shifts, j)?;
            out.write_record([l.to_string(), j.to_string(), report::float(dev)])?;
        }
        out.flush()?;
    }
    Ok(EXIT_CONVERGED)
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: &Cli) -> Result<i32, Error> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Perf(a) => cmd_perf(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition() {
        Cli::command().debug_assert();
    }

    #[test]
    fn shift_specs() {
        let w = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
        assert_eq!(ShiftSpec::parse(&w("chebyshev 0 8")).unwrap(), ShiftSpec::Chebyshev(0.0, 8.0));
        assert_eq!(ShiftSpec::parse(&[]).unwrap(), ShiftSpec::ChebyshevAuto);
        assert_eq!(ShiftSpec::parse(&w("monomial")).unwrap(), ShiftSpec::Monomial);
        assert_eq!(ShiftSpec::parse(&w("list 1 -2.5")).unwrap(), ShiftSpec::List(vec![1.0, -2.5]));
        for bad in ["chebyshev 0", "chebyshev 0 x", "monomial 3", "leja", "list a"] {
            assert!(matches!(ShiftSpec::parse(&w(bad)), Err(Error::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn shift_resolution() {
        let p = Problem::load(&Source::Poisson { nx: 4, ny: 4 }).unwrap();
        let id = Preconditioner::Identity;
        let s = ShiftSpec::ChebyshevAuto.resolve(2, &p, &id).unwrap();
        let r = 2.0 * 2f64.sqrt();
        assert!((s.sigma()[0] - (4.0 + r)).abs() < 1e-12 && (s.sigma()[1] - (4.0 - r)).abs() < 1e-12);
        let jac = Preconditioner::jacobi(&p.a).unwrap();
        assert_eq!(ShiftSpec::ChebyshevAuto.resolve(1, &p, &jac).unwrap().sigma(), &[1.0]);
        assert!(ShiftSpec::List(vec![1.0]).resolve(2, &p, &id).is_err());
        assert!(ShiftSpec::Monomial.resolve(0, &p, &id).is_err());
    }

    #[test]
    fn solver_names() {
        assert_eq!(parse_solver("cg").unwrap(), (SolverKind::Cg, 0));
        assert_eq!(parse_solver("plcg-3").unwrap(), (SolverKind::Plcg, 3));
        assert_eq!(parse_solver("plgmres-2").unwrap(), (SolverKind::Plgmres, 2));
        for bad in ["plcg", "plcg-x", "gmres-1", ""] {
            assert!(parse_solver(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(Status::Converged), 0);
        assert_eq!(exit_code(Status::MaxIterations), 2);
        assert_eq!(exit_code(Status::Breakdown), 3);
    }

    #[test]
    fn default_run_is_fixed_length() {
        let cfg = config(None, 60, false, 5);
        assert_eq!(cfg.max_iter, 60);
        assert!(cfg.tol < 1e-300);
        assert_eq!(config(Some(1e-6), 10, true, 2).tol, 1e-6);
    }

    #[test]
    fn duplicate_solvers_agree() {
        let p = Problem::load(&Source::Poisson { nx: 12, ny: 12 }).unwrap();
        let names = ["plcg-2".to_owned(), "plcg-2".to_owned(), "pcg".to_owned(), "pcg".to_owned()];
        let rows = compare(&p, &Preconditioner::Identity, &ShiftSpec::ChebyshevAuto, &names, 10, 5).unwrap();
        assert_eq!(rows[0], rows[1]);
        assert_eq!(rows[2], rows[3]);
    }
}
