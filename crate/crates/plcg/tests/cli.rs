use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn plcg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plcg")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(csv: &str, row: &str, col: usize) -> f64 {
    let line = csv.lines().find(|l| l.starts_with(row)).unwrap();
    line.split(',').nth(col).unwrap().parse().unwrap()
}

#[test]
fn single_unknown_converges_at_first_update() {
    let out = plcg(&["solve", "--poisson", "1", "1", "--solver", "plcg", "-l", "1", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = stdout(&out);
    assert!(csv.contains("\n1,"), "{csv}");
    assert!(csv.lines().last().unwrap().contains("iterations=1 restarts=0 status=converged"));
}

#[test]
fn fixed_budget_exit_code() {
    let out = plcg(&["solve", "--mm", "gr_30_30.mtx", "--solver", "cg", "--maxit", "40", "--true-residual"]);
    assert_eq!(out.status.code(), Some(2));
    let csv = stdout(&out);
    assert!(csv.starts_with("iter,zeta_abs,true_resid,event\n"));
    assert_eq!(csv.lines().count(), 1 + 41 + 1);
    assert!(column(&csv, "total", 2) < column(&csv, "0,", 2) * 1e-3);
}

#[test]
fn gr_30_30_cg_row() {
    let out = plcg(&["solve", "--mm", "gr_30_30.mtx", "--solver", "cg", "--maxit", "60", "--true-residual"]);
    let csv = stdout(&out);
    let rel = column(&csv, "total", 2) / column(&csv, "0,", 2);
    assert!(rel < 2.8e-15 * 30.0 && rel > 2.8e-15 / 30.0, "{rel:e}");
}

#[test]
fn unrecovered_breakdown_exit_code() {
    let out = plcg(&[
        "solve", "--poisson", "200", "200", "-l", "3", "--shifts", "chebyshev", "0", "8.04", "--maxit", "3400",
        "--max-restarts", "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains(",breakdown\n"));
}

#[test]
fn usage_and_io_errors() {
    for args in [
        vec!["solve"],
        vec!["solve", "--poisson", "4"],
        vec!["solve", "--poisson", "4", "4", "--mm", "x.mtx"],
        vec!["solve", "--poisson", "4", "4", "--shifts", "leja"],
        vec!["solve", "--poisson", "4", "4", "--shifts", "list", "1", "2", "-l", "1"],
        vec!["solve", "--mm", "/nonexistent/none.mtx"],
        vec!["compare", "--poisson", "4", "4", "--maxit", "5", "--solvers", "bicg"],
        vec!["frobnicate"],
    ] {
        let out = plcg(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(plcg(&["--help"]).status.code(), Some(0));
}

#[test]
fn solve_is_byte_deterministic() {
    let args = ["solve", "--poisson", "30", "30", "-l", "2", "--maxit", "80", "--true-residual"];
    let (a, b) = (plcg(&args), plcg(&args));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn output_file_and_preconditioner() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let out = plcg(&[
        "solve", "--poisson", "20", "20", "--precond", "jacobi", "-l", "2", "--tol", "1e-8", "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = fs::read_to_string(&path).unwrap();
    assert!(csv.lines().last().unwrap().ends_with("status=converged"));
}

#[test]
fn compare_table() {
    let out = plcg(&["compare", "--mm", "gr_30_30.mtx", "--maxit", "60", "--solvers", "cg,cg,pcg,plcg-1,plgmres-1"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "solver,iterations,relative_residual,status,restarts");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[1], lines[2]);
    for line in &lines[1..] {
        let rel: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(rel < 1e-11, "{line}");
    }
}

#[test]
fn perf_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = plcg(&[
        "perf", "--t-spmv", "1", "--t-glred", "2", "--depths", "1,2", "--iters", "20", "--timeline-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert_eq!(csv.lines().next().unwrap(), "l,cg_time,plcg_time,speedup,makespan,idle");
    // l = 2 with t_glred = 2 t_spmv: speedup 5, no idle time.
    assert_eq!(csv.lines().nth(2).unwrap(), "2,5e0,1e0,5e0,2e1,0e0");
    let tl = fs::read_to_string(dir.path().join("timeline_l1.csv")).unwrap();
    assert!(tl.starts_with("iteration,kernel,start,end,idle\n0,K1,0e0,1e0,0e0\n"));
    assert!(Path::new(&dir.path().join("timeline_l2.csv")).exists());
    assert_eq!(plcg(&["perf", "--t-spmv", "-1"]).status.code(), Some(1));
}

#[test]
fn diagnose_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = plcg(&[
        "diagnose", "--poisson", "30", "30", "--depths", "1,2", "--maxit", "60", "--alt-transform", "15", "--bound",
        "--out-dir", d,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["gaps_cg.csv", "gaps_l1.csv", "gaps_l2.csv", "bound_l1.csv", "bound_l2.csv", "alt_transform.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let gaps = fs::read_to_string(dir.path().join("gaps_l2.csv")).unwrap();
    assert!(gaps.starts_with("k,residual_gap,basis_gap,ginv_max,g_max\n"));
    let a1 = fs::read_to_string(dir.path().join("alt_transform.csv")).unwrap();
    for line in a1.lines().skip(1) {
        let dev: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(dev < 1e-8, "{line}");
    }
}

#[test]
fn diagnose_identity_has_small_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("id.mtx");
    fs::write(&mtx, "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n").unwrap();
    let out = plcg(&[
        "diagnose", "--mm", mtx.to_str().unwrap(), "--depths", "1", "--maxit", "5", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let gaps = fs::read_to_string(dir.path().join("gaps_l1.csv")).unwrap();
    for line in gaps.lines().skip(1) {
        if let Some(g) = line.split(',').nth(1).filter(|s| !s.is_empty()) {
            assert!(g.parse::<f64>().unwrap() < 1e-15, "{line}");
        }
    }
}

#[test]
fn diagnose_refuses_oversized_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = plcg(&["diagnose", "--poisson", "10", "10", "--maxit", "501", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("snapshot"));
}
