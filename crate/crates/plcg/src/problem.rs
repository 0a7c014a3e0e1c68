//! Test problems: the 2D Poisson operator or a Matrix Market file, with
//! right-hand side `b = A x̂`, `x̂_i = 1/√n`.

use std::env;
use std::path::{Path, PathBuf};

use plcg_core::vecops::{dist, norm};
use plcg_core::{build_poisson_2d, gershgorin_interval, Preconditioner, SparseOperator, SpectralInterval};

use crate::mtx::read_matrix_market;
use crate::Error;

/// Overrides the directory searched for bare matrix file names.
pub const FIXTURE_DIR_VAR: &str = "PLCG_FIXTURE_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Poisson { nx: usize, ny: usize },
    MatrixMarket(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub a: SparseOperator,
    pub b: Vec<f64>,
}

/// Directory holding the bundled matrices.
pub fn fixture_dir() -> PathBuf {
    match env::var_os(FIXTURE_DIR_VAR) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"),
    }
}

/// `path` itself if it exists, otherwise the same name in [`fixture_dir`].
pub fn resolve_matrix(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    let candidate = fixture_dir().join(path);
    if candidate.exists() {
        candidate
    } else {
        path.to_path_buf()
    }
}

impl Problem {
    pub fn load(source: &Source) -> Result<Self, Error> {
        match source {
            Source::Poisson { nx, ny } => {
                let a = build_poisson_2d(*nx, *ny)?;
                Ok(Self::with_unit_solution(format!("poisson_{nx}x{ny}"), a))
            }
            Source::MatrixMarket(path) => {
                let path = resolve_matrix(path);
                let a = read_matrix_market(&path)?.operator;
                let name = path
                    .file_stem()
                    .map_or_else(|| "matrix".to_owned(), |s| s.to_string_lossy().into_owned());
                Ok(Self::with_unit_solution(name, a))
            }
        }
    }

    pub fn with_unit_solution(name: String, a: SparseOperator) -> Self {
        let n = a.n();
        let xhat = vec![1.0 / (n as f64).sqrt(); n];
        let b = a.spmv(&xhat).expect("x̂ has length n");
        Self { name, a, b }
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    /// `‖b − A x‖₂ / ‖b‖₂`.
    pub fn relative_residual(&self, x: &[f64]) -> Result<f64, Error> {
        let ax = self.a.spmv(x)?;
        Ok(dist(&self.b, &ax) / norm(&self.b))
    }

    /// Gershgorin interval of the preconditioned operator `M⁻¹A`.
    pub fn gershgorin(&self, m: &Preconditioner) -> Result<SpectralInterval, Error> {
        match m {
            Preconditioner::Identity => Ok(gershgorin_interval(&self.a)),
            Preconditioner::Jacobi { inv_diag } => {
                let a = &self.a;
                let mut values = a.values().to_vec();
                for (i, d) in inv_diag.iter().enumerate() {
                    for v in &mut values[a.row_ptr()[i]..a.row_ptr()[i + 1]] {
                        *v *= d;
                    }
                }
                let scaled =
                    SparseOperator::from_csr(a.n(), a.row_ptr().to_vec(), a.col_idx().to_vec(), values)?;
                Ok(gershgorin_interval(&scaled))
            }
        }
    }
}
