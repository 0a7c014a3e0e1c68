//! Compressed-row sparse operators and problem generators.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{check_len, Error};

/// Square sparse matrix in compressed-row layout.
///
/// Column indices within a row are sorted and unique. Symmetric inputs are
/// stored with both triangles so SPMV is a plain row sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Assembles from coordinate triplets (0-based). Duplicates are summed.
    ///
    /// With `mirror` set, every off-diagonal entry is also stored at its
    /// transposed position, which is how symmetric storage is expanded.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, f64)],
        mirror: bool,
    ) -> Result<Self, Error> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len() * 2);
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::Argument(alloc::format!(
                    "entry ({i}, {j}) outside a {n}x{n} matrix"
                )));
            }
            entries.push((i, j, v));
            if mirror && i != j {
                entries.push((j, i, v));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    /// Builds directly from CSR arrays, validating the layout.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, Error> {
        check_len(n + 1, row_ptr.len())?;
        check_len(col_idx.len(), values.len())?;
        if row_ptr[0] != 0 || row_ptr[n] != col_idx.len() {
            return Err(Error::Argument("row pointers do not span the entries".into()));
        }
        for i in 0..n {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::Argument("row pointers decrease".into()));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.iter().any(|&j| j >= n) || cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Argument(alloc::format!(
                    "row {i} has unsorted or out-of-range columns"
                )));
            }
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries (both triangles for symmetric matrices).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Stored entry `a_ij`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    /// Diagonal entries; `None` where no entry is stored.
    pub fn diagonal(&self) -> Vec<Option<f64>> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.binary_search(&i).ok().map(|p| vals[p])
            })
            .collect()
    }

    /// Largest `|a_ij − a_ji|` over stored entries; missing partners count as
    /// zero, so a structurally asymmetric matrix reports its stray values.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max(Float::abs(v - self.get(j, i)));
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.max_asymmetry() == 0.0
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x` into caller storage.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), Error> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        self.apply(x, y);
        Ok(())
    }

    /// Unchecked row sweep for solvers that validated dimensions up front.
    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert!(x.len() == self.n && y.len() == self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut s = 0.0;
            for (&j, &a) in self.col_idx[r.clone()].iter().zip(&self.values[r]) {
                s += a * x[j];
            }
            *yi = s;
        }
    }

    /// `‖b − A x‖₂`, using `work` as scratch.
    pub(crate) fn residual_norm(&self, b: &[f64], x: &[f64], work: &mut [f64]) -> f64 {
        self.apply(x, work);
        crate::vecops::dist(b, work)
    }
}

/// 5-point finite-difference Laplacian on an `nx × ny` grid with homogeneous
/// Dirichlet boundaries: 4 on the diagonal, −1 for each grid neighbour.
///
/// Unknowns are numbered row by row, `k = iy·nx + ix`.
pub fn build_poisson_2d(nx: usize, ny: usize) -> Result<SparseOperator, Error> {
    if nx == 0 || ny == 0 {
        return Err(Error::Argument("grid dimensions must be positive".into()));
    }
    let n = nx.checked_mul(ny).ok_or(Error::Size)?;
    n.checked_mul(5).ok_or(Error::Size)?;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(5 * n);
    let mut values = Vec::with_capacity(5 * n);
    row_ptr.push(0);
    for iy in 0..ny {
        for ix in 0..nx {
            let k = iy * nx + ix;
            if iy > 0 {
                col_idx.push(k - nx);
                values.push(-1.0);
            }
            if ix > 0 {
                col_idx.push(k - 1);
                values.push(-1.0);
            }
            col_idx.push(k);
            values.push(4.0);
            if ix + 1 < nx {
                col_idx.push(k + 1);
                values.push(-1.0);
            }
            if iy + 1 < ny {
                col_idx.push(k + nx);
                values.push(-1.0);
            }
            row_ptr.push(col_idx.len());
        }
    }
    Ok(SparseOperator { n, row_ptr, col_idx, values })
}

/// Interval assumed to contain the spectrum; used to place shifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInterval {
    lambda_min: f64,
    lambda_max: f64,
}

impl SpectralInterval {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self, Error> {
        if !(lambda_min >= 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
            return Err(Error::Argument(alloc::format!(
                "invalid spectral interval [{lambda_min}, {lambda_max}]"
            )));
        }
        Ok(Self { lambda_min, lambda_max })
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lambda_min <= t && t <= self.lambda_max
    }
}

/// Gershgorin bounds, with the lower end clamped at zero.
///
/// A degenerate interval (e.g. the identity) is widened by
/// `1e-8·max(1, |λ|)` on both sides so shifts remain well defined.
pub fn gershgorin_interval(a: &SparseOperator) -> SpectralInterval {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..a.n() {
        let (cols, vals) = a.row(i);
        let mut diag = 0.0;
        let mut radius = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag += v;
            } else {
                radius += Float::abs(v);
            }
        }
        lo = lo.min(diag - radius);
        hi = hi.max(diag + radius);
    }
    if a.n() == 0 {
        lo = 0.0;
        hi = 0.0;
    }
    let lo = lo.max(0.0);
    let hi = hi.max(lo);
    if hi > lo {
        return SpectralInterval { lambda_min: lo, lambda_max: hi };
    }
    let w = 1e-8 * Float::abs(hi).max(1.0);
    SpectralInterval { lambda_min: (lo - w).max(0.0), lambda_max: hi + w }
}
