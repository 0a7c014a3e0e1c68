//! Small dense linear algebra used by the oracles and by the reference
//! GMRES least-squares solve. Not tuned for speed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};
use num_traits::Float;

use crate::error::Error;
use crate::sparse::SparseOperator;
use crate::vecops::dot;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_sparse(a: &SparseOperator) -> Self {
        let n = a.n();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Sparse copy of a square matrix, dropping exact zeros.
    pub fn to_sparse(&self) -> SparseOperator {
        assert_eq!(self.rows, self.cols);
        let mut t = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        SparseOperator::from_triplets(self.rows, &t, false).expect("indices in range")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Leading `r × c` block.
    pub fn block(&self, r: usize, c: usize) -> Self {
        let mut m = Self::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = self[(i, j)];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], x)).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    m.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// `self − σ I`.
    pub fn shifted(&self, sigma: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] -= sigma;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        crate::vecops::max_abs(&self.data)
    }

    /// `D A D` for a diagonal `D`.
    pub fn scale_symmetric(&self, d: &[f64]) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] *= d[i] * d[j];
            }
        }
        m
    }

    /// `H A H` with the Householder reflector `H = I − 2hhᵀ` (`‖h‖ = 1`).
    pub fn reflect_both(&self, h: &[f64]) -> Self {
        let n = self.rows;
        let ah = self.matvec(h);
        let hah = dot(h, &ah);
        let mut m = self.clone();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += -2.0 * h[i] * ah[j] - 2.0 * ah[i] * h[j] + 4.0 * hah * h[i] * h[j];
            }
        }
        m
    }

    /// Replaces `A` by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    /// Solves `A x = b` for SPD `A` by Cholesky.
    pub fn cholesky_solve(&self, b: &[f64]) -> Result<Vec<f64>, Error> {
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::Definiteness(alloc::format!("Cholesky pivot {d} at {j}")));
            }
            let d = Float::sqrt(d);
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[(i, k)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= l[(k, i)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        Ok(y)
    }

    /// Solves a general square system by Gaussian elimination with partial
    /// pivoting.
    pub fn lu_solve(&self, b: &[f64]) -> Result<Vec<f64>, Error> {
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| Float::abs(a[(i, k)]).total_cmp(&Float::abs(a[(j, k)])))
                .expect("non-empty range");
            if a[(piv, k)] == 0.0 {
                return Err(Error::Argument(alloc::format!("singular matrix at column {k}")));
            }
            if piv != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = t;
                }
                x.swap(k, piv);
            }
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
                x[i] -= f * x[k];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= a[(i, j)] * x[j];
            }
            x[i] /= a[(i, i)];
        }
        Ok(x)
    }

    /// Inverse of an upper triangular matrix by column-wise back substitution.
    /// Returns `None` when a diagonal entry is zero.
    pub fn upper_triangular_inverse(&self) -> Option<Self> {
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for c in 0..n {
            for i in (0..=c).rev() {
                let d = self[(i, i)];
                if d == 0.0 {
                    return None;
                }
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in i + 1..=c {
                    s -= self[(i, k)] * inv[(k, c)];
                }
                inv[(i, c)] = s / d;
            }
        }
        Some(inv)
    }

    /// Eigenvalues of a symmetric matrix, ascending (Householder reduction to
    /// tridiagonal form followed by implicit QL).
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>, Error> {
        let (mut d, mut e) = self.householder_tridiagonal();
        tridiagonal_eigenvalues(&mut d, &mut e)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    fn householder_tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.rows;
        let mut a = self.clone();
        let mut e = vec![0.0; n];
        for k in 0..n.saturating_sub(2) {
            let x: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
            let xn = crate::vecops::norm(&x);
            if xn == 0.0 {
                continue;
            }
            let alpha = if x[0] > 0.0 { -xn } else { xn };
            let mut v = x;
            v[0] -= alpha;
            let vn = crate::vecops::norm(&v);
            if vn == 0.0 {
                e[k] = alpha;
                continue;
            }
            v.iter_mut().for_each(|t| *t /= vn);
            let m = n - k - 1;
            let p: Vec<f64> =
                (0..m).map(|i| (0..m).map(|j| a[(k + 1 + i, k + 1 + j)] * v[j]).sum()).collect();
            let kk = dot(&v, &p);
            let q: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kk * vi).collect();
            for i in 0..m {
                for j in 0..m {
                    a[(k + 1 + i, k + 1 + j)] -= 2.0 * (v[i] * q[j] + q[i] * v[j]);
                }
            }
            e[k] = alpha;
            for i in k + 1..n {
                a[(i, k)] = 0.0;
                a[(k, i)] = 0.0;
            }
        }
        if n >= 2 {
            e[n - 2] = a[(n - 1, n - 2)];
        }
        let d = (0..n).map(|i| a[(i, i)]).collect();
        (d, e)
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i+1`; `e[n−1]` is ignored).
/// Results overwrite `d`, unsorted.
pub fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<(), Error> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = Float::abs(d[m]) + Float::abs(d[m + 1]);
                if Float::abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::Argument("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = Float::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { Float::abs(r) } else { -Float::abs(r) });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = Float::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::build_poisson_2d;
    use core::f64::consts::PI;

    #[test]
    fn poisson_eigenvalues_closed_form() {
        let (nx, ny) = (7, 5);
        let a = DenseMatrix::from_sparse(&build_poisson_2d(nx, ny).unwrap());
        let got = a.symmetric_eigenvalues().unwrap();
        let mut want = Vec::new();
        for i in 1..=nx {
            for j in 1..=ny {
                let s = |k: usize, m: usize| (k as f64 * PI / (2.0 * (m + 1) as f64)).sin().powi(2);
                want.push(4.0 * (s(i, nx) + s(j, ny)));
            }
        }
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn small_eigenvalue_cases() {
        assert_eq!(DenseMatrix::identity(3).symmetric_eigenvalues().unwrap(), vec![1.0; 3]);
        let mut m = DenseMatrix::zeros(2, 2);
        m[(0, 0)] = 2.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(1, 1)] = 2.0;
        let ev = m.symmetric_eigenvalues().unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
        assert!(DenseMatrix::zeros(0, 0).symmetric_eigenvalues().unwrap().is_empty());
    }

    #[test]
    fn triangular_inverse() {
        let mut g = DenseMatrix::identity(2);
        g[(0, 1)] = 2.0;
        let inv = g.upper_triangular_inverse().unwrap();
        assert_eq!(inv[(0, 1)], -2.0);
        assert_eq!(inv.max_abs(), 2.0);
        g[(1, 1)] = 0.0;
        assert!(g.upper_triangular_inverse().is_none());
    }

    #[test]
    fn direct_solvers() {
        let a = DenseMatrix::from_sparse(&build_poisson_2d(4, 4).unwrap());
        let x: Vec<f64> = (0..16).map(|i| i as f64 - 3.0).collect();
        let b = a.matvec(&x);
        for y in [a.cholesky_solve(&b).unwrap(), a.lu_solve(&b).unwrap()] {
            assert!(crate::vecops::dist(&x, &y) < 1e-12);
        }
        let mut p = DenseMatrix::zeros(2, 2);
        p[(0, 1)] = 1.0;
        p[(1, 0)] = 1.0;
        assert_eq!(p.lu_solve(&[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
        assert!(p.cholesky_solve(&[1.0, 1.0]).is_err());
    }
}
