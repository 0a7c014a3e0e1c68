//! Preconditioners `M⁻¹`.

use alloc::vec::Vec;

use crate::error::{check_len, Error};
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Preconditioner {
    #[default]
    Identity,
    /// Scalar Jacobi: `M = diag(A)`.
    Jacobi { inv_diag: Vec<f64> },
}

impl Preconditioner {
    /// Scalar Jacobi from the stored diagonal; every `a_ii` must be positive.
    pub fn jacobi(a: &SparseOperator) -> Result<Self, Error> {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .enumerate()
            .map(|(i, d)| match d {
                Some(d) if d > 0.0 => Ok(1.0 / d),
                Some(d) => Err(Error::Definiteness(alloc::format!("a[{i},{i}] = {d}"))),
                None => Err(Error::Definiteness(alloc::format!("a[{i},{i}] is not stored"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::Jacobi { inv_diag })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "none",
            Self::Jacobi { .. } => "jacobi",
        }
    }

    /// `y = M⁻¹ x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), Error> {
        check_len(x.len(), y.len())?;
        if let Self::Jacobi { inv_diag } = self {
            check_len(inv_diag.len(), x.len())?;
        }
        self.apply_unchecked(x, y);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Self::Identity => y.copy_from_slice(x),
            Self::Jacobi { inv_diag } => {
                for ((yi, xi), d) in y.iter_mut().zip(x).zip(inv_diag) {
                    *yi = d * xi;
                }
            }
        }
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<(), Error> {
        match self {
            Self::Identity => Ok(()),
            Self::Jacobi { inv_diag } => check_len(n, inv_diag.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::build_poisson_2d;
    use alloc::vec;

    #[test]
    fn jacobi_of_diagonal() {
        let m = Preconditioner::jacobi(&SparseOperator::from_diagonal(&[2.0, 4.0])).unwrap();
        assert_eq!(m, Preconditioner::Jacobi { inv_diag: vec![0.5, 0.25] });
    }

    #[test]
    fn jacobi_of_poisson() {
        let a = build_poisson_2d(4, 5).unwrap();
        let Preconditioner::Jacobi { inv_diag } = Preconditioner::jacobi(&a).unwrap() else {
            panic!("expected jacobi");
        };
        assert!(inv_diag.iter().all(|&d| d == 0.25));
    }

    #[test]
    fn jacobi_maps_diagonal_to_ones() {
        let a = build_poisson_2d(3, 3).unwrap();
        let diag: Vec<f64> = a.diagonal().into_iter().map(Option::unwrap).collect();
        let mut y = vec![0.0; 9];
        Preconditioner::jacobi(&a).unwrap().apply(&diag, &mut y).unwrap();
        assert_eq!(y, vec![1.0; 9]);
    }

    #[test]
    fn jacobi_rejects_bad_diagonal() {
        let a = SparseOperator::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(Preconditioner::jacobi(&a), Err(Error::Definiteness(_))));
        let a = SparseOperator::from_triplets(2, &[(0, 0, 1.0), (1, 0, 1.0)], true).unwrap();
        assert!(matches!(Preconditioner::jacobi(&a), Err(Error::Definiteness(_))));
    }

    #[test]
    fn identity_copies() {
        let mut y = vec![0.0; 3];
        Preconditioner::Identity.apply(&[1.0, 2.0, 3.0], &mut y).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }
}
