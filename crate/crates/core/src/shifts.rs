//! Shifts `σ_0..σ_{l−1}` of the Newton polynomial `P_l(t) = Π (t − σ_j)`
//! that generates the auxiliary basis.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::Error;
use crate::sparse::SpectralInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    Chebyshev,
    Zero,
    User,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSet {
    sigma: Vec<f64>,
    interval: Option<SpectralInterval>,
    kind: ShiftKind,
}

impl ShiftSet {
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Pipeline depth `l`.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn interval(&self) -> Option<SpectralInterval> {
        self.interval
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    /// `P_k(t) = Π_{j<k} (t − σ_j)`; `P_0 = 1`.
    pub fn poly(&self, degree: usize, t: f64) -> f64 {
        self.sigma[..degree].iter().fold(1.0, |p, s| p * (t - s))
    }
}

/// Zeros of the degree-`l` Chebyshev polynomial mapped to `interval`,
/// in the order `i = 0..l`.
pub fn chebyshev_shifts(interval: SpectralInterval, l: usize) -> Result<ShiftSet, Error> {
    if l == 0 {
        return Err(Error::Argument("pipeline depth must be at least 1".into()));
    }
    let mid = 0.5 * (interval.lambda_max() + interval.lambda_min());
    let half = 0.5 * (interval.lambda_max() - interval.lambda_min());
    let sigma = (0..l)
        .map(|i| mid + half * Float::cos((2 * i + 1) as f64 * PI / (2 * l) as f64))
        .collect();
    Ok(ShiftSet { sigma, interval: Some(interval), kind: ShiftKind::Chebyshev })
}

/// All-zero shifts: the monomial basis `z_j = A^l v_{j−l}`.
pub fn monomial_shifts(l: usize) -> ShiftSet {
    ShiftSet { sigma: vec![0.0; l], interval: None, kind: ShiftKind::Zero }
}

pub fn user_shifts(sigma: Vec<f64>) -> ShiftSet {
    ShiftSet { sigma, interval: None, kind: ShiftKind::User }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> SpectralInterval {
        SpectralInterval::new(0.0, 8.0).unwrap()
    }

    #[test]
    fn closed_forms_on_0_8() {
        let s = chebyshev_shifts(unit(), 1).unwrap();
        assert!((s.sigma()[0] - 4.0).abs() < 1e-15);

        let r2 = 2.0 * 2.0f64.sqrt();
        let s = chebyshev_shifts(unit(), 2).unwrap();
        assert!((s.sigma()[0] - (4.0 + r2)).abs() < 1e-14);
        assert!((s.sigma()[1] - (4.0 - r2)).abs() < 1e-14);
        assert!((s.sigma()[0] - 6.828427).abs() < 1e-6);

        let r3 = 2.0 * 3.0f64.sqrt();
        let s = chebyshev_shifts(unit(), 3).unwrap();
        let want = [4.0 + r3, 4.0, 4.0 - r3];
        for (a, b) in s.sigma().iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(s.kind(), ShiftKind::Chebyshev);
    }

    #[test]
    fn depth_zero_is_rejected() {
        assert!(chebyshev_shifts(unit(), 0).is_err());
    }

    #[test]
    fn monomial_is_zero() {
        assert_eq!(monomial_shifts(1).sigma(), &[0.0]);
        assert_eq!(monomial_shifts(3).sigma(), &[0.0, 0.0, 0.0]);
        assert_eq!(monomial_shifts(3).poly(3, 2.0), 8.0);
    }

    #[test]
    fn chebyshev_polynomial_is_equioscillating() {
        // On [0, 8] the scaled Chebyshev polynomial has max |P_l| = 2·2^l.
        for l in 1..6 {
            let s = chebyshev_shifts(unit(), l).unwrap();
            let peak = (0..=4000)
                .map(|k| s.poly(l, 8.0 * k as f64 / 4000.0).abs())
                .fold(0.0, f64::max);
            let want = 2.0 * 2f64.powi(l as i32);
            assert!((peak - want).abs() < 1e-9 * want, "l={l} {peak}");
        }
    }

    proptest! {
        #[test]
        fn symmetric_about_midpoint(lo in 0.0f64..10.0, width in 1e-3f64..100.0, l in 1usize..12) {
            let iv = SpectralInterval::new(lo, lo + width).unwrap();
            let s = chebyshev_shifts(iv, l).unwrap();
            let mut sorted = s.sigma().to_vec();
            sorted.sort_by(f64::total_cmp);
            let sum = iv.lambda_min() + iv.lambda_max();
            for (a, b) in sorted.iter().zip(sorted.iter().rev()) {
                prop_assert!((a + b - sum).abs() <= 1e-12 * sum.max(1.0));
            }
            for &x in s.sigma() {
                prop_assert!(iv.lambda_min() < x && x < iv.lambda_max());
            }
            prop_assert_eq!(s.len(), l);
        }
    }
}
