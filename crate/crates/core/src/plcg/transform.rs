//! Band of the upper triangular basis transformation `G` with `Z = V G`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

/// Recent columns of `G`. Column `k` stores rows `max(0, k−2l)..=k`; every
/// entry further above the diagonal is zero for symmetric operators and is
/// never formed.
#[derive(Debug, Clone)]
pub struct BandedTransform {
    l: usize,
    retain: usize,
    /// `(k, entries)` with `entries[t] = g_{first_row(k)+t, k}`.
    cols: VecDeque<(usize, Vec<f64>)>,
}

impl BandedTransform {
    pub fn new(l: usize) -> Self {
        let retain = 3 * l + 2;
        Self { l, retain, cols: VecDeque::with_capacity(retain) }
    }

    pub fn depth(&self) -> usize {
        self.l
    }

    /// Number of columns kept.
    pub fn retained(&self) -> usize {
        self.retain
    }

    pub fn first_row(&self, k: usize) -> usize {
        k.saturating_sub(2 * self.l)
    }

    pub fn in_band(&self, j: usize, k: usize) -> bool {
        j <= k && j >= self.first_row(k)
    }

    /// Index of the newest finalized column.
    pub fn last_column(&self) -> Option<usize> {
        self.cols.back().map(|c| c.0)
    }

    fn column(&self, k: usize) -> &[f64] {
        let (first, _) = self.cols.front().expect("no finalized columns");
        assert!(
            k >= *first && k < first + self.cols.len(),
            "column {k} is not retained"
        );
        &self.cols[k - first].1
    }

    /// `g_{j,k}` of a finalized column; zero outside the band.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        if !self.in_band(j, k) {
            return 0.0;
        }
        self.column(k)[j - self.first_row(k)]
    }

    pub fn diag(&self, k: usize) -> f64 {
        self.get(k, k)
    }

    /// Band entries of a finalized column.
    pub fn entries(&self, k: usize) -> &[f64] {
        self.column(k)
    }

    /// Appends column `k`, which must follow the newest one.
    pub fn push(&mut self, k: usize, entries: Vec<f64>) {
        debug_assert_eq!(entries.len(), k - self.first_row(k) + 1);
        debug_assert_eq!(self.last_column().map_or(0, |c| c + 1), k);
        if self.cols.len() == self.retain {
            self.cols.pop_front();
        }
        self.cols.push_back((k, entries));
    }

    pub fn clear(&mut self) {
        self.cols.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn band_lookup_and_retention() {
        let mut g = BandedTransform::new(1);
        g.push(0, vec![1.0]);
        g.push(1, vec![0.5, 2.0]);
        g.push(2, vec![0.1, 0.2, 3.0]);
        g.push(3, vec![0.3, 0.4, 4.0]);
        assert_eq!(g.get(0, 2), 0.1);
        assert_eq!(g.get(0, 3), 0.0);
        assert_eq!(g.get(3, 2), 0.0);
        assert_eq!(g.diag(3), 4.0);
        assert_eq!(g.retained(), 5);
        g.push(4, vec![0.0, 0.0, 5.0]);
        g.push(5, vec![0.0, 0.0, 6.0]);
        assert_eq!(g.diag(1), 2.0);
    }

    #[test]
    #[should_panic]
    fn dropped_columns_panic() {
        let mut g = BandedTransform::new(1);
        for k in 0..7 {
            let rows = k - g.first_row(k) + 1;
            g.push(k, vec![1.0; rows]);
        }
        let _ = g.diag(0);
    }
}
