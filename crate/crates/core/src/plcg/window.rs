//! Ring buffer of vectors addressed by their absolute basis index.

use alloc::vec;
use alloc::vec::Vec;

/// Holds the most recent `capacity` vectors of a sequence `w_0, w_1, ...`.
///
/// New vectors reuse the storage of the one they evict, so a window never
/// allocates after it has filled.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    slots: Vec<Vec<f64>>,
    dim: usize,
    /// Index one past the newest vector.
    end: usize,
    len: usize,
}

impl SlidingWindow {
    pub fn new(capacity: usize, dim: usize) -> Self {
        assert!(capacity > 0);
        Self { slots: vec![Vec::new(); capacity], dim, end: 0, len: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Number of live vectors.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Absolute index of the newest vector.
    pub fn newest(&self) -> Option<usize> {
        self.end.checked_sub(1).filter(|_| self.len > 0)
    }

    pub fn contains(&self, j: usize) -> bool {
        j < self.end && j + self.len >= self.end
    }

    /// Vector with absolute index `j`; panics when it is not live.
    pub fn get(&self, j: usize) -> &[f64] {
        assert!(self.contains(j), "vector {j} is not in the window ending at {}", self.end);
        &self.slots[j % self.capacity()]
    }

    /// Vector `p` places behind the newest (`p = 0` is the newest).
    pub fn at_position(&self, p: usize) -> &[f64] {
        self.get(self.end - 1 - p)
    }

    /// Detaches storage for the next vector, evicting the oldest one when the
    /// window is full. Contents are stale; pass the buffer back to
    /// [`commit`](Self::commit).
    pub fn take_next(&mut self) -> Vec<f64> {
        if self.len == self.capacity() {
            self.len -= 1;
        }
        let cap = self.capacity();
        let mut v = core::mem::take(&mut self.slots[self.end % cap]);
        v.resize(self.dim, 0.0);
        v
    }

    pub fn commit(&mut self, v: Vec<f64>) {
        debug_assert_eq!(v.len(), self.dim);
        let cap = self.capacity();
        self.slots[self.end % cap] = v;
        self.end += 1;
        self.len += 1;
    }

    pub fn push_copy(&mut self, x: &[f64]) {
        let mut v = self.take_next();
        v.copy_from_slice(x);
        self.commit(v);
    }

    /// Temporarily removes the newest vector so it can be rewritten while
    /// older vectors are read. Must be returned with [`restore_newest`].
    ///
    /// [`restore_newest`]: Self::restore_newest
    pub fn take_newest(&mut self) -> Vec<f64> {
        let j = self.newest().expect("window is empty");
        let cap = self.capacity();
        core::mem::take(&mut self.slots[j % cap])
    }

    pub fn restore_newest(&mut self, v: Vec<f64>) {
        let j = self.newest().expect("window is empty");
        let cap = self.capacity();
        self.slots[j % cap] = v;
    }

    /// Drops all vectors, keeping the storage.
    pub fn clear(&mut self) {
        self.end = 0;
        self.len = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slides_by_absolute_index() {
        let mut w = SlidingWindow::new(3, 1);
        for j in 0..5 {
            w.push_copy(&[j as f64]);
        }
        assert_eq!(w.len(), 3);
        assert!(!w.contains(1));
        assert_eq!(w.get(2), &[2.0]);
        assert_eq!(w.at_position(0), &[4.0]);
        assert_eq!(w.newest(), Some(4));
    }

    #[test]
    fn take_next_evicts_oldest() {
        let mut w = SlidingWindow::new(2, 1);
        w.push_copy(&[0.0]);
        w.push_copy(&[1.0]);
        let v = w.take_next();
        assert!(!w.contains(0));
        assert_eq!(w.get(1), &[1.0]);
        w.commit(v);
        assert_eq!(w.newest(), Some(2));
    }

    #[test]
    fn clear_restarts_indexing() {
        let mut w = SlidingWindow::new(2, 2);
        w.push_copy(&[1.0, 2.0]);
        w.clear();
        assert!(w.is_empty());
        w.push_copy(&[3.0, 4.0]);
        assert_eq!(w.get(0), &[3.0, 4.0]);
    }

    #[test]
    #[should_panic]
    fn evicted_vectors_are_inaccessible() {
        let mut w = SlidingWindow::new(1, 1);
        w.push_copy(&[0.0]);
        w.push_copy(&[1.0]);
        let _ = w.get(0);
    }
}
