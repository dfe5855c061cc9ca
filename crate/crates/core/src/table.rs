//! Strictly upper-triangular tables indexed by pairs of orders `1 <= i < j <= K`.

use serde::{Deserialize, Serialize};

/// Values attached to order pairs `(i, j)` with `1 <= i < j <= K`.
///
/// Stored densely as a `K x K` row-major block; entries with `i >= j` are
/// never read.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderTable<T> {
    k: usize,
    data: Vec<T>,
}

impl<T: Clone + Default> OrderTable<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            data: vec![T::default(); k * k],
        }
    }

    /// Largest order `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    fn index(&self, i: usize, j: usize) -> usize {
        assert!(
            1 <= i && i < j && j <= self.k,
            "order pair ({i}, {j}) outside 1 <= i < j <= {}",
            self.k
        );
        (i - 1) * self.k + (j - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[self.index(i, j)].clone()
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        let idx = self.index(i, j);
        self.data[idx] = value;
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        let idx = self.index(i, j);
        &mut self.data[idx]
    }

    /// All pairs `(i, j)` in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let k = self.k;
        (1..=k).flat_map(move |i| (i + 1..=k).map(move |j| (i, j)))
    }

    pub fn map<U: Clone + Default>(&self, f: impl Fn(usize, usize, &T) -> U) -> OrderTable<U> {
        let mut out = OrderTable::new(self.k);
        for (i, j) in self.pairs() {
            let v = f(i, j, &self.data[self.index(i, j)]);
            out.set(i, j, v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_cover_upper_triangle() {
        let t: OrderTable<u8> = OrderTable::new(4);
        let pairs: Vec<_> = t.pairs().collect();
        assert_eq!(pairs.len(), 6);
        assert_eq!(pairs[0], (1, 2));
        assert_eq!(pairs[5], (3, 4));
    }

    #[test]
    #[should_panic]
    fn diagonal_is_rejected() {
        let t: OrderTable<u8> = OrderTable::new(3);
        t.get(2, 2);
    }
}
