use std::ops::{Index, IndexMut};

/// Dense 2-D array of cell values including the ghost ring.
///
/// Index `(i, j)` addresses column `i` (x direction) and row `j` (y direction);
/// `(0, 0)` is the bottom-left ghost cell. Storage is row-major in `j`, so an
/// x-line is contiguous.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Field {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self { m, n, data: vec![0.0; m * n] }
    }

    pub fn filled(m: usize, n: usize, value: f64) -> Self {
        Self { m, n, data: vec![value; m * n] }
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(m * n);
        for j in 0..n {
            for i in 0..m {
                data.push(f(i, j));
            }
        }
        Self { m, n, data }
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.m && j < self.n);
        j * self.m + i
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.m == other.m && self.n == other.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    /// Copy of the interior block `1..m-1` x `1..n-1`, indexed `[i][j]`.
    pub fn interior_columns(&self) -> Vec<Vec<f64>> {
        (1..self.m - 1)
            .map(|i| (1..self.n - 1).map(|j| self[(i, j)]).collect())
            .collect()
    }

    /// Largest absolute value over the interior block.
    pub fn interior_max_abs(&self) -> f64 {
        let mut out = 0.0f64;
        for j in 1..self.n - 1 {
            for i in 1..self.m - 1 {
                out = out.max(self[(i, j)].abs());
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Field {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.m + i]
    }
}

impl IndexMut<(usize, usize)> for Field {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.m + i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_x_fastest() {
        let f = Field::from_fn(3, 2, |i, j| (10 * j + i) as f64);
        assert_eq!(f.as_slice(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(f[(2, 1)], 12.0);
        assert_eq!(f.idx(1, 1), 4);
    }

    #[test]
    fn interior_columns_skip_ghosts() {
        let f = Field::from_fn(4, 4, |i, j| (10 * i + j) as f64);
        assert_eq!(f.interior_columns(), vec![vec![11.0, 12.0], vec![21.0, 22.0]]);
    }
}
