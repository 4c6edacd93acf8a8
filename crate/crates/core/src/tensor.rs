//! Dense tensors with every slot ranging over the same dimension.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Tensor {
    rank: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rank: usize, dim: usize) -> Self {
        Self { rank, dim, data: vec![0.0; dim.pow(rank as u32)] }
    }

    pub fn from_fn(rank: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(rank, dim);
        let mut idx = vec![0usize; rank];
        for k in 0..t.data.len() {
            t.unflatten(k, &mut idx);
            t.data[k] = f(&idx);
        }
        t
    }

    pub fn from_vec(rank: usize, dim: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == dim.pow(rank as u32)).then_some(Self { rank, dim, data })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn unflatten(&self, mut k: usize, out: &mut [usize]) {
        for slot in (0..self.rank).rev() {
            out[slot] = k % self.dim;
            k /= self.dim;
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flatten(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let k = self.flatten(idx);
        self.data[k] = value;
    }

    pub fn at1(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn at2(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn at3(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn at4(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }

    /// Max-absolute-component norm.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rank, self.dim), (other.rank, other.dim), "tensor shapes differ");
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max(libm::fabs(a - b)))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { rank: self.rank, dim: self.dim, data: self.data.iter().map(|v| v * factor).collect() }
    }

    /// Largest deviation between `T[..]` and `T[..]` with slots `a` and `b` exchanged.
    pub fn asymmetry(&self, a: usize, b: usize) -> f64 {
        let mut idx = vec![0usize; self.rank];
        let mut worst = 0.0f64;
        for k in 0..self.data.len() {
            self.unflatten(k, &mut idx);
            idx.swap(a, b);
            let swapped = self.get(&idx);
            worst = worst.max(libm::fabs(self.data[k] - swapped));
        }
        worst
    }

    /// Max asymmetry over all adjacent transpositions of the slots in `slots`.
    pub fn asymmetry_over(&self, slots: &[usize]) -> f64 {
        slots.windows(2).map(|w| self.asymmetry(w[0], w[1])).fold(0.0, f64::max)
    }

    /// Contracts slot `slot` with the vector `v`, producing a tensor of rank `rank - 1`.
    pub fn contract(&self, slot: usize, v: &[f64]) -> Self {
        assert_eq!(v.len(), self.dim);
        let mut out = Self::zeros(self.rank - 1, self.dim);
        let mut idx = vec![0usize; self.rank];
        for k in 0..self.data.len() {
            self.unflatten(k, &mut idx);
            let w = v[idx[slot]];
            let mut reduced: Vec<usize> = idx.clone();
            reduced.remove(slot);
            let target = out.flatten(&reduced);
            out.data[target] += w * self.data[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major() {
        let t = Tensor::from_fn(3, 2, |i| (i[0] * 4 + i[1] * 2 + i[2]) as f64);
        assert_eq!(t.data(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(t.at3(1, 0, 1), 5.0);
    }

    #[test]
    fn symmetry_and_contraction() {
        let t = Tensor::from_fn(2, 3, |i| (i[0] + i[1]) as f64);
        assert_eq!(t.asymmetry(0, 1), 0.0);
        let c = t.contract(1, &[1.0, 0.0, 0.0]);
        assert_eq!(c.data(), &[0.0, 1.0, 2.0]);
        let a = Tensor::from_fn(2, 2, |i| i[0] as f64);
        assert_eq!(a.asymmetry(0, 1), 1.0);
    }
}
