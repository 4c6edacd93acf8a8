//! Small dense helpers over row-major `n x n` slices.

use alloc::vec::Vec;

use nalgebra::DMatrix;

/// Eigenvalues of the symmetrized matrix, ascending.
pub fn symmetric_eigenvalues(m: &[f64], n: usize) -> Vec<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i * n + j] + m[j * n + i]));
    let mut ev: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

/// Inverse of a row-major matrix, `None` when singular.
pub fn inverse(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let a = DMatrix::from_fn(n, n, |i, j| m[i * n + j]);
    let inv = a.try_inverse()?;
    Some((0..n * n).map(|k| inv[(k / n, k % n)]).collect())
}
