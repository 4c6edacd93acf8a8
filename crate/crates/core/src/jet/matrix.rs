use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::{Jet, JetError};

/// Constant blocks with `sigma_min < CONDITION_LIMIT * sigma_max` are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e-9;

/// Dense square matrix of jets, row major.
#[derive(Debug, Clone)]
pub struct JetMatrix {
    n: usize,
    entries: Vec<Jet>,
}

impl JetMatrix {
    pub fn from_rows(rows: Vec<Vec<Jet>>) -> Result<Self, JetError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(JetError::NotSquare { rows: n, cols: row.len() });
            }
            entries.extend(row);
        }
        if n == 0 {
            return Err(JetError::NotSquare { rows: 0, cols: 0 });
        }
        let space = entries[0].space().clone();
        if entries.iter().any(|e| !alloc::sync::Arc::ptr_eq(e.space(), &space)) {
            return Err(JetError::SpaceMismatch);
        }
        Ok(Self { n, entries })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.entries[i * self.n + j]
    }

    pub fn order(&self) -> usize {
        self.entries.iter().map(Jet::order).min().unwrap_or(0)
    }

    /// Matrix of constant terms.
    pub fn constant_block(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).value())
    }

    fn from_constants(template: &Jet, m: &DMatrix<f64>, order: usize) -> Self {
        let n = m.nrows();
        let entries = (0..n * n)
            .map(|k| Jet::constant(template.space(), m[(k / n, k % n)]).truncate(order))
            .collect();
        Self { n, entries }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, JetError> {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = self.get(i, 0).try_mul(other.get(0, j))?;
                for k in 1..n {
                    acc = acc.try_add(&self.get(i, k).try_mul(other.get(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        Ok(Self { n, entries })
    }

    pub fn into_rows(self) -> Vec<Vec<Jet>> {
        let n = self.n;
        let mut it = self.entries.into_iter();
        (0..n).map(|_| it.by_ref().take(n).collect()).collect()
    }
}

/// Inverse over the truncated jet ring.
///
/// The constant block is inverted directly; Newton steps `X <- X + X (I - M X)` then double the
/// number of exact Taylor orders per iteration.
pub fn jet_matrix_inverse(m: &JetMatrix) -> Result<JetMatrix, JetError> {
    let a0 = m.constant_block();
    let sv = a0.clone().svd(false, false).singular_values;
    let largest = sv.max();
    let smallest = sv.min();
    if !(smallest > CONDITION_LIMIT * largest) || !smallest.is_finite() {
        return Err(JetError::Singular { smallest, largest });
    }
    let inv0 = a0.try_inverse().ok_or(JetError::Singular { smallest, largest })?;
    let order = m.order();
    let template = m.get(0, 0);
    let identity = JetMatrix::from_constants(template, &DMatrix::identity(m.n, m.n), order);
    let mut x = JetMatrix::from_constants(template, &inv0, order);
    let mut exact = 0usize;
    while exact < order {
        let mx = m.try_mul(&x)?;
        let mut residual = Vec::with_capacity(m.n * m.n);
        for (a, b) in identity.entries.iter().zip(&mx.entries) {
            residual.push(a.try_sub(b)?);
        }
        let residual = JetMatrix { n: m.n, entries: residual };
        let correction = x.try_mul(&residual)?;
        for (xe, ce) in x.entries.iter_mut().zip(&correction.entries) {
            *xe = xe.try_add(ce)?;
        }
        exact = 2 * exact + 1;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;
    use alloc::sync::Arc;
    use alloc::vec;

    fn constants(s: &Arc<JetSpace>, rows: &[&[f64]]) -> JetMatrix {
        JetMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| Jet::constant(s, v)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn identity_and_diagonal() {
        let s = Arc::new(JetSpace::new(2, 3).unwrap());
        let inv = jet_matrix_inverse(&constants(&s, &[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(inv.get(0, 0).value(), 1.0);
        assert_eq!(inv.get(0, 1).value(), 0.0);
        let inv = jet_matrix_inverse(&constants(&s, &[&[2.0, 0.0], &[0.0, 4.0]])).unwrap();
        assert_eq!(inv.get(0, 0).value(), 0.5);
        assert_eq!(inv.get(1, 1).value(), 0.25);
        assert!(inv.get(0, 0).coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn singular_block_reports_singular_value() {
        let s = Arc::new(JetSpace::new(1, 2).unwrap());
        match jet_matrix_inverse(&constants(&s, &[&[1.0, 2.0], &[2.0, 4.0]])) {
            Err(JetError::Singular { smallest, largest }) => {
                assert!(smallest < 1e-12);
                assert!(largest > 4.0);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn product_with_inverse_is_identity() {
        let s = Arc::new(JetSpace::new(3, 5).unwrap());
        let v: Vec<Jet> = (0..3).map(|i| Jet::variable(&s, 0.3 + 0.1 * i as f64, i).unwrap()).collect();
        let rows = vec![
            vec![v[0].exp().unwrap().add_constant(1.0), &v[1] * &v[2], v[2].sin().unwrap()],
            vec![&v[1] * &v[2], (&v[0] * &v[0]).add_constant(2.0), v[1].clone()],
            vec![v[2].sin().unwrap(), v[1].clone(), (&v[2] * &v[1]).add_constant(3.0)],
        ];
        let m = JetMatrix::from_rows(rows).unwrap();
        let inv = jet_matrix_inverse(&m).unwrap();
        let prod = m.try_mul(&inv).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let target = Jet::constant(&s, if i == j { 1.0 } else { 0.0 });
                assert!(prod.get(i, j).max_coeff_diff(&target) < 1e-12);
            }
        }
    }
}
