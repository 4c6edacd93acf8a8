use alloc::vec;
use alloc::vec::Vec;

use super::JetError;

/// Largest truncation order supported by the engine.
pub const MAX_ORDER: usize = 6;
/// Largest number of jet variables (base plus fiber coordinates of an 8-dimensional chart).
pub const MAX_VARIABLES: usize = 16;

/// Monomial layout and product tables for jets in `dim` variables truncated at total degree `order`.
///
/// Multi-indices are enumerated in graded lexicographic order: by total degree first, then
/// lexicographically with larger exponents of earlier variables first. For `dim = 2`, `order = 2`
/// the layout is `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)`. Because the order is graded, the
/// coefficients of degree `<= k` always form a prefix of the coefficient vector.
#[derive(Debug)]
pub struct JetSpace {
    dim: usize,
    order: usize,
    exponents: Vec<u8>,
    degree_end: Vec<usize>,
    raise: Vec<u32>,
    mul_offsets: Vec<usize>,
    mul_targets: Vec<u32>,
    factorials: Vec<f64>,
}

const NONE: u32 = u32::MAX;

impl JetSpace {
    pub fn new(dim: usize, order: usize) -> Result<Self, JetError> {
        if dim == 0 || dim > MAX_VARIABLES {
            return Err(JetError::UnsupportedDimension { dim, max: MAX_VARIABLES });
        }
        if order > MAX_ORDER {
            return Err(JetError::UnsupportedOrder { order, max: MAX_ORDER });
        }

        let mut exponents: Vec<u8> = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        let mut current = vec![0u8; dim];
        for degree in 0..=order {
            push_degree(&mut exponents, &mut current, 0, degree);
            degree_end.push(exponents.len() / dim);
        }
        let count = exponents.len() / dim;

        let index_of = |alpha: &[u8]| -> Option<usize> {
            let degree: usize = alpha.iter().map(|&a| a as usize).sum();
            if degree > order {
                return None;
            }
            let start = if degree == 0 { 0 } else { degree_end[degree - 1] };
            let end = degree_end[degree];
            // Within a degree the exponents are sorted in descending lexicographic order.
            let (mut lo, mut hi) = (start, end);
            while lo < hi {
                let mid = (lo + hi) / 2;
                let probe = &exponents[mid * dim..(mid + 1) * dim];
                match probe.cmp(alpha) {
                    core::cmp::Ordering::Equal => return Some(mid),
                    core::cmp::Ordering::Greater => lo = mid + 1,
                    core::cmp::Ordering::Less => hi = mid,
                }
            }
            None
        };

        let mut raise = vec![NONE; count * dim];
        let mut scratch = vec![0u8; dim];
        for i in 0..count {
            for v in 0..dim {
                scratch.copy_from_slice(&exponents[i * dim..(i + 1) * dim]);
                scratch[v] += 1;
                if let Some(j) = index_of(&scratch) {
                    raise[i * dim + v] = j as u32;
                }
            }
        }

        // Every non-constant monomial is reached from a lower one by raising its first nonzero slot.
        let mut parent = vec![(0usize, 0usize); count];
        for (j, entry) in parent.iter_mut().enumerate().skip(1) {
            let alpha = &exponents[j * dim..(j + 1) * dim];
            let v = alpha.iter().position(|&a| a > 0).expect("non-constant monomial");
            scratch.copy_from_slice(alpha);
            scratch[v] -= 1;
            *entry = (index_of(&scratch).expect("lower monomial exists"), v);
        }

        let degree_of = |i: usize| -> usize { exponents[i * dim..(i + 1) * dim].iter().map(|&a| a as usize).sum() };
        let mut mul_offsets = Vec::with_capacity(count + 1);
        let mut mul_targets = Vec::new();
        for i in 0..count {
            mul_offsets.push(mul_targets.len());
            let row_len = degree_end[order - degree_of(i)];
            let row_start = mul_targets.len();
            mul_targets.push(i as u32);
            for j in 1..row_len {
                let (p, v) = parent[j];
                let base = mul_targets[row_start + p] as usize;
                mul_targets.push(raise[base * dim + v]);
            }
        }
        mul_offsets.push(mul_targets.len());

        let mut factorials = vec![1.0f64; order + 1];
        for k in 1..=order {
            factorials[k] = factorials[k - 1] * k as f64;
        }

        Ok(Self { dim, order, exponents, degree_end, raise, mul_offsets, mul_targets, factorials })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of monomials of total degree `<= self.order()`, i.e. `binomial(dim + order, order)`.
    pub fn len(&self) -> usize {
        self.degree_end[self.order]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of monomials of total degree `<= degree`.
    pub fn len_upto(&self, degree: usize) -> usize {
        self.degree_end[degree.min(self.order)]
    }

    pub fn exponents(&self, index: usize) -> &[u8] {
        &self.exponents[index * self.dim..(index + 1) * self.dim]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.exponents(index).iter().map(|&a| a as usize).sum()
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        if alpha.len() != self.dim {
            return None;
        }
        let mut index = 0usize;
        for (v, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                let next = self.raise[index * self.dim + v];
                if next == NONE {
                    return None;
                }
                index = next as usize;
            }
        }
        Some(index)
    }

    pub(crate) fn raised(&self, index: usize, var: usize) -> Option<usize> {
        let r = self.raise[index * self.dim + var];
        (r != NONE).then_some(r as usize)
    }

    pub(crate) fn product_row(&self, index: usize) -> &[u32] {
        &self.mul_targets[self.mul_offsets[index]..self.mul_offsets[index + 1]]
    }

    /// `alpha!` for the monomial at `index`.
    pub fn multi_factorial(&self, index: usize) -> f64 {
        self.exponents(index).iter().map(|&a| self.factorials[a as usize]).product()
    }
}

fn push_degree(out: &mut Vec<u8>, current: &mut [u8], slot: usize, remaining: usize) {
    if slot + 1 == current.len() {
        current[slot] = remaining as u8;
        out.extend_from_slice(current);
        current[slot] = 0;
        return;
    }
    for a in (0..=remaining).rev() {
        current[slot] = a as u8;
        push_degree(out, current, slot + 1, remaining - a);
    }
    current[slot] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn counts_match_binomial() {
        for dim in 1..=6 {
            for order in 0..=MAX_ORDER {
                let space = JetSpace::new(dim, order).unwrap();
                assert_eq!(space.len(), binomial(dim + order, order));
            }
        }
    }

    #[test]
    fn graded_lex_layout() {
        let space = JetSpace::new(2, 2).unwrap();
        let layout: Vec<&[u8]> = (0..space.len()).map(|i| space.exponents(i)).collect();
        assert_eq!(layout, [&[0, 0][..], &[1, 0], &[0, 1], &[2, 0], &[1, 1], &[0, 2]]);
    }

    #[test]
    fn product_targets_add_exponents() {
        let space = JetSpace::new(3, 4).unwrap();
        for i in 0..space.len() {
            for (j, &t) in space.product_row(i).iter().enumerate() {
                let sum: Vec<u8> =
                    space.exponents(i).iter().zip(space.exponents(j)).map(|(a, b)| a + b).collect();
                assert_eq!(space.exponents(t as usize), &sum[..]);
            }
        }
    }

    #[test]
    fn index_lookup_round_trips() {
        let space = JetSpace::new(4, 3).unwrap();
        for i in 0..space.len() {
            assert_eq!(space.index_of(space.exponents(i)), Some(i));
        }
        assert_eq!(space.index_of(&[4, 0, 0, 0]), None);
    }

    #[test]
    fn rejects_unsupported_shapes() {
        assert!(JetSpace::new(0, 2).is_err());
        assert!(JetSpace::new(17, 2).is_err());
        assert!(JetSpace::new(2, 7).is_err());
    }
}
