//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients `coeffs[alpha] = d^alpha f / alpha!` of a scalar
//! function around a point, for every multi-index `alpha` of total degree at most the jet's
//! order. Arithmetic on jets is arithmetic in the truncated polynomial ring, so evaluating any
//! composite function on lifted coordinates yields all of its partial derivatives up to that
//! order exactly (up to floating point rounding).
//!
//! Jets created from the same [`JetSpace`] share its monomial tables through an `Arc`.

mod elementary;
mod matrix;
mod space;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

pub use elementary::Elementary;
pub use matrix::{jet_matrix_inverse, JetMatrix, CONDITION_LIMIT};
pub use space::{JetSpace, MAX_ORDER, MAX_VARIABLES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("jet dimension {dim} unsupported (1..={max})")]
    UnsupportedDimension { dim: usize, max: usize },
    #[error("jet order {order} unsupported (max {max})")]
    UnsupportedOrder { order: usize, max: usize },
    #[error("variable index {index} out of range for {dim} jet variables")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("a seeded variable needs truncation order >= 1")]
    ZeroOrder,
    #[error("derivative of total order {requested} requested from a jet of order {available}")]
    OrderExceeded { requested: usize, available: usize },
    #[error("multi-index has {got} entries, expected {expected}")]
    MultiIndexLength { got: usize, expected: usize },
    #[error("domain error in {function}: constant term {value}")]
    Domain { function: &'static str, value: f64 },
    #[error("jets from different spaces combined")]
    SpaceMismatch,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular constant block: smallest singular value {smallest:e}, largest {largest:e}")]
    Singular { smallest: f64, largest: f64 },
}

/// Truncated Taylor expansion of a scalar function in `space.dim()` variables.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.space.dim())
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Self {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Self { space: space.clone(), order: space.order(), coeffs }
    }

    /// Jet of the coordinate function `t -> t[var]` around `value`.
    pub fn variable(space: &Arc<JetSpace>, value: f64, var: usize) -> Result<Self, JetError> {
        if var >= space.dim() {
            return Err(JetError::VariableOutOfRange { index: var, dim: space.dim() });
        }
        if space.order() == 0 {
            return Err(JetError::ZeroOrder);
        }
        let mut jet = Self::constant(space, value);
        let mut unit = vec![0u8; space.dim()];
        unit[var] = 1;
        let idx = space.index_of(&unit).expect("degree-one monomial");
        jet.coeffs[idx] = 1.0;
        Ok(jet)
    }

    /// Builds a jet directly from Taylor-normalized coefficients in graded lexicographic order.
    pub fn from_coeffs(space: &Arc<JetSpace>, order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        if order > space.order() {
            return Err(JetError::UnsupportedOrder { order, max: space.order() });
        }
        if coeffs.len() != space.len_upto(order) {
            return Err(JetError::MultiIndexLength { got: coeffs.len(), expected: space.len_upto(order) });
        }
        Ok(Self { space: space.clone(), order, coeffs })
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Total degree through which the coefficients are exact.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Taylor-normalized coefficients in graded lexicographic order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor-normalized coefficient `d^alpha f / alpha!`.
    pub fn coeff(&self, alpha: &[u8]) -> Result<f64, JetError> {
        let idx = self.locate(alpha)?;
        Ok(self.coeffs[idx])
    }

    /// Raw partial derivative `d^alpha f` at the expansion point.
    pub fn extract(&self, alpha: &[u8]) -> Result<f64, JetError> {
        let idx = self.locate(alpha)?;
        Ok(self.coeffs[idx] * self.space.multi_factorial(idx))
    }

    /// Raw partial derivative with respect to the listed variables (repetition allowed).
    pub fn partial(&self, vars: &[usize]) -> Result<f64, JetError> {
        let alpha = self.alpha_from_vars(vars)?;
        self.extract(&alpha)
    }

    fn alpha_from_vars(&self, vars: &[usize]) -> Result<Vec<u8>, JetError> {
        let mut alpha = vec![0u8; self.dim()];
        for &v in vars {
            if v >= self.dim() {
                return Err(JetError::VariableOutOfRange { index: v, dim: self.dim() });
            }
            alpha[v] += 1;
        }
        Ok(alpha)
    }

    fn locate(&self, alpha: &[u8]) -> Result<usize, JetError> {
        if alpha.len() != self.dim() {
            return Err(JetError::MultiIndexLength { got: alpha.len(), expected: self.dim() });
        }
        let degree: usize = alpha.iter().map(|&a| a as usize).sum();
        if degree > self.order {
            return Err(JetError::OrderExceeded { requested: degree, available: self.order });
        }
        Ok(self.space.index_of(alpha).expect("degree checked"))
    }

    /// Jet of `d f / d t[var]`; exact through order `self.order() - 1`.
    pub fn derivative(&self, var: usize) -> Result<Self, JetError> {
        if var >= self.dim() {
            return Err(JetError::VariableOutOfRange { index: var, dim: self.dim() });
        }
        if self.order == 0 {
            return Err(JetError::OrderExceeded { requested: 1, available: 0 });
        }
        let order = self.order - 1;
        let len = self.space.len_upto(order);
        let coeffs = (0..len)
            .map(|i| {
                let raised = self.space.raised(i, var).expect("raise stays within order");
                (self.space.exponents(i)[var] as f64 + 1.0) * self.coeffs[raised]
            })
            .collect();
        Ok(Self { space: self.space.clone(), order, coeffs })
    }

    /// Repeated [`Jet::derivative`] over the listed variables.
    pub fn derivatives(&self, vars: &[usize]) -> Result<Self, JetError> {
        let mut out = self.clone();
        for &v in vars {
            out = out.derivative(v)?;
        }
        Ok(out)
    }

    /// Drops all coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let len = self.space.len_upto(order);
        Self { space: self.space.clone(), order, coeffs: self.coeffs[..len].to_vec() }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { space: self.space.clone(), order: self.order, coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn add_constant(&self, value: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    fn check_space(&self, other: &Self) -> Result<(), JetError> {
        if Arc::ptr_eq(&self.space, &other.space) {
            Ok(())
        } else {
            Err(JetError::SpaceMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, JetError> {
        self.check_space(other)?;
        let order = self.order.min(other.order);
        let len = self.space.len_upto(order);
        let coeffs = self.coeffs[..len].iter().zip(&other.coeffs[..len]).map(|(a, b)| a + b).collect();
        Ok(Self { space: self.space.clone(), order, coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, JetError> {
        self.check_space(other)?;
        let order = self.order.min(other.order);
        let len = self.space.len_upto(order);
        let coeffs = self.coeffs[..len].iter().zip(&other.coeffs[..len]).map(|(a, b)| a - b).collect();
        Ok(Self { space: self.space.clone(), order, coeffs })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, JetError> {
        self.check_space(other)?;
        let order = self.order.min(other.order);
        let len = self.space.len_upto(order);
        let mut coeffs = vec![0.0; len];
        let space = &*self.space;
        for i in 0..len {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            let row_len = space.len_upto(order - space.degree(i));
            let row = &space.product_row(i)[..row_len];
            for (b, &target) in other.coeffs[..row_len].iter().zip(row) {
                coeffs[target as usize] += a * b;
            }
        }
        Ok(Self { space: self.space.clone(), order, coeffs })
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Powi(-1))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, JetError> {
        let inv = other.recip().map_err(|_| JetError::Domain { function: "division", value: other.value() })?;
        self.try_mul(&inv)
    }

    /// Integer power by repeated multiplication (negative exponents go through [`Jet::recip`]).
    pub fn powi(&self, exponent: i32) -> Result<Self, JetError> {
        let base = if exponent < 0 { self.recip()? } else { self.clone() };
        let mut remaining = exponent.unsigned_abs();
        let mut acc = Jet::constant(&self.space, 1.0).truncate(self.order);
        let mut square = base;
        while remaining > 0 {
            if remaining & 1 == 1 {
                acc = acc.try_mul(&square)?;
            }
            remaining >>= 1;
            if remaining > 0 {
                square = square.try_mul(&square)?;
            }
        }
        Ok(acc)
    }

    /// Largest absolute coefficient difference against `other` over the shared order.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let len = self.space.len_upto(self.order.min(other.order));
        self.coeffs[..len].iter().zip(&other.coeffs[..len]).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$inner(rhs).expect("jets from the same space")
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let c = Jet::constant(&self.space, rhs);
                self.$inner(&c).expect("same space")
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
