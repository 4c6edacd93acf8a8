//! The ring interface metric evaluators are written against.
//!
//! Both plain `f64` and [`Jet`] implement [`Scalar`], so a single evaluator produces either a
//! value or a full truncated Taylor expansion.

use core::fmt::Debug;

use crate::jet::{Elementary, Jet, JetError};

pub trait Scalar: Clone + Debug {
    /// A constant in the same ring as `self` (same jet space for jets).
    fn lift_constant(&self, value: f64) -> Self;
    /// Constant term.
    fn value(&self) -> f64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, factor: f64) -> Self;
    fn apply(&self, f: Elementary) -> Result<Self, JetError>;

    fn div(&self, rhs: &Self) -> Result<Self, JetError> {
        let inv = rhs.apply(Elementary::Powi(-1)).map_err(|_| JetError::Domain { function: "division", value: rhs.value() })?;
        Ok(self.mul(&inv))
    }

    fn square(&self) -> Self {
        self.mul(self)
    }

    fn sqrt(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Sqrt)
    }

    fn powi(&self, n: i32) -> Result<Self, JetError> {
        if n < 0 {
            return self.apply(Elementary::Powi(n));
        }
        let mut acc = self.lift_constant(1.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        Ok(acc)
    }
}

impl Scalar for f64 {
    fn lift_constant(&self, value: f64) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, factor: f64) -> Self {
        self * factor
    }
    fn apply(&self, f: Elementary) -> Result<Self, JetError> {
        f.eval(*self)
    }
    fn div(&self, rhs: &Self) -> Result<Self, JetError> {
        if *rhs == 0.0 {
            return Err(JetError::Domain { function: "division", value: 0.0 });
        }
        Ok(self / rhs)
    }
}

impl Scalar for Jet {
    fn lift_constant(&self, value: f64) -> Self {
        Jet::constant(self.space(), value)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, factor: f64) -> Self {
        Jet::scale(self, factor)
    }
    fn apply(&self, f: Elementary) -> Result<Self, JetError> {
        Jet::apply(self, f)
    }
}
