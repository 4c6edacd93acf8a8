//! Truncated-jet differential geometry for Finsler metrics and doubly warped products.
//!
//! All curvature quantities are computed from `F^2` alone: the metric is evaluated on
//! multivariate Taylor jets and the required mixed partials are read off the coefficients.
#![no_std]
// `!(a > b)` is deliberate throughout: it rejects NaN along with the failing comparison
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod expr;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod scalar;
pub mod dd;
pub mod tensor;
pub mod dwp;
pub mod curvature;
pub mod closedform;
pub mod classify;
pub mod oracle;
