//! Double-double arithmetic: an unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, giving
//! about 32 significant digits. Used where nested finite differences would otherwise drown in
//! `f64` roundoff.

use core::cmp::Ordering;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::jet::{Elementary, JetError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd { hi: core::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };
const FRAC_PI_2: Dd = Dd { hi: core::f64::consts::FRAC_PI_2, lo: 6.123_233_995_736_766e-17 };
/// Argument halvings before the exponential series.
const EXP_HALVINGS: i32 = 10;
const SERIES_TERMS: usize = 30;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn split(a: f64) -> (f64, f64) {
    let t = 134_217_729.0 * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub const fn new(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Exact multiplication by `2^k`.
    fn ldexp(self, k: i32) -> Self {
        Self { hi: libm::scalbn(self.hi, k), lo: libm::scalbn(self.lo, k) }
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::ZERO;
        }
        let s = Dd::new(libm::sqrt(self.hi));
        s + (self - s * s) / (s * 2.0)
    }

    /// `e^x - 1`, accurate near zero.
    fn expm1_reduced(r: Dd) -> Dd {
        let mut term = r;
        let mut sum = r;
        for k in 2..SERIES_TERMS {
            term = term * r / k as f64;
            sum = sum + term;
            if term.hi.abs() < 1e-36 * sum.hi.abs() {
                break;
            }
        }
        sum
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        let k = libm::round(self.hi / LN2.hi);
        let r = (self - LN2 * k).ldexp(-EXP_HALVINGS);
        let mut p = Self::expm1_reduced(r);
        for _ in 0..EXP_HALVINGS {
            // (1 + p)^2 - 1, kept in the small form to avoid cancellation
            p = p * (p + 2.0);
        }
        (p + 1.0).ldexp(k as i32)
    }

    /// Natural log by one Newton step on `exp` from the `f64` value.
    pub fn ln(self) -> Self {
        let y = Dd::new(libm::log(self.hi));
        y + self * (-y).exp() - 1.0
    }

    /// `(sin, cos)` of an argument reduced to `[-pi/4, pi/4]`.
    fn sin_cos_reduced(r: Dd) -> (Dd, Dd) {
        let r2 = r * r;
        let mut sin = r;
        let mut cos = Dd::ONE;
        let mut term_s = r;
        let mut term_c = Dd::ONE;
        for k in 1..SERIES_TERMS {
            let a = (2 * k) as f64;
            term_c = -(term_c * r2) / ((a - 1.0) * a);
            term_s = -(term_s * r2) / (a * (a + 1.0));
            cos = cos + term_c;
            sin = sin + term_s;
            if term_c.hi.abs() < 1e-36 && term_s.hi.abs() < 1e-36 {
                break;
            }
        }
        (sin, cos)
    }

    pub fn sin_cos(self) -> (Self, Self) {
        let k = libm::round(self.hi / FRAC_PI_2.hi);
        let r = self - FRAC_PI_2 * k;
        let (s, c) = Self::sin_cos_reduced(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            Dd::ONE / acc
        } else {
            acc
        }
    }

    pub fn powf(self, p: f64) -> Self {
        if p == libm::trunc(p) && p.abs() <= 64.0 {
            return self.powi(p as i32);
        }
        if self.hi == 0.0 {
            return Self::ZERO;
        }
        (self.ln() * p).exp()
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd::new(v)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    fn add(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        Dd::renorm(s, e + self.lo)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Sub<f64> for Dd {
    type Output = Dd;
    fn sub(self, b: f64) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        Dd::renorm(p, e + self.lo * b)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        Dd::renorm(q1, q2) + q3
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, b: f64) -> Dd {
        self / Dd::new(b)
    }
}

impl Scalar for Dd {
    fn lift_constant(&self, value: f64) -> Self {
        Dd::new(value)
    }
    fn value(&self) -> f64 {
        self.hi
    }
    fn add(&self, rhs: &Self) -> Self {
        *self + *rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        *self - *rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        *self * *rhs
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn scale(&self, factor: f64) -> Self {
        *self * factor
    }
    fn apply(&self, f: Elementary) -> Result<Self, JetError> {
        f.check_value(self.hi)?;
        Ok(match f {
            Elementary::Exp => self.exp(),
            Elementary::Log => self.ln(),
            Elementary::Sin => self.sin_cos().0,
            Elementary::Cos => self.sin_cos().1,
            Elementary::Sqrt => Dd::sqrt(*self),
            Elementary::Pow(p) => self.powf(p),
            Elementary::Powi(n) => Dd::powi(*self, n),
        })
    }
    fn div(&self, rhs: &Self) -> Result<Self, JetError> {
        if rhs.hi == 0.0 {
            return Err(JetError::Domain { function: "division", value: 0.0 });
        }
        Ok(*self / *rhs)
    }
    fn square(&self) -> Self {
        *self * *self
    }
    fn powi(&self, n: i32) -> Result<Self, JetError> {
        if n < 0 && self.hi == 0.0 {
            return Err(JetError::Domain { function: "powi", value: 0.0 });
        }
        Ok(Dd::powi(*self, n))
    }
}

/// Inverse of a row-major `n x n` matrix by Gauss-Jordan with partial pivoting.
pub fn inverse(m: &[Dd], n: usize) -> Option<alloc::vec::Vec<Dd>> {
    let mut a = m.to_vec();
    let mut inv = alloc::vec![Dd::ZERO; n * n];
    for i in 0..n {
        inv[i * n + i] = Dd::ONE;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r * n + col].abs().partial_cmp(&a[s * n + col].abs()).unwrap_or(Ordering::Equal))?;
        if !(a[pivot * n + col].hi.abs() > 0.0) {
            return None;
        }
        for k in 0..n {
            a.swap(col * n + k, pivot * n + k);
            inv.swap(col * n + k, pivot * n + k);
        }
        let p = a[col * n + col];
        for k in 0..n {
            a[col * n + k] = a[col * n + k] / p;
            inv[col * n + k] = inv[col * n + k] / p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f.hi == 0.0 {
                continue;
            }
            for k in 0..n {
                a[r * n + k] = a[r * n + k] - f * a[col * n + k];
                inv[r * n + k] = inv[r * n + k] - f * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: Dd, tol: f64) -> bool {
        (a - b).abs().hi <= tol * b.abs().hi.max(1.0)
    }

    #[test]
    fn euler_number() {
        let e = Dd::ONE.exp();
        assert_eq!(e.hi, core::f64::consts::E);
        assert!((e.lo - 1.445_646_891_729_250_2e-16).abs() < 1e-31);
    }

    #[test]
    fn inverse_pairs() {
        for &x in &[0.3, 1.0, 2.5, 17.0, 1e-3] {
            let d = Dd::new(x) + Dd { hi: 0.0, lo: x * 1e-20 };
            assert!(close(d.ln().exp(), d, 1e-30), "{x}");
            assert!(close(d.sqrt().square(), d, 1e-31), "{x}");
            assert!(close(d.powf(0.37).powf(1.0 / 0.37), d, 1e-15), "{x}");
            let (s, c) = d.sin_cos();
            assert!(close(s * s + c * c, Dd::ONE, 1e-30), "{x}");
            assert!((s.hi - libm::sin(x)).abs() < 1e-15 && (c.hi - libm::cos(x)).abs() < 1e-15);
            assert!(close(d * (Dd::ONE / d), Dd::ONE, 1e-31));
        }
    }

    #[test]
    fn ln2_and_pi() {
        assert!(close(Dd::new(2.0).ln(), LN2, 1e-31));
        let (s, _) = (FRAC_PI_2 * 2.0).sin_cos();
        assert!(s.abs().hi < 1e-31);
    }

    #[test]
    fn matrix_inverse() {
        let m: alloc::vec::Vec<Dd> = [4.0, 1.0, 2.0, 3.0].iter().map(|&v| Dd::new(v)).collect();
        let inv = inverse(&m, 2).unwrap();
        assert!(close(inv[0], Dd::new(3.0) / 10.0, 1e-31));
        assert!(close(inv[1], Dd::new(-1.0) / 10.0, 1e-31));
    }
}
