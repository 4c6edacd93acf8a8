use alloc::vec::Vec;

use super::{Jet, JetError};

/// Univariate functions that can be composed with a jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    /// `t -> t^p` for a real constant `p`; needs a positive constant term unless `p` is integral.
    Pow(f64),
    /// `t -> t^n`; needs a nonzero constant term when `n < 0`.
    Powi(i32),
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Sqrt => "sqrt",
            Self::Pow(_) => "pow",
            Self::Powi(_) => "powi",
        }
    }

    /// Plain real evaluation with the same domain rules as the jet path.
    pub fn eval(self, t: f64) -> Result<f64, JetError> {
        self.check_domain(t, false)?;
        Ok(match self {
            Self::Exp => libm::exp(t),
            Self::Log => libm::log(t),
            Self::Sin => libm::sin(t),
            Self::Cos => libm::cos(t),
            Self::Sqrt => libm::sqrt(t),
            Self::Pow(p) => libm::pow(t, p),
            Self::Powi(n) => libm::pow(t, n as f64),
        })
    }

    /// Domain rules of [`Elementary::eval`] without evaluating.
    pub fn check_value(self, t: f64) -> Result<(), JetError> {
        self.check_domain(t, false)
    }

    fn check_domain(self, t: f64, needs_smoothness: bool) -> Result<(), JetError> {
        let bad = match self {
            Self::Exp | Self::Sin | Self::Cos => !t.is_finite(),
            Self::Log => !(t > 0.0),
            Self::Sqrt => !(t > 0.0 || (t == 0.0 && !needs_smoothness)),
            Self::Pow(p) => {
                let integral = p == libm::trunc(p);
                let nonneg_int = integral && p >= 0.0;
                !(t > 0.0 || nonneg_int || (integral && t != 0.0) || (t == 0.0 && p > 0.0 && !needs_smoothness))
            }
            Self::Powi(n) => n < 0 && t == 0.0,
        };
        if bad {
            Err(JetError::Domain { function: self.name(), value: t })
        } else {
            Ok(())
        }
    }

    /// `f^(m)(t) / m!` for `m = 0..=order`.
    fn taylor_coefficients(self, t: f64, order: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(order + 1);
        match self {
            Self::Exp => {
                let e = libm::exp(t);
                let mut fact = 1.0;
                for m in 0..=order {
                    if m > 0 {
                        fact *= m as f64;
                    }
                    out.push(e / fact);
                }
            }
            Self::Log => {
                out.push(libm::log(t));
                let mut power = 1.0;
                for m in 1..=order {
                    power *= t;
                    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                    out.push(sign / (m as f64 * power));
                }
            }
            Self::Sin | Self::Cos => {
                let (s, c) = (libm::sin(t), libm::cos(t));
                // derivative cycle of sin: s, c, -s, -c
                let cycle = if self == Self::Sin { [s, c, -s, -c] } else { [c, -s, -c, s] };
                let mut fact = 1.0;
                for m in 0..=order {
                    if m > 0 {
                        fact *= m as f64;
                    }
                    out.push(cycle[m % 4] / fact);
                }
            }
            Self::Sqrt => return Self::Pow(0.5).taylor_coefficients(t, order),
            Self::Pow(p) => {
                // binomial(p, m) * t^(p - m)
                let mut binom = 1.0;
                for m in 0..=order {
                    if m > 0 {
                        binom *= (p - (m as f64 - 1.0)) / m as f64;
                    }
                    out.push(if binom == 0.0 { 0.0 } else { binom * libm::pow(t, p - m as f64) });
                }
            }
            Self::Powi(n) => return Self::Pow(n as f64).taylor_coefficients(t, order),
        }
        out
    }
}

impl Jet {
    /// Composes `f` with this jet: `f(a0 + r) = sum_m f^(m)(a0)/m! r^m` with `r` nilpotent.
    pub fn apply(&self, f: Elementary) -> Result<Self, JetError> {
        let a0 = self.value();
        f.check_domain(a0, self.order > 0)?;
        if let Elementary::Powi(n) = f {
            if n >= 0 {
                return self.powi(n);
            }
        }
        let taylor = f.taylor_coefficients(a0, self.order);
        let mut rest = self.clone();
        rest.coeffs[0] = 0.0;
        // Horner in the nilpotent part.
        let mut acc = Jet::constant(&self.space, taylor[self.order]).truncate(self.order);
        for m in (0..self.order).rev() {
            acc = acc.try_mul(&rest)?;
            acc.coeffs[0] += taylor[m];
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Exp)
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Log)
    }

    pub fn sin(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Sin)
    }

    pub fn cos(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Cos)
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Sqrt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;
    use alloc::sync::Arc;

    fn lift(value: f64, order: usize) -> Jet {
        let s = Arc::new(JetSpace::new(1, order).unwrap());
        Jet::variable(&s, value, 0).unwrap()
    }

    #[test]
    fn exp_derivatives_are_exp() {
        let x = lift(0.7, 6);
        let e = x.exp().unwrap();
        let expected = libm::exp(0.7);
        for k in 0..=6u8 {
            let d = e.extract(&[k]).unwrap();
            assert!(((d - expected) / expected).abs() < 1e-12, "order {k}");
        }
    }

    #[test]
    fn sqrt_of_constant() {
        let s = Arc::new(JetSpace::new(2, 3).unwrap());
        let c = Jet::constant(&s, 4.0).sqrt().unwrap();
        assert_eq!(c.value(), 2.0);
        assert!(c.coeffs()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sin_maclaurin() {
        let s = lift(0.0, 3).sin().unwrap();
        let expected = [0.0, 1.0, 0.0, -1.0 / 6.0];
        for (c, e) in s.coeffs().iter().zip(expected) {
            assert!((c - e).abs() < 1e-15);
        }
    }

    #[test]
    fn cos_derivative_cycle() {
        let c = lift(0.3, 5).cos().unwrap();
        let expected = [libm::cos(0.3), -libm::sin(0.3), -libm::cos(0.3), libm::sin(0.3), libm::cos(0.3)];
        for (k, e) in expected.iter().enumerate() {
            assert!((c.extract(&[k as u8]).unwrap() - e).abs() < 1e-13);
        }
    }

    #[test]
    fn domain_errors_name_the_function() {
        let x = lift(-1.0, 2);
        assert_eq!(x.ln().unwrap_err(), JetError::Domain { function: "log", value: -1.0 });
        assert_eq!(x.sqrt().unwrap_err(), JetError::Domain { function: "sqrt", value: -1.0 });
        let zero = lift(0.0, 2);
        assert!(matches!(zero.recip(), Err(JetError::Domain { .. })));
        assert!(matches!(zero.sqrt(), Err(JetError::Domain { function: "sqrt", .. })));
    }

    #[test]
    fn pow_half_matches_sqrt() {
        let x = lift(2.5, 5);
        let a = x.apply(Elementary::Pow(0.5)).unwrap();
        let b = x.sqrt().unwrap();
        assert!(a.max_coeff_diff(&b) < 1e-15);
        let identity = (&b * &b).max_coeff_diff(&x);
        assert!(identity < 1e-14);
    }

    #[test]
    fn log_of_exp_round_trip() {
        let s = Arc::new(JetSpace::new(3, 5).unwrap());
        let v: Vec<Jet> = (0..3).map(|i| Jet::variable(&s, 0.1 * i as f64 + 0.2, i).unwrap()).collect();
        let f = &(&v[0] * &v[1]) + &v[2].sin().unwrap();
        let back = f.exp().unwrap().ln().unwrap();
        assert!(back.max_coeff_diff(&f) < 1e-13);
    }
}
