//! Dense univariate polynomials with exact rational coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::{rat, to_f64, ExactRational};

/// Coefficient of `x^k` stored at index `k`; trailing zeros are trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<ExactRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<ExactRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: ExactRational) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![ExactRational::zero(), ExactRational::one()])
    }

    pub fn coeffs(&self) -> &[ExactRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn scale(&self, factor: &ExactRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigInt::from(k))
                .collect(),
        )
    }

    pub fn eval(&self, x: &ExactRational) -> ExactRational {
        self.coeffs
            .iter()
            .rev()
            .fold(ExactRational::zero(), |acc, c| acc * x + c)
    }

    /// Horner evaluation in `f64`. Only well conditioned for low degree.
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + to_f64(c))
    }

    /// Exact value of the integral over `[-1, 1]`.
    pub fn integrate_symmetric(&self) -> ExactRational {
        self.coeffs
            .iter()
            .enumerate()
            .step_by(2)
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| c * rat(2, k as i64 + 1))
            .fold(ExactRational::zero(), |acc, t| acc + t)
    }
}

impl Add for &RationalPoly {
    type Output = RationalPoly;
    fn add(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = ExactRational::zero();
        RationalPoly::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&zero) + rhs.coeffs.get(k).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl Sub for &RationalPoly {
    type Output = RationalPoly;
    fn sub(self, rhs: &RationalPoly) -> RationalPoly {
        self + &(-rhs)
    }
}

impl Neg for &RationalPoly {
    type Output = RationalPoly;
    fn neg(self) -> RationalPoly {
        RationalPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &RationalPoly {
    type Output = RationalPoly;
    fn mul(self, rhs: &RationalPoly) -> RationalPoly {
        if self.is_zero() || rhs.is_zero() {
            return RationalPoly::zero();
        }
        let mut out = vec![ExactRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        RationalPoly::new(out)
    }
}

impl Mul<&ExactRational> for &RationalPoly {
    type Output = RationalPoly;
    fn mul(self, rhs: &ExactRational) -> RationalPoly {
        self.scale(rhs)
    }
}

/// Integer polynomial product (schoolbook convolution).
pub fn convolve(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// `∫_{-1}^{1} sum_k c_k x^k dx` for integer coefficients.
pub fn integrate_integer_symmetric(coeffs: &[BigInt]) -> ExactRational {
    coeffs
        .iter()
        .enumerate()
        .step_by(2)
        .filter(|(_, c)| !c.is_zero())
        .fold(ExactRational::zero(), |acc, (k, c)| {
            acc + ExactRational::new(c * 2, BigInt::from(k + 1))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn arithmetic_and_calculus() {
        let p = RationalPoly::new(vec![int(1), int(2), int(3)]); // 1 + 2x + 3x^2
        let q = RationalPoly::x();
        assert_eq!((&p * &q).coeffs(), &[int(0), int(1), int(2), int(3)]);
        assert_eq!(p.derivative().coeffs(), &[int(2), int(6)]);
        assert_eq!(p.eval(&rat(1, 2)), rat(11, 4));
        // ∫ 1 + 2x + 3x^2 = 2 + 0 + 2
        assert_eq!(p.integrate_symmetric(), int(4));
        assert!((&p - &p).is_zero());
        assert_eq!((&p - &p).degree(), None);
    }

    #[test]
    fn integer_convolution_matches_rational_product() {
        let a = vec![BigInt::from(-1), BigInt::from(0), BigInt::from(3)];
        let b = vec![BigInt::from(2), BigInt::from(5)];
        let c = convolve(&a, &b);
        let pa = RationalPoly::new(a.iter().map(|v| ExactRational::from_integer(v.clone())).collect());
        let pb = RationalPoly::new(b.iter().map(|v| ExactRational::from_integer(v.clone())).collect());
        let pc = &pa * &pb;
        assert_eq!(integrate_integer_symmetric(&c), pc.integrate_symmetric());
    }
}
