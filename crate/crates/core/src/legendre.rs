//! Legendre polynomial primitives.
//!
//! The exact layer works with rational coefficient vectors; the float layer
//! uses the three-term recurrence
//! `(n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}` and never evaluates high-degree
//! coefficient vectors in floating point.
//!
//! Exact coefficient vectors are practical up to degree ~500; the recurrence
//! path has no degree limit.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::RationalPoly;
use crate::rational::{binomial, factorial, ExactRational};

/// Largest degree the exact routines are specified for.
pub const MAX_DEGREE: usize = 10_000;

/// Slack allowed on `|x| <= 1` before the float evaluators reject input.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

/// `P_n` as an exact coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegendrePoly {
    degree: usize,
    poly: RationalPoly,
}

impl LegendrePoly {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of `x^k` at index `k`.
    pub fn coeffs(&self) -> &[ExactRational] {
        self.poly.coeffs()
    }

    pub fn as_poly(&self) -> &RationalPoly {
        &self.poly
    }

    pub fn into_poly(self) -> RationalPoly {
        self.poly
    }
}

/// Exact coefficients from the explicit sum
/// `P_n(x) = sum_k (-1)^k (2n-2k)! / (2^n k! (n-k)! (n-2k)!) x^{n-2k}`.
pub fn legendre_coeffs(n: usize) -> LegendrePoly {
    let mut coeffs = vec![ExactRational::zero(); n + 1];
    let two_pow = BigInt::one() << n;
    for k in 0..=n / 2 {
        let num = factorial((2 * n - 2 * k) as u64);
        let den = &two_pow * factorial(k as u64) * factorial((n - k) as u64) * factorial((n - 2 * k) as u64);
        let c = ExactRational::new(num, den);
        coeffs[n - 2 * k] = if k % 2 == 0 { c } else { -c };
    }
    LegendrePoly { degree: n, poly: RationalPoly::new(coeffs) }
}

/// Integer coefficients `c_k` with `P_n = 2^{-n} sum_k c_k x^k`, where
/// `c_{n-2k} = (-1)^k C(n,k) C(2n-2k,n)`.
pub fn legendre_scaled_integer_coeffs(n: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); n + 1];
    for k in 0..=n / 2 {
        let c = binomial(n as u64, k as u64) * binomial((2 * n - 2 * k) as u64, n as u64);
        out[n - 2 * k] = if k % 2 == 0 { c } else { -c };
    }
    out
}

fn check_domain(x: f64) -> Result<()> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_TOLERANCE {
        return Err(Error::Domain(format!("Legendre argument x = {x} outside [-1, 1]")));
    }
    Ok(())
}

/// `P_n(x)` by the three-term recurrence.
pub fn eval_legendre(n: usize, x: f64) -> Result<f64> {
    check_domain(x)?;
    Ok(legendre_recurrence(n, x).0)
}

/// `(P_n(x), P'_n(x))` by the coupled recurrences
/// `(k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}` and
/// `P'_{k+1} = P'_{k-1} + (2k+1) P_k`.
pub fn eval_legendre_with_derivative(n: usize, x: f64) -> Result<(f64, f64)> {
    check_domain(x)?;
    Ok(legendre_recurrence(n, x))
}

fn legendre_recurrence(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// `∫_{-1}^{1} x^k P_n(x) dx`.
///
/// Zero for `k < n` or `k - n` odd; `2^{n+1} (n!)^2 / (2n+1)!` at `k = n`;
/// otherwise `k! Γ((k-n+1)/2) / (2^n (k-n)! Γ((k+n+3)/2))`, evaluated here in
/// the equivalent factorial form `2^{n+1} k! s! / (r! (k+n+1)!)` with
/// `r = (k-n)/2`, `s = (k+n)/2`.
pub fn moment_integral(k: usize, n: usize) -> ExactRational {
    if k < n || (k - n) % 2 == 1 {
        return ExactRational::zero();
    }
    if k == n {
        let nf = factorial(n as u64);
        return ExactRational::new((BigInt::one() << (n + 1)) * &nf * &nf, factorial(2 * n as u64 + 1));
    }
    let r = (k - n) / 2;
    let s = (k + n) / 2;
    ExactRational::new(
        (BigInt::one() << (n + 1)) * factorial(k as u64) * factorial(s as u64),
        factorial(r as u64) * factorial((k + n + 1) as u64),
    )
}

/// `(2n)! / (2^n (n!)^2)`.
pub fn a_coeff(n: usize) -> ExactRational {
    let nf = factorial(n as u64);
    ExactRational::new(factorial(2 * n as u64), (BigInt::one() << n) * &nf * &nf)
}

/// Squared 3j symbol `(k l m; 0 0 0)^2 = A(s-k) A(s-l) A(s-m) / ((2s+1) A(s))`
/// with `2s = k+l+m`; zero off the triangle or for odd `k+l+m`.
pub fn three_j_squared(k: usize, l: usize, m: usize) -> ExactRational {
    let total = k + l + m;
    if total % 2 == 1 || m < k.abs_diff(l) || m > k + l {
        return ExactRational::zero();
    }
    let s = total / 2;
    a_coeff(s - k) * a_coeff(s - l) * a_coeff(s - m) / (a_coeff(s) * BigInt::from(2 * s + 1))
}

/// `P_k P_l = sum_m (3j)^2 (2m+1) P_m` for `m = |k-l|, |k-l|+2, ..., k+l`.
pub fn product_expansion(k: usize, l: usize) -> Vec<(usize, ExactRational)> {
    (k.abs_diff(l)..=k + l)
        .step_by(2)
        .map(|m| (m, three_j_squared(k, l, m) * BigInt::from(2 * m + 1)))
        .collect()
}

/// `∫ P_k P_l P_m = 2 (3j)^2`.
pub fn triple_product_integral(k: usize, l: usize, m: usize) -> ExactRational {
    three_j_squared(k, l, m) * BigInt::from(2)
}

/// `j(2j-1)`, the sup of `|P'_{2j-1}|` on `[-1, 1]`.
pub fn derivative_bound(j: usize) -> f64 {
    (j * (2 * j - 1)) as f64
}

/// Sup of `|φ_j'|` for `φ_j = sqrt(2j - 1/2) P_{2j-1}`.
pub fn eigenfunction_derivative_bound(j: usize) -> f64 {
    (2.0 * j as f64 - 0.5).sqrt() * derivative_bound(j)
}

/// `min_x j(2j-1) - |P'_{2j-1}(x)|` over `grid` equispaced points of `[-1, 1]`.
pub fn derivative_bound_margin(j: usize, grid: usize) -> Result<f64> {
    if j == 0 || grid < 2 {
        return Err(Error::Domain(format!("derivative_bound_margin needs j >= 1 and grid >= 2 (got j={j}, grid={grid})")));
    }
    let n = 2 * j - 1;
    let bound = derivative_bound(j);
    let step = 2.0 / (grid - 1) as f64;
    let margin = (0..grid)
        .map(|i| {
            let x = if i + 1 == grid { 1.0 } else { -1.0 + i as f64 * step };
            bound - legendre_recurrence(n, x).1.abs()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat, to_f64};
    use proptest::prelude::*;

    fn p(n: usize) -> RationalPoly {
        legendre_coeffs(n).into_poly()
    }

    fn scaled(n: usize) -> RationalPoly {
        let d = ExactRational::from_integer(BigInt::one() << n);
        RationalPoly::new(legendre_scaled_integer_coeffs(n).into_iter().map(|c| ExactRational::from_integer(c) / &d).collect())
    }

    #[test]
    fn low_degree_coefficients() {
        assert_eq!(legendre_coeffs(0).coeffs(), &[int(1)]);
        assert_eq!(legendre_coeffs(1).coeffs(), &[int(0), int(1)]);
        assert_eq!(legendre_coeffs(2).coeffs(), &[rat(-1, 2), int(0), rat(3, 2)]);
    }

    #[test]
    fn coefficient_invariants() {
        for n in 0..40 {
            let poly = legendre_coeffs(n);
            assert_eq!(poly.as_poly().eval(&int(1)), int(1));
            assert_eq!(poly.as_poly().eval(&int(-1)), int(if n % 2 == 0 { 1 } else { -1 }));
            assert_eq!(poly.coeffs()[n], a_coeff(n), "leading coefficient n={n}");
            for (k, c) in poly.coeffs().iter().enumerate() {
                if (k + n) % 2 == 1 {
                    assert!(c.is_zero());
                }
            }
            assert_eq!(scaled(n), p(n), "binomial route n={n}");
        }
    }

    #[test]
    fn recurrence_endpoints_and_origin() {
        for n in [0, 1, 2, 7, 50, 333] {
            assert_eq!(eval_legendre(n, 1.0).unwrap(), 1.0);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(eval_legendre(n, -1.0).unwrap(), sign);
        }
        assert_eq!(eval_legendre(2, 0.0).unwrap(), -0.5);
        assert!(eval_legendre(3, 1.5).is_err());
        assert!(eval_legendre(3, f64::NAN).is_err());
    }

    #[test]
    fn recurrence_agrees_with_exact_coefficients() {
        // exact rational evaluation at rational points, then one rounding
        for n in [1, 5, 17, 60, 120, 200] {
            let poly = p(n);
            for (num, den) in [(-1, 1), (-7, 9), (-1, 3), (0, 1), (1, 7), (5, 8), (99, 100), (1, 1)] {
                let x = rat(num, den);
                let exact = to_f64(&poly.eval(&x));
                let float = eval_legendre(n, num as f64 / den as f64).unwrap();
                assert!((exact - float).abs() <= 1e-12 * exact.abs().max(1e-3), "n={n} x={num}/{den}: {exact} vs {float}");
            }
        }
    }

    #[test]
    fn derivative_recurrence_matches_exact_derivative() {
        for n in [1, 2, 9, 30] {
            let d = p(n).derivative();
            for (num, den) in [(-1, 1), (-2, 5), (0, 1), (3, 10), (77, 100), (1, 1)] {
                let exact = to_f64(&d.eval(&rat(num, den)));
                let (_, float) = eval_legendre_with_derivative(n, num as f64 / den as f64).unwrap();
                assert!((exact - float).abs() < 1e-9 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn derivative_identity_is_exact() {
        // P'_{n+1} - P'_{n-1} = (2n+1) P_n, the identity behind the float derivative path
        for n in 1..40 {
            let lhs = &p(n + 1).derivative() - &p(n - 1).derivative();
            assert_eq!(lhs, p(n).scale(&int(2 * n as i64 + 1)));
        }
    }

    #[test]
    fn moments() {
        assert_eq!(moment_integral(1, 3), int(0));
        assert_eq!(moment_integral(3, 3), rat(4, 35));
        assert_eq!(moment_integral(2, 0), rat(2, 3));
        assert_eq!(moment_integral(4, 1), int(0));
        // against term-wise integration of x^k P_n
        for n in 0..15 {
            for k in 0..25 {
                let mut mono = vec![ExactRational::zero(); k + 1];
                mono[k] = int(1);
                let direct = (&RationalPoly::new(mono) * &p(n)).integrate_symmetric();
                assert_eq!(moment_integral(k, n), direct, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn a_coefficients() {
        assert_eq!(a_coeff(0), int(1));
        assert_eq!(a_coeff(1), int(1));
        assert_eq!(a_coeff(3), rat(5, 2));
    }

    #[test]
    fn product_expansion_examples() {
        assert_eq!(product_expansion(0, 6), vec![(6, int(1))]);
        assert_eq!(product_expansion(1, 1), vec![(0, rat(1, 3)), (2, rat(2, 3))]);
        for (k, l) in [(3, 5), (7, 2), (10, 10)] {
            let sum = product_expansion(k, l).into_iter().fold(ExactRational::zero(), |a, (_, c)| a + c);
            assert_eq!(sum, int(1));
        }
    }

    #[test]
    fn product_expansion_reproduces_products() {
        for k in 0..=30 {
            for l in 0..=30 {
                let expansion = product_expansion(k, l)
                    .into_iter()
                    .fold(RationalPoly::zero(), |acc, (m, c)| &acc + &p(m).scale(&c));
                assert_eq!(expansion, &p(k) * &p(l), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn triple_products() {
        assert_eq!(triple_product_integral(0, 0, 0), int(2));
        assert_eq!(triple_product_integral(1, 1, 0), rat(2, 3));
        assert_eq!(triple_product_integral(1, 2, 4), int(0));
        for (k, l, m) in [(2, 3, 5), (4, 4, 2), (6, 1, 5), (3, 3, 3)] {
            let direct = (&(&p(k) * &p(l)) * &p(m)).integrate_symmetric();
            assert_eq!(triple_product_integral(k, l, m), direct);
        }
    }

    #[test]
    fn recurrence_identities_re1_re2() {
        let x = RationalPoly::x();
        let one_minus_x2 = RationalPoly::new(vec![int(1), int(0), int(-1)]);
        for n in 1..=50 {
            let dn = p(n).derivative();
            let dn1 = p(n - 1).derivative();
            let nn = int(n as i64);
            assert_eq!(&(&x * &dn) - &dn1, p(n).scale(&nn), "re1 n={n}");
            assert_eq!(&one_minus_x2 * &dn, (&p(n - 1) - &(&x * &p(n))).scale(&nn), "re2 n={n}");
        }
    }

    #[test]
    fn derivative_margin_examples() {
        assert_eq!(derivative_bound_margin(1, 11).unwrap(), 0.0);
        // P'_3(±1) = 6 = 2·3
        let m2 = derivative_bound_margin(2, 1001).unwrap();
        assert!(m2.abs() < 1e-12);
        assert!(derivative_bound_margin(50, 100_000).unwrap() >= -1e-10);
        assert!(derivative_bound_margin(0, 10).is_err());
        assert!(derivative_bound_margin(3, 1).is_err());
        assert!(eigenfunction_derivative_bound(1) > derivative_bound(1));
    }

    proptest! {
        #[test]
        fn bounded_by_one(n in 0usize..400, x in -1.0f64..=1.0) {
            prop_assert!(eval_legendre(n, x).unwrap().abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn triple_product_symmetric(k in 0usize..25, l in 0usize..25, m in 0usize..25) {
            let v = triple_product_integral(k, l, m);
            prop_assert!(v >= ExactRational::zero());
            prop_assert_eq!(&v, &triple_product_integral(l, k, m));
            prop_assert_eq!(&v, &triple_product_integral(m, l, k));
            prop_assert_eq!(&v, &triple_product_integral(k, m, l));
            prop_assert_eq!(&v, &triple_product_integral(l, m, k));
            prop_assert_eq!(&v, &triple_product_integral(m, k, l));
        }
    }
}
