//! Exact rational scalars and the integer-scaled helpers used by every
//! recursion and constant check in the crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always reduced with a positive denominator.
pub type ExactRational = BigRational;

/// Shorthand constructor `num/den`.
pub fn rat(num: i64, den: i64) -> ExactRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> ExactRational {
    BigRational::from_integer(BigInt::from(value))
}

/// Nearest `f64`. Falls back to a scaled division when numerator or
/// denominator overflow the `f64` exponent range on their own.
pub fn to_f64(value: &ExactRational) -> f64 {
    if let Some(v) = value.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let num_bits = value.numer().bits() as i64;
    let den_bits = value.denom().bits() as i64;
    let shift = (num_bits - den_bits - 60).max(0) as usize;
    let scaled_den = value.denom().clone() << shift;
    let q = BigRational::new(value.numer().clone(), scaled_den);
    q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact conversion of an `f64` (a dyadic rational) into an `ExactRational`.
pub fn from_f64_exact(value: f64) -> Option<ExactRational> {
    BigRational::from_float(value)
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.25"` or
/// `"-1.5e-3"` into an exact rational without passing through binary floats.
pub fn parse_rational(text: &str) -> Result<ExactRational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{whole}{frac}");
    let mut value = BigRational::from_integer(all_digits.parse::<BigInt>().map_err(|_| bad())?);
    let scale = exponent - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// `p/q` rendering used by every exported artifact.
pub fn to_fraction_string(value: &ExactRational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

fn perfect_square_root(value: &BigInt) -> Option<BigInt> {
    if value.is_negative() {
        return None;
    }
    let r = value.sqrt();
    (&r * &r == *value).then_some(r)
}

/// Rational square root when `value` is the square of a rational.
pub fn rational_sqrt(value: &ExactRational) -> Option<ExactRational> {
    let n = perfect_square_root(value.numer())?;
    let d = perfect_square_root(value.denom())?;
    Some(BigRational::new(n, d))
}

/// Lower and upper rational bounds for `sqrt(value)` whose gap is at most
/// `2^-bits`.
pub fn sqrt_bounds(value: &ExactRational, bits: u32) -> (ExactRational, ExactRational) {
    assert!(!value.is_negative(), "square root of a negative rational");
    let scale = BigInt::one() << (2 * bits as usize);
    // sqrt(p/q) = sqrt(p*q)/q
    let radicand = value.numer() * value.denom() * scale;
    let root = radicand.sqrt();
    let den = value.denom() << bits as usize;
    let lo = BigRational::new(root.clone(), den.clone());
    let hi = if &root * &root == radicand { lo.clone() } else { BigRational::new(root + 1, den) };
    (lo, hi)
}

/// Decides exactly whether `sum_k coeff_k * sqrt(radicand_k)` is zero.
///
/// Square roots of positive rationals whose pairwise ratios are not rational
/// squares are linearly independent over the rationals, so the sum vanishes
/// iff every class of mutually commensurable roots has a vanishing rational
/// coefficient sum.
pub fn signed_sqrt_sum_is_zero(terms: &[(i64, ExactRational)]) -> bool {
    let mut classes: Vec<(ExactRational, ExactRational)> = Vec::new(); // (representative radicand, coefficient)
    for (coeff, radicand) in terms {
        if *coeff == 0 || radicand.is_zero() {
            continue;
        }
        let mut placed = false;
        for (rep, acc) in classes.iter_mut() {
            if let Some(ratio_root) = rational_sqrt(&(radicand / &*rep)) {
                *acc += int(*coeff) * ratio_root;
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push((radicand.clone(), int(*coeff)));
        }
    }
    classes.iter().all(|(_, acc)| acc.is_zero())
}

/// Interval for `sum_k coeff_k * sqrt(radicand_k)`, each root bounded to
/// `2^-bits`.
pub fn signed_sqrt_sum_bounds(terms: &[(i64, ExactRational)], bits: u32) -> (ExactRational, ExactRational) {
    let mut lo = ExactRational::zero();
    let mut hi = ExactRational::zero();
    for (coeff, radicand) in terms {
        let (r_lo, r_hi) = sqrt_bounds(radicand, bits);
        let c = int(*coeff);
        if *coeff >= 0 {
            lo += &c * r_lo;
            hi += &c * r_hi;
        } else {
            lo += &c * r_hi;
            hi += &c * r_lo;
        }
    }
    (lo, hi)
}
