//! Scalar abstraction shared by the exact algebra and the numeric geometry.
//!
//! Exact rationals make every rank and ideal-membership decision
//! tolerance-free; floats are used by the geometric side, where zero tests
//! go through [`Scalar::is_negligible`].

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Field scalar usable as a jet coefficient.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Whether the value counts as zero for rank and support decisions.
    fn is_negligible(&self) -> bool;

    /// `numer / denom`, exact when the scalar type allows it.
    fn ratio(numer: i64, denom: i64) -> Self;

    /// Whether arithmetic in this type is exact.
    const EXACT: bool;

    /// Rescales a nonempty sparse row in place. Elimination works with any
    /// nonzero multiple of a row; the default makes the leading entry one.
    fn normalize_row(row: &mut [(usize, Self)]) {
        let inv = Self::one() / row[0].1.clone();
        for e in row.iter_mut() {
            e.1 = e.1.clone() * inv.clone();
        }
    }

    /// `scale * row - factor * pivot_row` on sparse rows sorted by column.
    fn combine_rows(scale: &Self, row: &[(usize, Self)], factor: &Self, pivot_row: &[(usize, Self)]) -> Vec<(usize, Self)> {
        crate::linalg::combine_generic(scale, row, factor, pivot_row)
    }
}

/// Absolute zero threshold for `f64` coefficients.
pub const F64_ZERO: f64 = 1e-12;
/// Absolute zero threshold for `f32` coefficients.
pub const F32_ZERO: f32 = 1e-6;

impl Scalar for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() <= F64_ZERO
    }
    fn ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }
    const EXACT: bool = false;
}

impl Scalar for f32 {
    fn is_negligible(&self) -> bool {
        self.abs() <= F32_ZERO
    }
    fn ratio(numer: i64, denom: i64) -> Self {
        numer as f32 / denom as f32
    }
    const EXACT: bool = false;
}

impl Scalar for BigRational {
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }
    const EXACT: bool = true;

    // primitive integer row with positive leading entry, which keeps
    // fraction-free elimination from growing coefficients
    fn normalize_row(row: &mut [(usize, Self)]) {
        let lcm = row.iter().fold(BigInt::one(), |acc, e| acc.lcm(e.1.denom()));
        let ints: Vec<BigInt> = row.iter().map(|e| e.1.numer() * (&lcm / e.1.denom())).collect();
        let mut g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
        if ints[0].is_negative() {
            g = -g;
        }
        for (e, v) in row.iter_mut().zip(ints) {
            e.1 = BigRational::from_integer(v / &g);
        }
    }

    // rows are primitive integer vectors here, so work on numerators only
    fn combine_rows(scale: &Self, row: &[(usize, Self)], factor: &Self, pivot_row: &[(usize, Self)]) -> Vec<(usize, Self)> {
        if !(scale.is_integer() && factor.is_integer() && row.iter().chain(pivot_row).all(|e| e.1.is_integer())) {
            return crate::linalg::combine_generic(scale, row, factor, pivot_row);
        }
        let (a, b) = (scale.numer(), factor.numer());
        let mut out = Vec::with_capacity(row.len() + pivot_row.len());
        let (mut i, mut j) = (0, 0);
        while i < row.len() || j < pivot_row.len() {
            let ci = row.get(i).map_or(usize::MAX, |e| e.0);
            let cj = pivot_row.get(j).map_or(usize::MAX, |e| e.0);
            let v: BigInt = if ci < cj {
                i += 1;
                a * row[i - 1].1.numer()
            } else if cj < ci {
                j += 1;
                -(b * pivot_row[j - 1].1.numer())
            } else {
                i += 1;
                j += 1;
                a * row[i - 1].1.numer() - b * pivot_row[j - 1].1.numer()
            };
            if !v.is_zero() {
                out.push((ci.min(cj), BigRational::from_integer(v)));
            }
        }
        out
    }
}

/// Parses `"p/q"`, `"-3"`, or a finite decimal such as `"0.125"` exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

/// Renders a rational as `"p"` or `"p/q"`.
pub fn format_rational(value: &BigRational) -> String {
    if value.denom() == &BigInt::from(1) {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Best rational approximation of `x` within `tol * max(1, |x|)`, found
/// through continued-fraction convergents (denominators up to `max_denom`).
/// Falls back to the exact binary value of `x`.
pub fn approximate_rational(x: f64, tol: f64, max_denom: i64) -> BigRational {
    if !x.is_finite() {
        return BigRational::zero();
    }
    let bound = tol * x.abs().max(1.0);
    if x.abs() <= bound {
        return BigRational::zero();
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_denom as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64) / (k1 as f64) - x).abs() <= bound {
            return BigRational::new(BigInt::from(h1), BigInt::from(k1));
        }
        let frac = rest - a;
        if frac.abs() < 1e-300 {
            break;
        }
        rest = 1.0 / frac;
    }
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

/// Converts any scalar to `f64` (lossy for big rationals).
pub fn to_f64<S: Scalar>(value: &S) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::ratio(p, d)
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/3"), Some(q(1, 3)));
        assert_eq!(parse_rational("-2/4"), Some(q(-1, 2)));
        assert_eq!(parse_rational("0.4"), Some(q(2, 5)));
        assert_eq!(parse_rational("-1.25e1"), Some(q(-25, 2)));
        assert_eq!(parse_rational("7"), Some(q(7, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
    }

    #[test]
    fn approximates_simple_fractions() {
        assert_eq!(approximate_rational(-0.125, 1e-12, 1_000_000), q(-1, 8));
        assert_eq!(approximate_rational(1.0 / 3.0 + 1e-14, 1e-10, 1_000_000), q(1, 3));
        assert_eq!(approximate_rational(3e-13, 1e-10, 1_000_000), q(0, 1));
    }

    #[test]
    fn format_round_trips() {
        for v in [q(3, 7), q(-5, 1), q(0, 1)] {
            assert_eq!(parse_rational(&format_rational(&v)), Some(v));
        }
    }
}
