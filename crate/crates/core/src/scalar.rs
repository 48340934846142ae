//! Scalar abstraction shared by the exact (rational) and floating pipelines.
//!
//! Every quantity that enters the dynamics is generic over [`Scalar`]. The
//! exact implementation is [`BigRational`], which is closed under the field
//! operations used here; `f64` is the fallback for models whose parameter is
//! irrational (e.g. after normalizing an arbitrary planar pair).

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Absolute comparison tolerance used in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

pub trait Scalar: Clone + Debug + PartialOrd + Signed + Send + Sync + 'static {
    /// True for exact arithmetic.
    const EXACT: bool;

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact value, when representable (always in exact mode).
    fn to_rational(&self) -> Option<BigRational>;

    /// Equality up to the mode's tolerance (bit equality in exact mode).
    fn close(&self, other: &Self) -> bool;

    /// The mode's comparison slack: zero in exact mode.
    fn tolerance() -> Self;

    fn is_finite(&self) -> bool;

    /// Smallest integer not below `self`.
    fn ceil_i64(&self) -> Option<i64>;

    /// Storage size in bits (numerator plus denominator); zero for floats.
    fn size_bits(&self) -> u64;

    /// Human and machine readable rendering; exact values round-trip
    /// through [`parse_rational`].
    fn render(&self) -> String;

    fn from_int(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(v)))
    }

    /// `num / den` as a scalar. Panics on `den == 0`.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn parse(text: &str) -> Result<Self> {
        parse_rational(text).map(|r| Self::from_rational(&r))
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn close(&self, other: &Self) -> bool {
        self == other
    }

    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn ceil_i64(&self) -> Option<i64> {
        self.ceil().to_integer().to_i64()
    }

    fn size_bits(&self) -> u64 {
        self.numer().bits() + self.denom().bits()
    }

    fn render(&self) -> String {
        render_rational(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_float(*self)
    }

    fn close(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }

    fn tolerance() -> Self {
        FLOAT_TOLERANCE
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn ceil_i64(&self) -> Option<i64> {
        let c = self.ceil();
        if c.is_finite() && c.abs() < 9.0e18 {
            Some(c as i64)
        } else {
            None
        }
    }

    fn size_bits(&self) -> u64 {
        0
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }
}

/// Parses a decimal (`-0.42`, `3`, `.5`, `1e-3`) or a fraction (`-7/3`)
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Number(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if all_digits.is_empty() { BigInt::zero() } else { all_digits.parse().map_err(|_| bad())? };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(if negative { -value } else { value })
}

/// Shortest exact decimal when the denominator divides a power of ten,
/// otherwise `p/q`.
pub fn render_rational(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let den = r.denom().clone();
    let two = BigInt::from(2u8);
    let five = BigInt::from(5u8);
    let (mut twos, mut fives) = (0usize, 0usize);
    let mut rest = den.clone();
    while rest.is_even() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r.numer() * num_traits::pow(BigInt::from(10u8), places) / den;
    let digits = scaled.abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places);
    let sign = if scaled.is_negative() { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part}")
}

/// Fixed-point rendering rounded half away from zero, for report tables.
pub fn render_fixed<S: Scalar>(value: &S, places: usize) -> String {
    if S::EXACT {
        let exact = value.to_rational().unwrap_or_else(BigRational::zero);
        let scale = BigRational::from_integer(num_traits::pow(BigInt::from(10u8), places));
        let scaled = exact.abs() * scale;
        let half = BigRational::new(BigInt::one(), BigInt::from(2u8));
        let rounded = (scaled + half).floor().to_integer();
        let digits = format!("{:0>width$}", rounded.to_string(), width = places + 1);
        let (int_part, frac_part) = digits.split_at(digits.len() - places);
        let sign = if exact.is_negative() && !rounded.is_zero() { "-" } else { "" };
        if places == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    } else {
        format!("{:.*}", places, value.to_f64())
    }
}
