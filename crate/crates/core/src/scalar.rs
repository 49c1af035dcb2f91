//! Numeric values used by profiles and mechanisms.
//!
//! Every mechanism is generic over [`Scalar`] so the same code runs on exact
//! rationals (enumeration engines, exact checks) and on `f64` (Monte Carlo).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + PartialOrd
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn is_finite(&self) -> bool;
    /// Arithmetic mean of two values.
    fn midpoint(a: &Self, b: &Self) -> Self;
    fn to_json(&self) -> serde_json::Value;
    fn from_json(value: &serde_json::Value) -> Result<Self>;

    /// Total order on finite values.
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other)
            .expect("scalar values are finite and totally ordered")
    }

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&int(v))
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn midpoint(a: &Self, b: &Self) -> Self {
        (a + b) / 2.0
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::from(*self)
    }

    fn from_json(value: &serde_json::Value) -> Result<Self> {
        match value {
            serde_json::Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::parse(n.to_string(), "not representable as f64")),
            serde_json::Value::String(s) => Ok(rational_to_f64(&parse_rational(s)?)),
            other => Err(Error::parse(other.to_string(), "expected a number")),
        }
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn midpoint(a: &Self, b: &Self) -> Self {
        (a + b) / int(2)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rational(self))
    }

    fn from_json(value: &serde_json::Value) -> Result<Self> {
        json_to_rational(value)
    }
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(r) {
        return v;
    }
    // Very large numerators/denominators: fall back to scaled division.
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Exact binary value of a finite float.
pub fn f64_to_rational(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::parse(v.to_string(), "not a finite number"))
}

/// Formats as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, an integer, or a plain decimal such as `0.25` (read exactly
/// in base ten).
pub fn parse_rational(token: &str) -> Result<Rational> {
    let t = token.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|e| Error::parse(token, e.to_string()))?;
        let d = BigInt::from_str(d.trim()).map_err(|e| Error::parse(token, e.to_string()))?;
        if d.is_zero() {
            return Err(Error::parse(token, "zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !whole_digits.chars().all(|c| c.is_ascii_digit())
            || (whole_digits.is_empty() && frac.is_empty())
        {
            return Err(Error::parse(token, "not a decimal number"));
        }
        let digits = format!("{whole_digits}{frac}");
        let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
            .map_err(|e| Error::parse(token, e.to_string()))?;
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(numer, denom);
        return Ok(if negative { -r } else { r });
    }
    BigInt::from_str(t)
        .map(Rational::from_integer)
        .map_err(|e| Error::parse(token, e.to_string()))
}

/// Reads a JSON number (exact binary value) or a rational string.
pub fn json_to_rational(value: &serde_json::Value) -> Result<Rational> {
    match value {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(int(i))
            } else {
                f64_to_rational(
                    n.as_f64()
                        .ok_or_else(|| Error::parse(n.to_string(), "not a number"))?,
                )
            }
        }
        other => Err(Error::parse(other.to_string(), "expected a number or \"p/q\"")),
    }
}

/// Emits a JSON number when the float with the same value exists, otherwise a
/// `"p/q"` string. Round-trips through [`json_to_rational`] bit-exactly.
pub fn rational_to_json_number(r: &Rational) -> serde_json::Value {
    let v = rational_to_f64(r);
    if v.is_finite() && Rational::from_float(v).as_ref() == Some(r) {
        if r.denom().is_one() {
            if let Some(i) = r.numer().to_i64() {
                return serde_json::Value::from(i);
            }
        }
        serde_json::Value::from(v)
    } else {
        serde_json::Value::String(format_rational(r))
    }
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

/// `serde(with = ...)` adapter storing a rational as a `"p/q"` string.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}
