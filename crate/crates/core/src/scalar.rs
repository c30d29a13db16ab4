//! Numeric modes.
//!
//! Every space is parameterised by a [`Scalar`]: either an arbitrary-precision
//! rational ([`Exact`]) or an `f64`. Exact arithmetic never takes square roots,
//! so everything the checkers compute on products and sums of distances stays
//! closed and error-free. Float comparisons go through a single relative
//! tolerance `tau`: `a <= b` is accepted when `a <= b * (1 + tau) + tau`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arbitrary-precision rational used in exact mode.
pub type Exact = BigRational;

/// Default relative tolerance for float mode.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(ParseScalarError::new(other, "mode must be `exact` or `float`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse `{input}`: {reason}")]
pub struct ParseScalarError {
    pub input: String,
    pub reason: &'static str,
}

impl ParseScalarError {
    fn new(input: &str, reason: &'static str) -> Self {
        Self {
            input: input.to_owned(),
            reason,
        }
    }
}

/// A number type a finite metric space can be built over.
///
/// The arithmetic methods take references so that big rationals are not
/// cloned on hot paths.
pub trait Scalar: Clone + fmt::Debug + fmt::Display + PartialEq + PartialOrd + Send + Sync + 'static {
    const MODE: Mode;

    fn zero() -> Self;
    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    /// Division; callers guarantee a nonzero divisor.
    fn divide(&self, other: &Self) -> Self;

    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn total_cmp(&self, other: &Self) -> Ordering;
    fn to_f64(&self) -> f64;

    /// `self <= other` under the mode's comparison rule.
    fn approx_le(&self, other: &Self, tol: f64) -> bool;

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.approx_le(other, tol) && other.approx_le(self, tol)
    }

    /// Parses a matrix cell: decimal, scientific or `p/q` notation.
    fn parse_entry(s: &str) -> Result<Self, ParseScalarError>;

    /// Converts a float read from a document into this mode.
    fn from_f64(x: f64) -> Result<Self, ParseScalarError>;

    /// JSON form: a number in float mode, a `"p/q"` string in exact mode.
    fn to_json(&self) -> serde_json::Value;

    fn half(&self) -> Self {
        self.divide(&Self::from_ratio(2, 1))
    }

    fn abs_diff(&self, other: &Self) -> Self {
        if self.total_cmp(other) == Ordering::Less {
            other.minus(self)
        } else {
            self.minus(other)
        }
    }

    fn max_ref<'a>(&'a self, other: &'a Self) -> &'a Self {
        if self.total_cmp(other) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    #[inline]
    fn zero() -> Self {
        0.0
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    #[inline]
    fn plus(&self, other: &Self) -> Self {
        self + other
    }

    #[inline]
    fn minus(&self, other: &Self) -> Self {
        self - other
    }

    #[inline]
    fn times(&self, other: &Self) -> Self {
        self * other
    }

    #[inline]
    fn divide(&self, other: &Self) -> Self {
        self / other
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn is_positive(&self) -> bool {
        *self > 0.0
    }

    #[inline]
    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    #[inline]
    fn approx_le(&self, other: &Self, tol: f64) -> bool {
        *self <= other * (1.0 + tol) + tol
    }

    fn parse_entry(s: &str) -> Result<Self, ParseScalarError> {
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| ParseScalarError::new(s, "bad numerator"))?;
            let q: f64 = q
                .trim()
                .parse()
                .map_err(|_| ParseScalarError::new(s, "bad denominator"))?;
            if q == 0.0 {
                return Err(ParseScalarError::new(s, "zero denominator"));
            }
            return Self::from_f64(p / q);
        }
        let x: f64 = t
            .parse()
            .map_err(|_| ParseScalarError::new(s, "not a number"))?;
        Self::from_f64(x)
    }

    fn from_f64(x: f64) -> Result<Self, ParseScalarError> {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(ParseScalarError::new(&x.to_string(), "non-finite value"))
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

impl Scalar for Exact {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(numer.into(), denom.into())
    }

    #[inline]
    fn plus(&self, other: &Self) -> Self {
        self + other
    }

    #[inline]
    fn minus(&self, other: &Self) -> Self {
        self - other
    }

    #[inline]
    fn times(&self, other: &Self) -> Self {
        self * other
    }

    #[inline]
    fn divide(&self, other: &Self) -> Self {
        self / other
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }

    #[inline]
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn approx_le(&self, other: &Self, _tol: f64) -> bool {
        self <= other
    }

    fn parse_entry(s: &str) -> Result<Self, ParseScalarError> {
        parse_rational(s)
    }

    fn from_f64(x: f64) -> Result<Self, ParseScalarError> {
        if !x.is_finite() {
            return Err(ParseScalarError::new(&x.to_string(), "non-finite value"));
        }
        // Shortest round-trip decimal, so 0.1 becomes 1/10 rather than the
        // binary expansion of the nearest double.
        parse_rational(&format!("{x:?}"))
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rational(self))
    }
}

/// Renders a rational as `p` or `p/q` in lowest terms.
pub fn format_rational(r: &Exact) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, an integer, or a decimal with optional exponent into an exact rational.
pub fn parse_rational(s: &str) -> Result<Exact, ParseScalarError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseScalarError::new(s, "empty entry"));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = parse_decimal(p.trim()).ok_or_else(|| ParseScalarError::new(s, "bad numerator"))?;
        let q = parse_decimal(q.trim()).ok_or_else(|| ParseScalarError::new(s, "bad denominator"))?;
        if Zero::is_zero(&q) {
            return Err(ParseScalarError::new(s, "zero denominator"));
        }
        return Ok(p / q);
    }
    parse_decimal(t).ok_or_else(|| ParseScalarError::new(s, "not a rational number"))
}

fn parse_decimal(t: &str) -> Option<Exact> {
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num::pow(ten, (-scale) as usize))
    };
    Some(value)
}
