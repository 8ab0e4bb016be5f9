//! Numeric back ends.
//!
//! Every computation runs in exactly one [`Scalar`] type: [`Rational`] for
//! exact work (closed forms, brute-force curvature, identities) or `f64` for
//! procedural fields with irrational weights. [`NumericMode`] is the runtime
//! selector used by configuration and the command line.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Default comparison tolerance for float mode.
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
#[derive(Default)]
pub enum NumericMode {
    #[default]
    ExactRational,
    Float { epsilon: f64 },
}


impl NumericMode {
    pub fn float() -> Self {
        NumericMode::Float {
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            NumericMode::ExactRational => 0.0,
            NumericMode::Float { epsilon } => *epsilon,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, NumericMode::ExactRational)
    }

    pub fn eq<S: Scalar>(&self, a: &S, b: &S) -> bool {
        a.approx_eq(b, self.epsilon())
    }
}

impl FromStr for NumericMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "rational" => Ok(NumericMode::ExactRational),
            "float" => Ok(NumericMode::float()),
            other => Err(Error::Parse(format!("unknown numeric mode `{other}`"))),
        }
    }
}

/// Integer-like cost used by the curvature enumerator. The objective is a
/// linear form in the potential values, so any positive rescaling of the
/// coefficients preserves the minimiser.
pub trait Cost: Copy + PartialOrd + Add<Output = Self> + Mul<Output = Self> + From<i8> + Debug {}

impl Cost for i128 {}
impl Cost for f64 {}

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sum
{
    type Cost: Cost;

    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Lossy for `Rational` only in the sense of rounding to the nearest f64.
    fn from_f64(v: f64) -> Result<Self>;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    /// Exact equality for rationals; `|a - b| <= eps` for floats.
    fn approx_eq(&self, other: &Self, eps: f64) -> bool;

    /// Rescale a coefficient vector to costs with identical ordering of all
    /// linear combinations with small integer multipliers.
    fn to_costs(values: &[Self]) -> Result<Vec<Self::Cost>>;

    /// Parses `"p/q"`, integers and decimals.
    fn parse(s: &str) -> Result<Self>;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => Self::parse(s),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Self::from_i64(i))
                } else if let Some(f) = n.as_f64() {
                    Self::from_f64(f)
                } else {
                    Err(Error::Parse(format!("unsupported number {n}")))
                }
            }
            other => Err(Error::Parse(format!("expected a weight, found {other}"))),
        }
    }
}

impl Scalar for Rational {
    type Cost = i128;

    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Result<Self> {
        BigRational::from_float(v).ok_or_else(|| Error::Parse(format!("non-finite weight {v}")))
    }

    fn to_f64(&self) -> f64 {
        self.to_f64_lossy()
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn approx_eq(&self, other: &Self, _eps: f64) -> bool {
        self == other
    }

    fn to_costs(values: &[Self]) -> Result<Vec<i128>> {
        let lcm = values
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        values
            .iter()
            .map(|v| {
                let scaled = v.numer() * (&lcm / v.denom());
                // headroom for summing a few dozen terms times |value| <= 2
                scaled
                    .to_i128()
                    .filter(|c| c.unsigned_abs() < (1u128 << 100))
                    .ok_or_else(|| Error::Overflow(format!("coefficient {v} too large to enumerate")))
            })
            .collect()
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid rational `{s}`"));
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(BigRational::new(p, q));
        }
        if let Ok(i) = s.parse::<BigInt>() {
            return Ok(BigRational::from_integer(i));
        }
        // exact decimal expansion, e.g. "0.125"
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').ok_or_else(bad)?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(digits, den);
        Ok(if neg { -r } else { r })
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
}

trait LossyF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyF64 for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => ToPrimitive::to_f64(self).unwrap_or(f64::NAN),
        }
    }
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Scalar for f64 {
    type Cost = f64;

    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(v: f64) -> Result<Self> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Parse(format!("non-finite weight {v}")))
        }
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        (self - other).abs() <= eps
    }

    fn to_costs(values: &[Self]) -> Result<Vec<f64>> {
        Ok(values.to_vec())
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().map_err(|_| Error::Parse(format!("invalid number `{s}`")))?;
            let q: f64 = q.trim().parse().map_err(|_| Error::Parse(format!("invalid number `{s}`")))?;
            return Ok(p / q);
        }
        s.parse().map_err(|_| Error::Parse(format!("invalid number `{s}`")))
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
}

/// `serialize_with` helper: exact values as `"p/q"` strings, floats as numbers.
pub fn ser<S: Scalar, Z: serde::Serializer>(v: &S, z: Z) -> std::result::Result<Z::Ok, Z::Error> {
    v.to_json().serialize(z)
}

pub fn ser_opt<S: Scalar, Z: serde::Serializer>(v: &Option<S>, z: Z) -> std::result::Result<Z::Ok, Z::Error> {
    v.as_ref().map(Scalar::to_json).serialize(z)
}

pub fn ser_vec<S: Scalar, Z: serde::Serializer>(v: &[S], z: Z) -> std::result::Result<Z::Ok, Z::Error> {
    v.iter().map(Scalar::to_json).collect::<Vec<_>>().serialize(z)
}

/// Convenience constructor for rationals in tests and built-in instances.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}
