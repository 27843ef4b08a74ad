//! Exact rational values and the `"num/den"` wire format.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number used for every coordinate and distance.
pub type Rational = BigRational;

/// Builds `num/den` from machine integers. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^{-k}` for `k >= 0`.
pub fn pow2_inv(k: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

/// `2^k` for `k >= 0`.
pub fn pow2(k: u64) -> Rational {
    Rational::from_integer(BigInt::one() << k)
}

/// Multiplies by `2^{-k}`, allowing negative `k`.
pub fn scale_pow2(value: &Rational, k: i64) -> Rational {
    if k >= 0 {
        value * pow2_inv(k as u64)
    } else {
        value * pow2(k.unsigned_abs())
    }
}

/// Formats a rational as `num/den`, always with an explicit denominator.
pub fn format(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parses `num/den` or a bare integer. Decimal notation is rejected.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("invalid rational {text:?}; expected \"num/den\""));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Lossy decimal rendering for informational output only.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

/// Serde adapter storing a [`Rational`] as a `"num/den"` string.
pub mod serde_str {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Rational>`.
pub mod serde_opt_str {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_str(&format(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        let text = Option::<String>::deserialize(d)?;
        text.map(|t| parse(&t).map_err(serde::de::Error::custom)).transpose()
    }
}

/// A nonnegative exact distance together with a rigorous error radius.
///
/// The true distance lies in `[value - tail_bound, value + tail_bound]`.
/// Every metric in this crate evaluates its infinite sums in closed form,
/// so `tail_bound` is zero for all values it produces; truncated
/// evaluations (used as oracles) carry a positive bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactDist {
    #[serde(with = "serde_str")]
    pub value: Rational,
    #[serde(with = "serde_str")]
    pub tail_bound: Rational,
}

impl ExactDist {
    pub fn exact(value: Rational) -> Self {
        debug_assert!(!value.is_negative());
        ExactDist { value, tail_bound: Rational::zero() }
    }

    pub fn with_bound(value: Rational, tail_bound: Rational) -> Self {
        ExactDist { value, tail_bound }
    }

    pub fn zero() -> Self {
        Self::exact(Rational::zero())
    }

    pub fn is_exact(&self) -> bool {
        self.tail_bound.is_zero()
    }

    /// Whether the true distance is certainly within `tolerance` of `other`.
    pub fn encloses(&self, other: &Rational) -> bool {
        abs_diff(&self.value, other) <= self.tail_bound
    }
}

impl fmt::Display for ExactDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", format(&self.value))
        } else {
            write!(f, "{} ± {}", format(&self.value), format(&self.tail_bound))
        }
    }
}
