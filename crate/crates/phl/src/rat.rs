//! Exact rational arithmetic helpers shared across the crate.
//!
//! All probabilities, step costs and potentials are arbitrary-precision
//! rationals; floats only appear at the display boundary and when comparing
//! against irrational symbolic bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rat = BigRational;

/// Shorthand for an integer-valued rational.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Shorthand for `n/d`. Panics on `d == 0`; intended for literals in code.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn is_nonneg(r: &Rat) -> bool {
    !r.is_negative()
}

/// Renders a rational as `num` or `num/den` (always in lowest terms).
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Lossy conversion for display and float-bound comparisons.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{0}`")]
pub struct RatParseError(pub String);

/// Parses `num`, `num/den`, or a decimal such as `-1.25` into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat, RatParseError> {
    let s = s.trim();
    let err = || RatParseError(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        return parse_decimal(int_part, frac_part).ok_or_else(err);
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(Rat::from_integer(n))
}

/// Exact value of a decimal literal split at the dot, e.g. `("-1", "25")`.
pub fn parse_decimal(int_part: &str, frac_part: &str) -> Option<Rat> {
    if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let (neg, digits) = match int_part.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, int_part),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let whole: BigInt = format!("{digits}{frac_part}").parse().ok()?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    let r = Rat::new(whole, den);
    Some(if neg { -r } else { r })
}

/// Renders a rational as an exact decimal literal when the denominator is
/// 10-smooth (`2^a * 5^b`), otherwise as `num/den`.
pub fn format_rat_literal(r: &Rat) -> String {
    let mut den = r.denom().clone();
    let mut pow2 = 0u32;
    let mut pow5 = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        pow2 += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        pow5 += 1;
    }
    if !den.is_one() {
        return format_rat(r);
    }
    if pow2 == 0 && pow5 == 0 {
        // Integral rational: keep the lexical class explicit with `.0`.
        return format!("{}.0", r.numer());
    }
    let scale = pow2.max(pow5);
    let mult = BigInt::from(2).pow(scale - pow2) * BigInt::from(5).pow(scale - pow5);
    let scaled = (r.numer() * &mult).abs();
    let digits = scaled.to_string();
    let digits = if digits.len() <= scale as usize {
        format!("{}{}", "0".repeat(scale as usize + 1 - digits.len()), digits)
    } else {
        digits
    };
    let split = digits.len() - scale as usize;
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{}.{}", &digits[..split], &digits[split..])
}

pub mod serde_rat {
    //! `#[serde(with = "...")]` adapter storing rationals as `num/den` strings.
    use super::{format_rat, parse_rat, Rat};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}
