//! Exact rational time stamps and durations.
//!
//! Every time value in the toolchain is a [`BigRational`]. Decimal text is
//! converted exactly, so `0.1 + 0.2 == 0.3` holds for parsed values.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

/// An exact rational time stamp or duration.
pub type Time = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid number `{text}`")]
pub struct TimeParseError {
    pub text: String,
}

/// Parses an integer (`3`), a decimal (`0.25`, `-1.5`, `.5`) or a fraction
/// (`11/4`) into an exact rational.
pub fn parse_time(text: &str) -> Result<Time, TimeParseError> {
    let err = || TimeParseError {
        text: text.to_string(),
    };
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = parse_int(num).ok_or_else(err)?;
        let den: BigInt = parse_int(den).ok_or_else(err)?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let all_digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| err())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

fn parse_int(s: &str) -> Option<BigInt> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let body = s.strip_prefix('-').unwrap_or(s);
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Shorthand for building times in code and tests: `rat(11, 4)` is `11/4`.
pub fn rat(numer: i64, denom: i64) -> Time {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Integer time.
pub fn int(value: i64) -> Time {
    BigRational::from_integer(BigInt::from(value))
}

/// Displays a rational as `p/q`, or `p` when the denominator is one.
pub struct Fraction<'a>(pub &'a Time);

impl fmt::Display for Fraction<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Displays a rational as a terminating decimal when one exists, otherwise
/// falls back to `p/q`. Both forms are accepted by [`parse_time`].
pub struct Decimal<'a>(pub &'a Time);

impl fmt::Display for Decimal<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let value = self.0;
        let mut den = value.denom().clone();
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        let (mut twos, mut fives) = (0usize, 0usize);
        while (&den % &two).is_zero() {
            den /= &two;
            twos += 1;
        }
        while (&den % &five).is_zero() {
            den /= &five;
            fives += 1;
        }
        if !den.is_one() {
            return Fraction(value).fmt(f);
        }
        let places = twos.max(fives);
        if places == 0 {
            return write!(f, "{}", value.numer());
        }
        let scale = num_traits::pow(BigInt::from(10), places);
        let scaled = (value * BigRational::from_integer(scale.clone())).to_integer();
        let sign = if scaled.is_negative() { "-" } else { "" };
        let abs = scaled.abs();
        let int_part = &abs / &scale;
        let frac_part = &abs % &scale;
        write!(
            f,
            "{sign}{int_part}.{:0>width$}",
            frac_part.to_string(),
            width = places
        )
    }
}
