//! Exact non-negative decimal numbers.
//!
//! Constraint quantities such as `99.9` or `99.99` must survive any number of
//! parse/serialize cycles unchanged, so they are kept as an integer mantissa
//! plus a base-10 scale instead of a binary float. Values are always stored
//! normalized: no trailing fractional zeros, zero has scale 0.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest number of fractional digits accepted.
pub const MAX_SCALE: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("number `{0}` has too many digits")]
    Overflow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: u64,
    scale: u32,
}

impl Decimal {
    pub const ZERO: Decimal = Decimal { mantissa: 0, scale: 0 };

    pub fn from_parts(mantissa: u64, scale: u32) -> Self {
        Self { mantissa, scale }.normalized()
    }

    pub fn from_u64(value: u64) -> Self {
        Self { mantissa: value, scale: 0 }
    }

    pub fn mantissa(&self) -> u64 {
        self.mantissa
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    pub fn is_integer(&self) -> bool {
        self.scale == 0
    }

    /// Integer value, if the number has no fractional part.
    pub fn as_u64(&self) -> Option<u64> {
        (self.scale == 0).then_some(self.mantissa)
    }

    pub fn to_f64(&self) -> f64 {
        // Display is exact and `f64::from_str` rounds correctly.
        self.to_string().parse().unwrap_or(f64::NAN)
    }

    /// Converts a finite non-negative float through its shortest round-trip
    /// representation.
    pub fn from_f64(value: f64) -> Result<Self, DecimalError> {
        if !value.is_finite() || value < 0.0 {
            return Err(DecimalError::Invalid(value.to_string()));
        }
        value.to_string().parse()
    }

    fn normalized(mut self) -> Self {
        if self.mantissa == 0 {
            return Self::ZERO;
        }
        while self.scale > 0 && self.mantissa % 10 == 0 {
            self.mantissa /= 10;
            self.scale -= 1;
        }
        self
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.strip_prefix('+').unwrap_or(s);
        if body.is_empty() {
            return Err(DecimalError::Empty);
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty())
            || !digits_ok(int_part)
            || !digits_ok(frac_part)
            || (body.contains('.') && frac_part.is_empty())
        {
            return Err(DecimalError::Invalid(s.to_string()));
        }
        let frac_trimmed = frac_part.trim_end_matches('0');
        if frac_trimmed.len() as u32 > MAX_SCALE {
            return Err(DecimalError::Overflow(s.to_string()));
        }
        let mut mantissa: u64 = 0;
        for b in int_part.bytes().chain(frac_trimmed.bytes()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| DecimalError::Overflow(s.to_string()))?;
        }
        Ok(Decimal::from_parts(mantissa, frac_trimmed.len() as u32))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let digits = self.mantissa.to_string();
        let scale = self.scale as usize;
        if digits.len() > scale {
            let (int, frac) = digits.split_at(digits.len() - scale);
            write!(f, "{int}.{frac}")
        } else {
            write!(f, "0.{}{}", "0".repeat(scale - digits.len()), digits)
        }
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        let scale = self.scale.max(other.scale);
        let lhs = u128::from(self.mantissa) * 10u128.pow(scale - self.scale);
        let rhs = u128::from(other.mantissa) * 10u128.pow(scale - other.scale);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
