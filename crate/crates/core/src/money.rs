//! Exact decimal arithmetic for every money path.
//!
//! Amounts, prices, fees, and USD conversions are all carried as
//! arbitrary-precision rationals. Sums, differences, and pro-rata shares
//! are exact; rounding happens only when a value is rendered as text.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Fractional digits kept when a non-terminating value is rendered.
const DISPLAY_SCALE: u32 = 18;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoneyParseError {
    #[error("empty amount")]
    Empty,
    #[error("invalid decimal literal `{0}`")]
    Invalid(String),
}

/// An exact amount of some asset (native coin, token, or USD).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Money(BigRational);

impl Money {
    pub fn zero() -> Self {
        Money(BigRational::zero())
    }

    pub fn from_int(value: i64) -> Self {
        Money(BigRational::from_integer(BigInt::from(value)))
    }

    /// Exact ratio `numer / denom`. Panics if `denom` is zero.
    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Money(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Money(self.0.abs())
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    /// Division that surfaces a zero divisor instead of panicking.
    pub fn checked_div(&self, rhs: &Money) -> Option<Money> {
        if rhs.is_zero() {
            None
        } else {
            Some(Money(&self.0 / &rhs.0))
        }
    }

    pub fn max(self, other: Money) -> Money {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Decimal rendering. Exact when the value terminates in base 10,
    /// otherwise rounded half-even at 18 fractional digits.
    pub fn to_decimal_string(&self) -> String {
        let numer = self.0.numer();
        let denom = self.0.denom();
        if numer.is_zero() {
            return "0".to_string();
        }

        // A reduced fraction terminates in base 10 iff the denominator
        // has no prime factors other than 2 and 5.
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        let mut rest = denom.clone();
        let mut twos = 0u32;
        let mut fives = 0u32;
        while rest.is_multiple_of(&two) {
            rest /= &two;
            twos += 1;
        }
        while rest.is_multiple_of(&five) {
            rest /= &five;
            fives += 1;
        }

        let (scale, scaled) = if rest == BigInt::from(1) {
            let scale = twos.max(fives);
            let scaled = numer * BigInt::from(10u32).pow(scale) / denom;
            (scale, scaled)
        } else {
            (DISPLAY_SCALE, round_half_even(numer, denom, DISPLAY_SCALE))
        };

        render_scaled(&scaled, scale)
    }
}

/// `numer / denom` scaled to `scale` fractional digits, rounded half-even.
fn round_half_even(numer: &BigInt, denom: &BigInt, scale: u32) -> BigInt {
    let negative = numer.is_negative();
    let magnitude = numer.abs() * BigInt::from(10u32).pow(scale);
    let (mut quot, rem) = magnitude.div_rem(denom);
    let twice = &rem * BigInt::from(2);
    if twice > *denom || (twice == *denom && quot.is_odd()) {
        quot += 1;
    }
    if negative {
        -quot
    } else {
        quot
    }
}

fn render_scaled(scaled: &BigInt, scale: u32) -> String {
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let scale = scale as usize;
    let (int_part, frac_part) = if digits.len() > scale {
        let split = digits.len() - scale;
        (digits[..split].to_string(), digits[split..].to_string())
    } else {
        ("0".to_string(), format!("{digits:0>scale$}"))
    };
    let frac_part = frac_part.trim_end_matches('0');
    let mut out = String::new();
    if negative && !(int_part == "0" && frac_part.is_empty()) {
        out.push('-');
    }
    out.push_str(&int_part);
    if !frac_part.is_empty() {
        out.push('.');
        out.push_str(frac_part);
    }
    out
}

impl Default for Money {
    fn default() -> Self {
        Money::zero()
    }
}

impl FromStr for Money {
    type Err = MoneyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(MoneyParseError::Empty);
        }
        let invalid = || MoneyParseError::Invalid(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(invalid());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(invalid());
        }
        let mut digits = String::with_capacity(int_part.len() + frac_part.len());
        digits.push_str(int_part);
        digits.push_str(frac_part);
        let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
            .map_err(|_| invalid())?;
        let numer = if negative { -numer } else { numer };
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(Money(BigRational::new(numer, denom)))
    }
}

/// Number of fractional digits written in a decimal literal, before any
/// arithmetic normalization. Used by loaders to enforce wei precision.
pub fn literal_scale(s: &str) -> usize {
    match s.trim().split_once('.') {
        Some((_, frac)) => frac.trim_end_matches('0').len(),
        None => 0,
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Money({})", self.to_decimal_string())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Money {
            type Output = Money;
            fn $method(self, rhs: Money) -> Money {
                Money(self.0 $op rhs.0)
            }
        }
        impl<'a> $trait<&'a Money> for &Money {
            type Output = Money;
            fn $method(self, rhs: &'a Money) -> Money {
                Money(&self.0 $op &rhs.0)
            }
        }
        impl $trait<&Money> for Money {
            type Output = Money;
            fn $method(self, rhs: &Money) -> Money {
                Money(self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Neg for &Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0.clone())
    }
}

impl AddAssign<&Money> for Money {
    fn add_assign(&mut self, rhs: &Money) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Money> for Money {
    fn sub_assign(&mut self, rhs: &Money) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.fold(Money::zero(), |mut acc, x| {
            acc += x;
            acc
        })
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_decimal_string())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MoneyVisitor;

        impl de::Visitor<'_> for MoneyVisitor {
            type Value = Money;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Money, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Money, E> {
                Ok(Money(BigRational::from_integer(BigInt::from(v))))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Money, E> {
                Ok(Money::from_int(v))
            }
        }

        deserializer.deserialize_any(MoneyVisitor)
    }
}
