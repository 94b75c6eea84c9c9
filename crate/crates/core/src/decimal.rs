//! Exact decimal numbers and the arithmetic used by rule conditions.
//!
//! Literals are stored as exact rationals, so `0.7*80000` is exactly `56000`.
//! Exponentiation with a non-negative integer exponent stays exact; any other
//! power falls back to binary floating point, and comparisons involving such a
//! value are made after rounding both sides to 12 significant digits.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Significant digits kept when comparing floating-point results.
/// Exact powers whose operand size times exponent exceeds this many bits
/// are computed in floating point instead.
pub const MAX_EXACT_POW_BITS: u64 = 1 << 14;

pub const APPROX_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithmeticError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic result is not a finite number")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid decimal literal `{0}`")]
pub struct DecimalParseError(pub String);

/// An exact decimal value.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decimal(BigRational);

impl Decimal {
    pub fn zero() -> Self {
        Decimal(BigRational::zero())
    }

    pub fn from_i64(v: i64) -> Self {
        Decimal(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a finite float, keeping [`APPROX_DIGITS`] significant digits.
    pub fn from_f64_rounded(v: f64) -> Result<Self, ArithmeticError> {
        if !v.is_finite() {
            return Err(ArithmeticError::NonFinite);
        }
        let text = format!("{:.*e}", APPROX_DIGITS - 1, v);
        text.parse().map_err(|_| ArithmeticError::NonFinite)
    }

    /// Decimal digits after the point, if the value has a terminating expansion.
    fn fraction_digits(&self) -> Option<usize> {
        let mut den = self.0.denom().clone();
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
        den.is_one().then(|| twos.max(fives))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fraction_digits() {
            Some(0) => write!(f, "{}", self.0.numer()),
            Some(digits) => {
                let scale = BigInt::from(10).pow(digits as u32);
                let scaled = (&self.0 * BigRational::from_integer(scale)).to_integer();
                let sign = if scaled.is_negative() { "-" } else { "" };
                let digits_str = scaled.abs().to_string();
                let padded = format!("{:0>width$}", digits_str, width = digits + 1);
                let (int_part, frac_part) = padded.split_at(padded.len() - digits);
                write!(f, "{sign}{int_part}.{}", frac_part.trim_end_matches('0'))
            }
            // Non-terminating values only arise from division; print a rounded form.
            None => write!(f, "{}", Decimal::from_f64_rounded(self.to_f64()).map_err(|_| fmt::Error)?),
        }
    }
}

impl fmt::Debug for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Decimal {
    type Err = DecimalParseError;

    /// Accepts `[-+]digits[.digits][e[-+]digits]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DecimalParseError(s.to_string());
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
            None => (s, 0),
        };
        let (negative, digits) = match mantissa.as_bytes().first() {
            Some(b'-') => (true, &mantissa[1..]),
            Some(b'+') => (false, &mantissa[1..]),
            _ => (false, mantissa),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty()
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || (digits.contains('.') && frac_part.is_empty())
            || exponent.unsigned_abs() > 4096
        {
            return Err(err());
        }
        let numer: BigInt = format!("{int_part}{frac_part}").parse().map_err(|_| err())?;
        let scale = exponent - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let mut value = if scale >= 0 {
            BigRational::from_integer(numer * ten.pow(scale as u32))
        } else {
            BigRational::new(numer, ten.pow(scale.unsigned_abs()))
        };
        if negative {
            value = -value;
        }
        Ok(Decimal(value))
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let number = serde_json::Number::from_str(&self.to_string()).map_err(serde::ser::Error::custom)?;
        number.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::Number(n) => n.to_string().parse().map_err(serde::de::Error::custom),
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("expected a number, found {other}"))),
        }
    }
}

/// Result of evaluating an arithmetic expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Num {
    Exact(BigRational),
    Approx(f64),
}

impl From<&Decimal> for Num {
    fn from(d: &Decimal) -> Self {
        Num::Exact(d.0.clone())
    }
}

impl Num {
    fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Num::Approx(v) => *v,
        }
    }

    fn approx(v: f64) -> Result<Num, ArithmeticError> {
        if v.is_finite() {
            Ok(Num::Approx(v))
        } else {
            Err(ArithmeticError::NonFinite)
        }
    }

    pub fn add(&self, other: &Num) -> Result<Num, ArithmeticError> {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => Ok(Num::Exact(a + b)),
            _ => Num::approx(self.to_f64() + other.to_f64()),
        }
    }

    pub fn sub(&self, other: &Num) -> Result<Num, ArithmeticError> {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => Ok(Num::Exact(a - b)),
            _ => Num::approx(self.to_f64() - other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Num) -> Result<Num, ArithmeticError> {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => Ok(Num::Exact(a * b)),
            _ => Num::approx(self.to_f64() * other.to_f64()),
        }
    }

    pub fn div(&self, other: &Num) -> Result<Num, ArithmeticError> {
        match (self, other) {
            (_, Num::Exact(b)) if b.is_zero() => Err(ArithmeticError::DivisionByZero),
            (_, Num::Approx(b)) if *b == 0.0 => Err(ArithmeticError::DivisionByZero),
            (Num::Exact(a), Num::Exact(b)) => Ok(Num::Exact(a / b)),
            _ => Num::approx(self.to_f64() / other.to_f64()),
        }
    }

    pub fn pow(&self, exponent: &Num) -> Result<Num, ArithmeticError> {
        if let (Num::Exact(base), Num::Exact(exp)) = (self, exponent) {
            if exp.is_integer() && !exp.is_negative() {
                if let Some(e) = exp.to_integer().to_u64() {
                    let bits = base.numer().bits() + base.denom().bits();
                    if bits.saturating_mul(e) <= MAX_EXACT_POW_BITS {
                        return Ok(Num::Exact(num::pow::pow(base.clone(), e as usize)));
                    }
                }
            }
        }
        Num::approx(self.to_f64().powf(exponent.to_f64()))
    }

    /// Converts back to a decimal, rounding approximate values.
    pub fn to_decimal(&self) -> Result<Decimal, ArithmeticError> {
        match self {
            Num::Exact(r) => Ok(Decimal(r.clone())),
            Num::Approx(v) => Decimal::from_f64_rounded(*v),
        }
    }

    /// Exact comparison when both sides are exact; otherwise both sides are
    /// rounded to [`APPROX_DIGITS`] significant digits first.
    pub fn compare(&self, other: &Num) -> Ordering {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => a.cmp(b),
            _ => {
                let a = round_significant(self.to_f64());
                let b = round_significant(other.to_f64());
                a.partial_cmp(&b).unwrap_or(Ordering::Equal)
            }
        }
    }
}

fn round_significant(v: f64) -> f64 {
    format!("{:.*e}", APPROX_DIGITS - 1, v).parse().unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_prints_canonically() {
        assert_eq!(d("0.7").to_string(), "0.7");
        assert_eq!(d("1.50").to_string(), "1.5");
        assert_eq!(d("70000").to_string(), "70000");
        assert_eq!(d("-0.05").to_string(), "-0.05");
        assert_eq!(d("1e5").to_string(), "100000");
        assert_eq!(d("2.5E-2").to_string(), "0.025");
        assert_eq!(d("007").to_string(), "7");
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "-", ".5", "1.", "1.2.3", "abc", "1e", "--1"] {
            assert!(bad.parse::<Decimal>().is_err(), "{bad}");
        }
    }

    #[test]
    fn seven_tenths_times_expected_is_exact() {
        let product = Num::from(&d("0.7")).mul(&Num::from(&d("80000"))).unwrap();
        assert_eq!(product.compare(&Num::from(&d("56000"))), Ordering::Equal);
    }

    #[test]
    fn integer_power_is_exact() {
        let base = Num::from(&d("1.5"));
        let sq = base.pow(&Num::from(&d("2"))).unwrap();
        assert_eq!(sq, Num::Exact(d("2.25").0));
    }

    #[test]
    fn huge_integer_power_falls_back_to_float() {
        let big = Num::from(&d("1.001")).pow(&Num::from(&d("2000"))).unwrap();
        assert!(matches!(big, Num::Approx(_)));
        assert_eq!(Num::from(&d("999")).pow(&Num::from(&d("900000"))), Err(ArithmeticError::NonFinite));
    }

    #[test]
    fn fractional_power_compares_after_rounding() {
        let root = Num::from(&d("2")).pow(&Num::from(&d("0.5"))).unwrap();
        assert!(matches!(root, Num::Approx(_)));
        let squared = root.mul(&root).unwrap();
        assert_eq!(squared.compare(&Num::from(&d("2"))), Ordering::Equal);
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(
            Num::from(&d("1")).div(&Num::from(&d("0"))),
            Err(ArithmeticError::DivisionByZero)
        );
    }

    #[test]
    fn non_terminating_display_is_rounded() {
        let third = Num::from(&d("1")).div(&Num::from(&d("3"))).unwrap().to_decimal().unwrap();
        assert_eq!(third.to_string(), "0.333333333333");
    }
}
