//! Byte units and integer money.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One mebibyte. Sizes in this crate use binary units, so a 1 GB input
/// divides into exactly four 256 MB splits.
pub const MB: u64 = 1 << 20;
pub const GB: u64 = 1 << 30;

const MICROS_PER_USD: f64 = 1_000_000.0;

/// An amount of money in integer micro-dollars.
///
/// Accumulation happens on integers so ledger totals are exact; conversion to
/// decimal dollars only happens when reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(pub u64);

impl Money {
    pub const ZERO: Money = Money(0);

    /// Rounds a non-negative dollar amount to the nearest micro-dollar.
    pub fn from_usd(usd: f64) -> Money {
        if !usd.is_finite() || usd <= 0.0 {
            return Money::ZERO;
        }
        Money((usd * MICROS_PER_USD).round() as u64)
    }

    pub fn micros(self) -> u64 {
        self.0
    }

    pub fn as_usd(self) -> f64 {
        self.0 as f64 / MICROS_PER_USD
    }
}

impl Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

/// Fixed six-decimal rendering, e.g. `12.000345`.
impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

impl FromStr for Money {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 6 || whole.is_empty() {
            return Err(format!("not a micro-dollar amount: {s:?}"));
        }
        let whole: u64 = whole.parse().map_err(|_| format!("bad amount: {s:?}"))?;
        let mut micros = 0u64;
        if !frac.is_empty() {
            let padded = format!("{frac:0<6}");
            micros = padded.parse().map_err(|_| format!("bad amount: {s:?}"))?;
        }
        Ok(Money(whole * 1_000_000 + micros))
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_usd())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let usd = f64::deserialize(deserializer)?;
        if usd < 0.0 {
            return Err(serde::de::Error::custom("negative amount"));
        }
        Ok(Money((usd * MICROS_PER_USD).round() as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse() {
        let m = Money(12_000_345);
        assert_eq!(m.to_string(), "12.000345");
        assert_eq!("12.000345".parse::<Money>().unwrap(), m);
        assert_eq!("3.5".parse::<Money>().unwrap(), Money(3_500_000));
        assert_eq!("0".parse::<Money>().unwrap(), Money::ZERO);
        assert!("1.0000001".parse::<Money>().is_err());
        assert!("-1".parse::<Money>().is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(Money::from_usd(0.000427), Money(427));
        assert_eq!(Money::from_usd(-1.0), Money::ZERO);
        assert_eq!(Money::from_usd(0.0000004), Money::ZERO);
        assert_eq!(Money::from_usd(0.0000005), Money(1));
    }

    #[test]
    fn json_round_trip() {
        let m = Money(987_654_321);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "987.654321");
        assert_eq!(serde_json::from_str::<Money>(&s).unwrap(), m);
    }
}
