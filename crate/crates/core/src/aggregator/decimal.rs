use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

/// A presentation value rounded to two decimals, stored as hundredths.
///
/// Serializes as a JSON number with exactly two fractional digits (`17.00`),
/// so API payloads and CSV cells are string-identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decimal2(i64);

impl Decimal2 {
    pub const fn from_hundredths(h: i64) -> Self {
        Decimal2(h)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    /// `num / den` rounded half-up to two decimals, computed exactly.
    pub fn from_ratio(num: i128, den: i128) -> Self {
        assert!(den > 0, "ratio with non-positive denominator");
        let scaled = num * 100;
        Decimal2((2 * scaled + den).div_euclid(2 * den) as i64)
    }

    /// `100 * part / whole` rounded half-up.
    pub fn percent(part: u64, whole: u64) -> Self {
        Self::from_ratio(i128::from(part) * 100, i128::from(whole))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn parse(text: &str) -> Option<Self> {
        let (neg, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty()
            || frac.len() > 2
            || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())
        {
            return None;
        }
        let frac_val: i64 = format!("{frac:0<2}").parse().ok()?;
        let h = int.parse::<i64>().ok()? * 100 + frac_val;
        Some(Decimal2(if neg { -h } else { h }))
    }
}

impl fmt::Display for Decimal2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl Serialize for Decimal2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(self.to_string()).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Decimal2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        if !v.is_finite() {
            return Err(de::Error::custom("non-finite decimal"));
        }
        Ok(Decimal2((v * 100.0).round() as i64))
    }
}
