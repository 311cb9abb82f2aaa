//! Minute-resolution UTC timestamps.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MINUTES_PER_DAY: i64 = 24 * 60;
pub const MINUTES_PER_YEAR: i64 = 365 * MINUTES_PER_DAY;

/// UTC instant truncated to the minute, stored as minutes since the Unix epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unparseable timestamp `{0}` (expected ISO-8601, e.g. 2019-03-04T10:00:00Z)")]
pub struct TimestampParseError(pub String);

impl Timestamp {
    pub const fn from_minutes(minutes: i64) -> Self {
        Timestamp(minutes)
    }

    pub const fn minutes(self) -> i64 {
        self.0
    }

    pub fn from_ymd_hm(year: i32, month: u32, day: u32, hour: u32, minute: u32) -> Option<Self> {
        let dt = NaiveDate::from_ymd_opt(year, month, day)?.and_hms_opt(hour, minute, 0)?;
        Some(Self::from_naive(dt))
    }

    fn from_naive(dt: NaiveDateTime) -> Self {
        Timestamp(dt.and_utc().timestamp().div_euclid(60))
    }

    pub fn plus_minutes(self, minutes: i64) -> Self {
        Timestamp(self.0 + minutes)
    }

    /// Signed difference `self - earlier` in minutes.
    pub fn minutes_since(self, earlier: Timestamp) -> i64 {
        self.0 - earlier.0
    }

    /// Minute of the day (0..1440) after shifting by a fixed zone offset.
    pub fn minute_of_day(self, utc_offset_minutes: i32) -> u32 {
        (self.0 + utc_offset_minutes as i64).rem_euclid(MINUTES_PER_DAY) as u32
    }

    pub fn to_iso8601(self) -> String {
        match DateTime::<Utc>::from_timestamp(self.0 * 60, 0) {
            Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            None => format!("@{}m", self.0),
        }
    }

    /// Accepts RFC 3339 (any offset) or a naive `YYYY-MM-DD[T ]HH:MM[:SS]`
    /// interpreted as UTC. Seconds are truncated.
    pub fn parse(raw: &str) -> Result<Self, TimestampParseError> {
        let s = raw.trim();
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Ok(Timestamp(dt.timestamp().div_euclid(60)));
        }
        for fmt in [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%d %H:%M",
        ] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
                return Ok(Self::from_naive(dt));
            }
        }
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(Self::from_naive(d.and_hms_opt(0, 0, 0).expect("midnight")));
        }
        Err(TimestampParseError(raw.to_string()))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso8601())
    }
}

impl FromStr for Timestamp {
    type Err = TimestampParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_iso8601())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Timestamp::parse(&raw).map_err(serde::de::Error::custom)
    }
}
