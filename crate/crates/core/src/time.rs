//! Whole-second UTC timestamps.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use chrono::{DateTime, Duration, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// UTC instant truncated to whole seconds.
///
/// Serializes as an RFC 3339 string with a `Z` suffix, so serialized values
/// sort lexicographically in time order and snapshot files stay byte-stable.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    /// Truncates any sub-second component.
    pub fn from_datetime(dt: DateTime<Utc>) -> Self {
        Timestamp(Utc.timestamp_opt(dt.timestamp(), 0).unwrap())
    }

    pub fn from_unix(secs: i64) -> Self {
        Timestamp(Utc.timestamp_opt(secs, 0).unwrap())
    }

    pub fn now() -> Self {
        Self::from_datetime(Utc::now())
    }

    /// Parses an RFC 3339 instant; offsets are converted to UTC.
    pub fn parse(s: &str) -> Result<Self> {
        let dt = DateTime::parse_from_rfc3339(s)
            .map_err(|e| Error::Format(format!("invalid timestamp {s:?}: {e}")))?;
        Ok(Self::from_datetime(dt.with_timezone(&Utc)))
    }

    pub fn unix(&self) -> i64 {
        self.0.timestamp()
    }

    pub fn to_rfc3339(&self) -> String {
        self.0.to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    pub fn minus_days(&self, days: i64) -> Self {
        Timestamp(self.0 - Duration::days(days))
    }

    pub fn minus_seconds(&self, secs: i64) -> Self {
        Timestamp(self.0 - Duration::seconds(secs))
    }

    /// Seconds from `earlier` to `self`; negative if `self` is earlier.
    pub fn seconds_since(&self, earlier: Timestamp) -> i64 {
        self.0.timestamp() - earlier.0.timestamp()
    }
}

impl Sub for Timestamp {
    type Output = Duration;

    fn sub(self, rhs: Timestamp) -> Duration {
        self.0 - rhs.0
    }
}

impl Add<Duration> for Timestamp {
    type Output = Timestamp;

    fn add(self, rhs: Duration) -> Timestamp {
        Self::from_datetime(self.0 + rhs)
    }
}

impl Sub<Duration> for Timestamp {
    type Output = Timestamp;

    fn sub(self, rhs: Duration) -> Timestamp {
        Self::from_datetime(self.0 - rhs)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_rfc3339())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Timestamp::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfc3339_round_trip() {
        let ts = Timestamp::parse("2015-05-01T00:00:00Z").unwrap();
        assert_eq!(ts.to_rfc3339(), "2015-05-01T00:00:00Z");
        assert_eq!(Timestamp::parse(&ts.to_rfc3339()).unwrap(), ts);
    }

    #[test]
    fn offsets_normalize_to_utc() {
        let ts = Timestamp::parse("2015-05-01T02:00:00+02:00").unwrap();
        assert_eq!(ts.to_rfc3339(), "2015-05-01T00:00:00Z");
    }

    #[test]
    fn subseconds_truncate() {
        let ts = Timestamp::parse("2015-05-01T00:00:00.750Z").unwrap();
        assert_eq!(ts.to_rfc3339(), "2015-05-01T00:00:00Z");
    }

    #[test]
    fn string_order_matches_time_order() {
        let a = Timestamp::parse("2014-12-31T23:59:59Z").unwrap();
        let b = Timestamp::parse("2015-01-01T00:00:00Z").unwrap();
        assert!(a < b);
        assert!(a.to_rfc3339() < b.to_rfc3339());
    }

    #[test]
    fn rejects_garbage() {
        assert!(Timestamp::parse("May 1st 2015").is_err());
    }
}
