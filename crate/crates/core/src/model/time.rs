use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDateTime, Weekday};
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Latest representable instant, `9999-12-31T23:59:59Z`. Beyond this the
/// fixed-width textual form would need a 5-digit year.
const MAX_EPOCH_SECONDS: i64 = 253_402_300_799;

/// UTC instant with whole-second resolution.
///
/// The one and only textual form is `YYYY-MM-DDThh:mm:ssZ`; parsing rejects
/// everything else (offsets, fractional seconds, missing `T`/`Z`), which
/// makes parse/format a bijection on the accepted grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Timestamp(i64);

impl Timestamp {
    const FORMAT: &'static str = "%Y-%m-%dT%H:%M:%SZ";

    /// Wraps non-negative seconds since the Unix epoch.
    pub fn from_seconds(seconds: i64) -> Result<Self, ModelError> {
        if !(0..=MAX_EPOCH_SECONDS).contains(&seconds) {
            return Err(ModelError::MalformedTimestamp(format!(
                "epoch seconds {seconds} out of range"
            )));
        }
        Ok(Timestamp(seconds))
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn parse(raw: &str) -> Result<Self, ModelError> {
        let bad = || ModelError::MalformedTimestamp(raw.to_owned());
        let dt = NaiveDateTime::parse_from_str(raw, Self::FORMAT).map_err(|_| bad())?;
        let ts = Timestamp::from_seconds(dt.and_utc().timestamp()).map_err(|_| bad())?;
        // chrono is lenient about field widths; insisting the canonical
        // rendering matches the input closes every loophole at once.
        if ts.format() != raw {
            return Err(bad());
        }
        Ok(ts)
    }

    pub fn format(self) -> String {
        self.as_datetime().format(Self::FORMAT).to_string()
    }

    /// UTC hour of day, 0..=23.
    pub fn hour_of_day(self) -> u8 {
        ((self.0 % 86_400) / 3_600) as u8
    }

    pub fn day_kind(self) -> DayKind {
        match self.as_datetime().weekday() {
            Weekday::Sat => DayKind::Saturday,
            Weekday::Sun => DayKind::Sunday,
            _ => DayKind::Weekday,
        }
    }

    fn as_datetime(self) -> DateTime<chrono::Utc> {
        DateTime::from_timestamp(self.0, 0).expect("in range by construction")
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

impl TryFrom<String> for Timestamp {
    type Error = ModelError;
    fn try_from(raw: String) -> Result<Self, ModelError> {
        Timestamp::parse(&raw)
    }
}

impl From<Timestamp> for String {
    fn from(t: Timestamp) -> String {
        t.format()
    }
}

/// Coarse day classification used by the analytics filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DayKind {
    Weekday,
    Saturday,
    Sunday,
}

impl DayKind {
    pub const ALL: [DayKind; 3] = [DayKind::Weekday, DayKind::Saturday, DayKind::Sunday];

    pub fn as_str(self) -> &'static str {
        match self {
            DayKind::Weekday => "weekday",
            DayKind::Saturday => "saturday",
            DayKind::Sunday => "sunday",
        }
    }
}

impl fmt::Display for DayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DayKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "weekday" => Ok(DayKind::Weekday),
            "saturday" => Ok(DayKind::Saturday),
            "sunday" => Ok(DayKind::Sunday),
            other => Err(ModelError::MalformedToken(format!(
                "unknown day kind {other:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Days from the epoch for a civil date (Hinnant's days-from-civil),
    /// kept here as an oracle independent of chrono.
    fn civil_to_epoch_seconds(y: i64, m: i64, d: i64, hh: i64, mm: i64, ss: i64) -> i64 {
        let y = if m <= 2 { y - 1 } else { y };
        let era = if y >= 0 { y } else { y - 399 } / 400;
        let yoe = y - era * 400;
        let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        let days = era * 146_097 + doe - 719_468;
        days * 86_400 + hh * 3_600 + mm * 60 + ss
    }

    #[test]
    fn epoch_parses_to_zero() {
        assert_eq!(Timestamp::parse("1970-01-01T00:00:00Z").unwrap().seconds(), 0);
    }

    #[test]
    fn parse_matches_independent_calendar_oracle() {
        let cases = [
            ("2008-06-02T12:00:00Z", (2008, 6, 2, 12, 0, 0)),
            ("2000-02-29T23:59:59Z", (2000, 2, 29, 23, 59, 59)),
            ("1999-12-31T00:00:01Z", (1999, 12, 31, 0, 0, 1)),
            ("2038-01-19T03:14:08Z", (2038, 1, 19, 3, 14, 8)),
        ];
        for (raw, (y, m, d, hh, mm, ss)) in cases {
            let expect = civil_to_epoch_seconds(y, m, d, hh, mm, ss);
            assert_eq!(Timestamp::parse(raw).unwrap().seconds(), expect, "{raw}");
        }
        // the fixture everything else in the test suite leans on
        assert_eq!(
            Timestamp::parse("2008-06-02T12:00:00Z").unwrap().seconds(),
            1_212_408_000
        );
    }

    #[test]
    fn rejects_non_canonical_forms() {
        for raw in [
            "2008-06-02 12:00:00",
            "2008-06-02T12:00:00",
            "2008-06-02T12:00:00+00:00",
            "2008-6-02T12:00:00Z",
            "2008-06-02T12:00:00.000Z",
            "08-06-02T12:00:00Z",
            "",
            "garbage",
        ] {
            assert!(Timestamp::parse(raw).is_err(), "accepted {raw:?}");
        }
    }

    #[test]
    fn rejects_out_of_range_seconds() {
        assert!(Timestamp::from_seconds(-1).is_err());
        assert!(Timestamp::from_seconds(MAX_EPOCH_SECONDS).is_ok());
        assert!(Timestamp::from_seconds(MAX_EPOCH_SECONDS + 1).is_err());
    }

    #[test]
    fn format_round_trips() {
        for secs in [0, 1, 59, 86_399, 86_400, 1_212_408_000, MAX_EPOCH_SECONDS] {
            let ts = Timestamp::from_seconds(secs).unwrap();
            assert_eq!(Timestamp::parse(&ts.format()).unwrap(), ts);
        }
    }

    #[test]
    fn hour_of_day_is_utc() {
        assert_eq!(Timestamp::parse("2008-06-02T00:00:00Z").unwrap().hour_of_day(), 0);
        assert_eq!(Timestamp::parse("2008-06-02T23:59:59Z").unwrap().hour_of_day(), 23);
        assert_eq!(Timestamp::parse("2008-06-02T12:30:00Z").unwrap().hour_of_day(), 12);
    }

    #[test]
    fn day_kinds_for_a_known_week() {
        // 2008-06-02 was a Monday
        let kinds = [
            ("2008-06-02T08:00:00Z", DayKind::Weekday),
            ("2008-06-06T08:00:00Z", DayKind::Weekday),
            ("2008-06-07T08:00:00Z", DayKind::Saturday),
            ("2008-06-08T08:00:00Z", DayKind::Sunday),
        ];
        for (raw, kind) in kinds {
            assert_eq!(Timestamp::parse(raw).unwrap().day_kind(), kind, "{raw}");
        }
    }
}
