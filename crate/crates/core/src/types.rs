//! Domain vocabulary shared by every stage of the pipeline.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Problems with a single value or record, independent of where it came from.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("unknown weekday `{0}`")]
    Weekday(String),
    #[error("unknown direction `{0}` (expected inbound or outbound)")]
    Direction(String),
    #[error("unknown quality tag `{0}`")]
    Quality(String),
    #[error("unknown day type `{0}`")]
    DayType(String),
    #[error("invalid time of day `{0}` (expected HH:MM or HH:MM:SS)")]
    TimeOfDay(String),
    #[error("schedule needs at least 2 periods, got {0}")]
    TooFewPeriods(usize),
    #[error("schedule declares {period_count} periods but lists {boundaries} boundaries")]
    BoundaryCount {
        period_count: usize,
        boundaries: usize,
    },
    #[error("schedule boundaries must be strictly increasing ({0} is not after its predecessor)")]
    BoundaryOrder(TimeOfDay),
    #[error("schedule has no service days")]
    NoServiceDays,
    #[error("count must be finite and non-negative, got {0}")]
    NegativeCount(f64),
    #[error("{date} is a {actual}, not a {stated}")]
    WeekdayMismatch {
        date: NaiveDate,
        stated: Weekday,
        actual: Weekday,
    },
    #[error("period index {index} out of range 1..={period_count}")]
    PeriodOutOfRange { index: usize, period_count: usize },
    #[error("period indices start at 1")]
    ZeroPeriod,
}

/// Day of the week, Monday first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    /// Zero-based position, Monday = 0.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of(date: NaiveDate) -> Weekday {
        Weekday::ALL[date.weekday().num_days_from_monday() as usize]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weekday::Mon => "Mon",
            Weekday::Tue => "Tue",
            Weekday::Wed => "Wed",
            Weekday::Thu => "Thu",
            Weekday::Fri => "Fri",
            Weekday::Sat => "Sat",
            Weekday::Sun => "Sun",
        }
    }
}

impl fmt::Display for Weekday {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weekday {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Weekday::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| ValueError::Weekday(s.to_string()))
    }
}

/// Gate direction: passengers entering (`Inbound`) or leaving (`Outbound`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    Inbound,
    Outbound,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Inbound => "inbound",
            Direction::Outbound => "outbound",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inbound" => Ok(Direction::Inbound),
            "outbound" => Ok(Direction::Outbound),
            _ => Err(ValueError::Direction(s.to_string())),
        }
    }
}

/// Provenance of a count after cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Quality {
    #[default]
    Observed,
    Imputed,
    /// Abnormal but corroborated by neighbouring periods; kept as a real event.
    FlaggedEvent,
}

impl Quality {
    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Observed => "observed",
            Quality::Imputed => "imputed",
            Quality::FlaggedEvent => "flagged_event",
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quality {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "observed" => Ok(Quality::Observed),
            "imputed" => Ok(Quality::Imputed),
            "flagged_event" => Ok(Quality::FlaggedEvent),
            _ => Err(ValueError::Quality(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DayType {
    #[default]
    Normal,
    Holiday,
    SpecialEvent,
}

impl FromStr for DayType {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "normal" => Ok(DayType::Normal),
            "holiday" => Ok(DayType::Holiday),
            "special_event" => Ok(DayType::SpecialEvent),
            _ => Err(ValueError::DayType(s.to_string())),
        }
    }
}

impl fmt::Display for DayType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DayType::Normal => "normal",
            DayType::Holiday => "holiday",
            DayType::SpecialEvent => "special_event",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CalendarLabel {
    pub date: NaiveDate,
    pub day_type: DayType,
}

/// Local time of day with one-second resolution. `24:00` is allowed so the
/// last period can close at midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay(u32);

impl TimeOfDay {
    pub const MIDNIGHT_END: TimeOfDay = TimeOfDay(86_400);

    pub fn from_hms(h: u32, m: u32, s: u32) -> Option<TimeOfDay> {
        let secs = h * 3600 + m * 60 + s;
        (m < 60 && s < 60 && secs <= 86_400).then_some(TimeOfDay(secs))
    }

    pub fn of(timestamp: NaiveDateTime) -> TimeOfDay {
        TimeOfDay(timestamp.time().num_seconds_from_midnight())
    }

    pub fn seconds(self) -> u32 {
        self.0
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (h, m, s) = (self.0 / 3600, self.0 / 60 % 60, self.0 % 60);
        if s == 0 {
            write!(f, "{h:02}:{m:02}")
        } else {
            write!(f, "{h:02}:{m:02}:{s:02}")
        }
    }
}

impl FromStr for TimeOfDay {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ValueError::TimeOfDay(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let mut fields = [0u32; 3];
        for (slot, part) in fields.iter_mut().zip(&parts) {
            if part.is_empty() || part.len() > 2 || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            *slot = part.parse().map_err(|_| bad())?;
        }
        TimeOfDay::from_hms(fields[0], fields[1], fields[2]).ok_or_else(bad)
    }
}

#[cfg(feature = "serde")]
impl Serialize for TimeOfDay {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Partition of the service day into indexed half-open intervals
/// `[boundaries[i], boundaries[i+1])`, numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawSchedule"))]
pub struct PeriodSchedule {
    period_count: usize,
    boundaries: Vec<TimeOfDay>,
    service_days: Vec<Weekday>,
}

#[cfg(feature = "serde")]
#[derive(Deserialize)]
struct RawSchedule {
    period_count: usize,
    boundaries: Vec<TimeOfDay>,
    #[serde(default = "all_days")]
    service_days: Vec<Weekday>,
}

#[cfg(feature = "serde")]
fn all_days() -> Vec<Weekday> {
    Weekday::ALL.to_vec()
}

#[cfg(feature = "serde")]
impl TryFrom<RawSchedule> for PeriodSchedule {
    type Error = ValueError;

    fn try_from(raw: RawSchedule) -> Result<Self, Self::Error> {
        PeriodSchedule::new(raw.period_count, raw.boundaries, raw.service_days)
    }
}

impl PeriodSchedule {
    pub fn new(
        period_count: usize,
        boundaries: Vec<TimeOfDay>,
        mut service_days: Vec<Weekday>,
    ) -> Result<Self, ValueError> {
        if period_count < 2 {
            return Err(ValueError::TooFewPeriods(period_count));
        }
        if boundaries.len() != period_count + 1 {
            return Err(ValueError::BoundaryCount {
                period_count,
                boundaries: boundaries.len(),
            });
        }
        if let Some(w) = boundaries.windows(2).find(|w| w[1] <= w[0]) {
            return Err(ValueError::BoundaryOrder(w[1]));
        }
        service_days.sort();
        service_days.dedup();
        if service_days.is_empty() {
            return Err(ValueError::NoServiceDays);
        }
        Ok(PeriodSchedule {
            period_count,
            boundaries,
            service_days,
        })
    }

    /// Eight illustrative periods covering 06:00-24:00 every day. The widths
    /// are a placeholder for a real operator timetable.
    pub fn illustrative_default() -> Self {
        let b = [6, 7, 9, 11, 14, 17, 19, 21, 24]
            .iter()
            .map(|&h| TimeOfDay::from_hms(h, 0, 0).unwrap())
            .collect();
        PeriodSchedule::new(8, b, Weekday::ALL.to_vec()).unwrap()
    }

    pub fn period_count(&self) -> usize {
        self.period_count
    }

    pub fn boundaries(&self) -> &[TimeOfDay] {
        &self.boundaries
    }

    pub fn service_days(&self) -> &[Weekday] {
        &self.service_days
    }

    pub fn serves(&self, day: Weekday) -> bool {
        self.service_days.contains(&day)
    }

    /// 1-based index of the period containing `t`, if any.
    pub fn period_of(&self, t: TimeOfDay) -> Option<usize> {
        // boundaries are sorted: the interval is the last start <= t
        let pos = self.boundaries.partition_point(|b| *b <= t);
        (pos >= 1 && pos <= self.period_count).then_some(pos)
    }

    pub fn check_period(&self, index: usize) -> Result<(), ValueError> {
        if (1..=self.period_count).contains(&index) {
            Ok(())
        } else {
            Err(ValueError::PeriodOutOfRange {
                index,
                period_count: self.period_count,
            })
        }
    }

    /// Stable 64-bit FNV-1a digest of the canonical schedule text, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut canonical = alloc::format!("{}|", self.period_count);
        for (i, b) in self.boundaries.iter().enumerate() {
            if i > 0 {
                canonical.push(',');
            }
            canonical.push_str(&b.to_string());
        }
        canonical.push('|');
        for (i, d) in self.service_days.iter().enumerate() {
            if i > 0 {
                canonical.push(',');
            }
            canonical.push_str(d.as_str());
        }
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in canonical.bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        alloc::format!("{hash:016x}")
    }
}

/// A single gate tap as exported by a fare-collection or counting device.
#[derive(Debug, Clone, PartialEq)]
pub struct TapRecord {
    pub station_id: String,
    pub timestamp: NaiveDateTime,
    pub direction: Direction,
    pub source_id: String,
}

/// Passengers counted at one station, in one direction, during one period of
/// one day, as reported by one source.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PeriodCount {
    pub date: NaiveDate,
    pub day_of_week: Weekday,
    pub period_index: usize,
    pub direction: Direction,
    pub station_id: String,
    pub count: f64,
    pub source_id: String,
    #[cfg_attr(feature = "serde", serde(default))]
    pub quality: Quality,
}

impl PeriodCount {
    /// An observed count with the weekday derived from `date`.
    pub fn observed(
        date: NaiveDate,
        period_index: usize,
        direction: Direction,
        station_id: impl Into<String>,
        count: f64,
        source_id: impl Into<String>,
    ) -> Self {
        PeriodCount {
            date,
            day_of_week: Weekday::of(date),
            period_index,
            direction,
            station_id: station_id.into(),
            count,
            source_id: source_id.into(),
            quality: Quality::Observed,
        }
    }

    /// Checks the record-level invariants against a schedule.
    pub fn validate(&self, schedule: &PeriodSchedule) -> Result<(), ValueError> {
        self.validate_record()?;
        schedule.check_period(self.period_index)
    }

    /// The invariants that need no schedule: a finite non-negative count, a
    /// weekday matching the date and a period index of at least 1.
    pub fn validate_record(&self) -> Result<(), ValueError> {
        if self.period_index == 0 {
            return Err(ValueError::ZeroPeriod);
        }
        if !(self.count.is_finite() && self.count >= 0.0) {
            return Err(ValueError::NegativeCount(self.count));
        }
        let actual = Weekday::of(self.date);
        if actual != self.day_of_week {
            return Err(ValueError::WeekdayMismatch {
                date: self.date,
                stated: self.day_of_week,
                actual,
            });
        }
        Ok(())
    }

    pub fn slot(&self) -> SlotKey {
        SlotKey {
            date: self.date,
            direction: self.direction,
            period_index: self.period_index,
        }
    }
}

/// One (date, direction, period) cell at a single station. Orders by date,
/// then direction, then period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SlotKey {
    pub date: NaiveDate,
    pub direction: Direction,
    pub period_index: usize,
}

impl SlotKey {
    pub fn day_of_week(&self) -> Weekday {
        Weekday::of(self.date)
    }
}

impl fmt::Display for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} period {}",
            self.date, self.direction, self.period_index
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> TimeOfDay {
        s.parse().unwrap()
    }

    #[test]
    fn time_of_day_parsing() {
        assert_eq!(t("07:10").seconds(), 7 * 3600 + 600);
        assert_eq!(t("24:00"), TimeOfDay::MIDNIGHT_END);
        assert_eq!(t("07:10:05").to_string(), "07:10:05");
        for bad in ["24:01", "7", "07:60", "ab:cd", "07:00:00:00", "-1:00"] {
            assert!(bad.parse::<TimeOfDay>().is_err(), "{bad}");
        }
    }

    #[test]
    fn schedule_invariants() {
        let b = |xs: &[&str]| xs.iter().map(|s| t(s)).collect::<Vec<_>>();
        assert_eq!(
            PeriodSchedule::new(1, b(&["07:00", "08:00"]), Weekday::ALL.to_vec()),
            Err(ValueError::TooFewPeriods(1))
        );
        assert!(matches!(
            PeriodSchedule::new(2, b(&["07:00", "08:00"]), Weekday::ALL.to_vec()),
            Err(ValueError::BoundaryCount { .. })
        ));
        assert!(matches!(
            PeriodSchedule::new(2, b(&["07:00", "08:00", "08:00"]), Weekday::ALL.to_vec()),
            Err(ValueError::BoundaryOrder(_))
        ));
        assert!(PeriodSchedule::new(2, b(&["07:00", "08:00", "10:00"]), vec![]).is_err());
    }

    #[test]
    fn period_lookup_is_half_open() {
        let s = PeriodSchedule::new(
            2,
            [t("07:00"), t("08:00"), t("10:00")].to_vec(),
            Weekday::ALL.to_vec(),
        )
        .unwrap();
        assert_eq!(s.period_of(t("06:59:59")), None);
        assert_eq!(s.period_of(t("07:00")), Some(1));
        assert_eq!(s.period_of(t("07:59:59")), Some(1));
        assert_eq!(s.period_of(t("08:00")), Some(2));
        assert_eq!(s.period_of(t("10:00")), None);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = PeriodSchedule::illustrative_default();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
        let mut b = a.boundaries().to_vec();
        b[1] = t("07:30");
        let other = PeriodSchedule::new(8, b, Weekday::ALL.to_vec()).unwrap();
        assert_ne!(a.fingerprint(), other.fingerprint());
    }

    #[test]
    fn count_validation() {
        let s = PeriodSchedule::illustrative_default();
        let date = NaiveDate::from_ymd_opt(2014, 7, 7).unwrap();
        let mut c = PeriodCount::observed(date, 1, Direction::Outbound, "FUTIAN", 2486.0, "afc");
        assert_eq!(c.day_of_week, Weekday::Mon);
        assert!(c.validate(&s).is_ok());
        c.period_index = 9;
        assert!(matches!(
            c.validate(&s),
            Err(ValueError::PeriodOutOfRange { .. })
        ));
        c.period_index = 1;
        c.count = -1.0;
        assert!(matches!(c.validate(&s), Err(ValueError::NegativeCount(_))));
        c.count = 1.0;
        c.day_of_week = Weekday::Tue;
        assert!(matches!(
            c.validate(&s),
            Err(ValueError::WeekdayMismatch { .. })
        ));
    }

    #[test]
    fn enum_text_round_trip() {
        for d in Weekday::ALL {
            assert_eq!(d.as_str().parse::<Weekday>().unwrap(), d);
        }
        assert_eq!("mon".parse::<Weekday>().unwrap(), Weekday::Mon);
        assert!("Monday".parse::<Weekday>().is_err());
        assert!("sideways".parse::<Direction>().is_err());
    }
}
