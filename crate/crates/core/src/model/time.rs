//! Wall-clock timestamps and the fixed-interval window grid.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

const SECONDS_PER_DAY: i64 = 86_400;
const MINUTES_PER_DAY: u32 = 1_440;

/// Canonical text form of a timestamp.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// A naive wall-clock instant in the dataset's reference timezone, at second
/// precision.
///
/// Stored as seconds since `1970-01-01 00:00:00` wall-clock so that grid
/// arithmetic is plain integer math.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalTimestamp(i64);

impl LocalTimestamp {
    pub const fn from_seconds(seconds: i64) -> Self {
        LocalTimestamp(seconds)
    }

    pub fn from_naive(naive: NaiveDateTime) -> Self {
        LocalTimestamp(naive.and_utc().timestamp())
    }

    pub fn from_ymd_hms(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(y, mo, d)
            .and_then(|date| date.and_hms_opt(h, mi, s))
            .map(Self::from_naive)
    }

    pub fn midnight(date: NaiveDate) -> Self {
        Self::from_naive(date.and_time(chrono::NaiveTime::MIN))
    }

    pub const fn seconds(self) -> i64 {
        self.0
    }

    pub fn to_naive(self) -> NaiveDateTime {
        chrono::DateTime::from_timestamp(self.0, 0)
            .expect("timestamp within chrono range")
            .naive_utc()
    }

    pub fn date(self) -> NaiveDate {
        let days = self.0.div_euclid(SECONDS_PER_DAY);
        NaiveDate::from_num_days_from_ce_opt(days as i32 + 719_163).expect("date within range")
    }

    /// Seconds elapsed since local midnight.
    pub fn seconds_of_day(self) -> u32 {
        self.0.rem_euclid(SECONDS_PER_DAY) as u32
    }

    pub fn plus_seconds(self, seconds: i64) -> Self {
        LocalTimestamp(self.0 + seconds)
    }

    pub fn seconds_since(self, earlier: LocalTimestamp) -> i64 {
        self.0 - earlier.0
    }
}

impl fmt::Display for LocalTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.to_naive();
        write!(
            f,
            "{:04}-{:02}-{:02} {:02}:{:02}:{:02}",
            n.year(),
            n.month(),
            n.day(),
            n.hour(),
            n.minute(),
            n.second()
        )
    }
}

impl FromStr for LocalTimestamp {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // chrono accepts some lenient variants (single-digit fields); the
        // canonical form is fixed-width, so check the shape first.
        let b = s.as_bytes();
        let shape_ok = b.len() == 19
            && b.iter().enumerate().all(|(i, c)| match i {
                4 | 7 => *c == b'-',
                10 => *c == b' ',
                13 | 16 => *c == b':',
                _ => c.is_ascii_digit(),
            });
        if !shape_ok {
            return Err(ModelError::BadTimestamp(s.to_string()));
        }
        NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
            .map(Self::from_naive)
            .map_err(|_| ModelError::BadTimestamp(s.to_string()))
    }
}

impl Serialize for LocalTimestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LocalTimestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fixed-interval partition of the wall clock into half-open windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct WindowGrid {
    interval_minutes: u32,
}

impl WindowGrid {
    pub const DEFAULT_INTERVAL: u32 = 10;

    pub fn new(interval_minutes: u32) -> Result<Self, ModelError> {
        if interval_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(interval_minutes) {
            return Err(ModelError::BadInterval(interval_minutes));
        }
        Ok(WindowGrid { interval_minutes })
    }

    pub fn interval_minutes(self) -> u32 {
        self.interval_minutes
    }

    pub fn interval_seconds(self) -> i64 {
        i64::from(self.interval_minutes) * 60
    }

    pub fn windows_per_day(self) -> u32 {
        MINUTES_PER_DAY / self.interval_minutes
    }

    pub fn is_aligned(self, ts: LocalTimestamp) -> bool {
        ts.seconds().rem_euclid(self.interval_seconds()) == 0
    }
}

impl Default for WindowGrid {
    fn default() -> Self {
        WindowGrid {
            interval_minutes: Self::DEFAULT_INTERVAL,
        }
    }
}

impl TryFrom<u32> for WindowGrid {
    type Error = ModelError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        WindowGrid::new(value)
    }
}

impl From<WindowGrid> for u32 {
    fn from(grid: WindowGrid) -> u32 {
        grid.interval_minutes
    }
}

/// Start of the window containing `ts`.
pub fn align_to_window(ts: LocalTimestamp, grid: WindowGrid) -> LocalTimestamp {
    let step = grid.interval_seconds();
    LocalTimestamp(ts.0 - ts.0.rem_euclid(step))
}

/// Splits the half-open span `[start, end)` into the windows it touches and
/// the number of seconds it spends in each.
///
/// Windows come out ascending; the overlaps sum to `end - start`.
pub fn overlap_decomposition(
    start: LocalTimestamp,
    end: LocalTimestamp,
    grid: WindowGrid,
) -> Result<Vec<(LocalTimestamp, u32)>, ModelError> {
    if start >= end {
        return Err(ModelError::DegenerateSpan { start, end });
    }
    let step = grid.interval_seconds();
    let mut out = Vec::with_capacity(((end.0 - start.0) / step + 2) as usize);
    let mut window = align_to_window(start, grid).0;
    let mut cursor = start.0;
    while cursor < end.0 {
        let window_end = window + step;
        let stop = window_end.min(end.0);
        out.push((LocalTimestamp(window), (stop - cursor) as u32));
        cursor = stop;
        window = window_end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> LocalTimestamp {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_text_round_trips() {
        let t = ts("2024-03-15 08:07:30");
        assert_eq!(t.to_string(), "2024-03-15 08:07:30");
        assert_eq!(t.date(), NaiveDate::from_ymd_opt(2024, 3, 15).unwrap());
        assert_eq!(t.seconds_of_day(), 8 * 3600 + 7 * 60 + 30);
    }

    #[test]
    fn rejects_non_canonical_text() {
        for bad in [
            "2024-3-15 08:07:30",
            "2024-03-15T08:07:30",
            "2024-03-15 08:07:30.5",
            "2024-02-30 00:00:00",
            "",
        ] {
            assert!(bad.parse::<LocalTimestamp>().is_err(), "{bad}");
        }
    }

    #[test]
    fn pre_epoch_dates_work() {
        let t = ts("1969-12-31 23:59:59");
        assert_eq!(t.seconds(), -1);
        assert_eq!(t.date(), NaiveDate::from_ymd_opt(1969, 12, 31).unwrap());
        assert_eq!(t.to_string(), "1969-12-31 23:59:59");
    }

    #[test]
    fn grid_validation() {
        for ok in [1, 5, 10, 30, 60, 1440] {
            assert!(WindowGrid::new(ok).is_ok());
        }
        for bad in [0, 7, 11, 1441] {
            assert!(WindowGrid::new(bad).is_err());
        }
        assert_eq!(WindowGrid::default().windows_per_day(), 144);
    }

    #[test]
    fn align_examples() {
        let g10 = WindowGrid::new(10).unwrap();
        let g30 = WindowGrid::new(30).unwrap();
        assert_eq!(
            align_to_window(ts("2024-03-15 08:07:30"), g10),
            ts("2024-03-15 08:00:00")
        );
        assert_eq!(
            align_to_window(ts("2024-03-15 08:00:00"), g10),
            ts("2024-03-15 08:00:00")
        );
        assert_eq!(
            align_to_window(ts("2024-03-15 23:59:59"), g30),
            ts("2024-03-15 23:30:00")
        );
    }

    #[test]
    fn decomposition_examples() {
        let g = WindowGrid::new(10).unwrap();
        let got =
            overlap_decomposition(ts("2024-03-15 10:05:00"), ts("2024-03-15 10:35:00"), g).unwrap();
        assert_eq!(
            got,
            vec![
                (ts("2024-03-15 10:00:00"), 300),
                (ts("2024-03-15 10:10:00"), 600),
                (ts("2024-03-15 10:20:00"), 600),
                (ts("2024-03-15 10:30:00"), 300),
            ]
        );
        let single =
            overlap_decomposition(ts("2024-03-15 10:02:00"), ts("2024-03-15 10:04:00"), g).unwrap();
        assert_eq!(single, vec![(ts("2024-03-15 10:00:00"), 120)]);
        let t = ts("2024-03-15 10:00:00");
        assert!(matches!(
            overlap_decomposition(t, t, g),
            Err(ModelError::DegenerateSpan { .. })
        ));
    }

    #[test]
    fn decomposition_crosses_midnight() {
        let g = WindowGrid::new(30).unwrap();
        let got =
            overlap_decomposition(ts("2024-03-15 23:50:00"), ts("2024-03-16 00:10:00"), g).unwrap();
        assert_eq!(
            got,
            vec![
                (ts("2024-03-15 23:30:00"), 600),
                (ts("2024-03-16 00:00:00"), 600)
            ]
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn grid() -> impl Strategy<Value = WindowGrid> {
            prop::sample::select(vec![1u32, 5, 10, 30, 60, 90])
                .prop_map(|m| WindowGrid::new(m).unwrap())
        }

        proptest! {
            #[test]
            fn align_is_idempotent_floor(secs in -10_000_000i64..2_000_000_000, g in grid()) {
                let t = LocalTimestamp::from_seconds(secs);
                let a = align_to_window(t, g);
                prop_assert_eq!(align_to_window(a, g), a);
                prop_assert!(a <= t);
                prop_assert!(t.seconds() < a.seconds() + g.interval_seconds());
                prop_assert!(g.is_aligned(a));
            }

            #[test]
            fn decomposition_partitions_span(
                start in 1_700_000_000i64..1_700_500_000,
                len in 1i64..200_000,
                g in grid(),
            ) {
                let s = LocalTimestamp::from_seconds(start);
                let e = LocalTimestamp::from_seconds(start + len);
                let parts = overlap_decomposition(s, e, g).unwrap();
                let total: i64 = parts.iter().map(|p| i64::from(p.1)).sum();
                prop_assert_eq!(total, len);
                for w in parts.windows(2) {
                    prop_assert_eq!(w[1].0.seconds() - w[0].0.seconds(), g.interval_seconds());
                }
                for (window, secs) in &parts {
                    prop_assert!(*secs > 0);
                    prop_assert!(i64::from(*secs) <= g.interval_seconds());
                    prop_assert!(g.is_aligned(*window));
                }
            }

            #[test]
            fn canonical_text_parses_back(secs in -1_000_000_000i64..4_000_000_000) {
                let t = LocalTimestamp::from_seconds(secs);
                prop_assert_eq!(t.to_string().parse::<LocalTimestamp>().unwrap(), t);
            }
        }
    }
}
