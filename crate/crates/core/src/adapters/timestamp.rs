//! Vendor timestamp dialects.

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DatasetTz, LocalTimestamp, VendorKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {text:?} as {format:?} timestamp")]
pub struct TimestampError {
    pub text: String,
    pub format: TimestampFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampFormat {
    /// `YYYY-MM-DD HH:MM:SS.mmm`, milliseconds optional.
    DateTimeMillis,
    /// `YYYY-MM-DD HH:MM:SS +hhmm`.
    DateTimeOffset,
    /// `MM/DD/YY HH:MM:SS`, years 2000-2099.
    UsShortYear,
    /// `YYYY-MM-DDTHH:MM:SS.mmm`, milliseconds optional.
    IsoMillis,
    /// Separate `YYYY-MM-DD` date and `HH:MM[:SS]` time columns, joined by a
    /// space before parsing. A bare date means midnight.
    SplitDateTime,
}

impl TimestampFormat {
    pub fn parse(self, text: &str, tz: &DatasetTz) -> Result<LocalTimestamp, TimestampError> {
        let text = text.trim();
        let fail = || TimestampError {
            text: text.to_string(),
            format: self,
        };
        let naive = match self {
            TimestampFormat::DateTimeMillis => {
                NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S%.f").ok()
            }
            TimestampFormat::DateTimeOffset => {
                DateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S %z")
                    .ok()
                    .map(|dt| tz.localize(dt))
            }
            TimestampFormat::UsShortYear => parse_us_short(text),
            TimestampFormat::IsoMillis => {
                NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f").ok()
            }
            TimestampFormat::SplitDateTime => parse_split(text),
        };
        // `from_naive` floors to whole seconds, dropping any millisecond part.
        naive.map(LocalTimestamp::from_naive).ok_or_else(fail)
    }

    pub fn render(self, ts: LocalTimestamp, tz: &DatasetTz) -> String {
        let n = ts.to_naive();
        match self {
            TimestampFormat::DateTimeMillis => n.format("%Y-%m-%d %H:%M:%S.000").to_string(),
            TimestampFormat::DateTimeOffset => {
                let off = tz.offset_at(n);
                format!(
                    "{} {}",
                    n.format("%Y-%m-%d %H:%M:%S"),
                    off_hhmm(off.local_minus_utc())
                )
            }
            TimestampFormat::UsShortYear => n.format("%m/%d/%y %H:%M:%S").to_string(),
            TimestampFormat::IsoMillis => n.format("%Y-%m-%dT%H:%M:%S.000").to_string(),
            TimestampFormat::SplitDateTime => {
                if ts.seconds_of_day().is_multiple_of(60) {
                    n.format("%Y-%m-%d %H:%M").to_string()
                } else {
                    n.format("%Y-%m-%d %H:%M:%S").to_string()
                }
            }
        }
    }
}

fn off_hhmm(secs: i32) -> String {
    let sign = if secs < 0 { '-' } else { '+' };
    let a = secs.abs();
    format!("{sign}{:02}{:02}", a / 3600, (a % 3600) / 60)
}

fn parse_us_short(text: &str) -> Option<NaiveDateTime> {
    let (date, time) = text.split_once(' ')?;
    let mut parts = date.split('/');
    let month: u32 = parts.next()?.parse().ok()?;
    let day: u32 = parts.next()?.parse().ok()?;
    let yy = parts.next()?;
    if parts.next().is_some() || yy.len() != 2 {
        return None;
    }
    let year = 2000 + yy.parse::<i32>().ok()?;
    let time = NaiveTime::parse_from_str(time.trim(), "%H:%M:%S").ok()?;
    Some(NaiveDate::from_ymd_opt(year, month, day)?.and_time(time))
}

fn parse_split(text: &str) -> Option<NaiveDateTime> {
    match text.split_once(' ') {
        None => Some(
            NaiveDate::parse_from_str(text, "%Y-%m-%d")
                .ok()?
                .and_time(NaiveTime::MIN),
        ),
        Some((d, t)) => {
            let date = NaiveDate::parse_from_str(d, "%Y-%m-%d").ok()?;
            let t = t.trim();
            let time = NaiveTime::parse_from_str(t, "%H:%M:%S")
                .or_else(|_| NaiveTime::parse_from_str(t, "%H:%M"))
                .ok()?;
            Some(date.and_time(time))
        }
    }
}

/// Formats each vendor's exports use, most common first.
pub fn vendor_formats(vendor: VendorKind) -> &'static [TimestampFormat] {
    match vendor {
        VendorKind::Samsung => &[TimestampFormat::DateTimeMillis],
        VendorKind::Apple => &[TimestampFormat::DateTimeOffset],
        VendorKind::Fitbit => &[TimestampFormat::UsShortYear, TimestampFormat::IsoMillis],
        VendorKind::Xiaomi => &[TimestampFormat::SplitDateTime],
    }
}

/// Parses a timestamp in any of the vendor's dialects into the dataset zone.
pub fn parse_timestamp(
    vendor: VendorKind,
    text: &str,
    tz: &DatasetTz,
) -> Result<LocalTimestamp, TimestampError> {
    let formats = vendor_formats(vendor);
    let mut last = None;
    for f in formats {
        match f.parse(text, tz) {
            Ok(ts) => return Ok(ts),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("every vendor has a format"))
}
