use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDateTime, Offset, TimeZone};
use chrono_tz::Tz;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

/// The single reference timezone a dataset's naive timestamps live in.
///
/// Accepts IANA names (`Asia/Seoul`), `UTC`, and fixed offsets written as
/// `+09:00`, `+0900` or `UTC+9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetTz {
    Fixed(FixedOffset),
    Named(Tz),
}

impl DatasetTz {
    pub fn utc() -> Self {
        DatasetTz::Fixed(FixedOffset::east_opt(0).unwrap())
    }

    /// Wall-clock reading of `instant` in this zone.
    pub fn localize(&self, instant: DateTime<FixedOffset>) -> NaiveDateTime {
        match self {
            DatasetTz::Fixed(off) => instant.with_timezone(off).naive_local(),
            DatasetTz::Named(tz) => instant.with_timezone(tz).naive_local(),
        }
    }

    /// UTC offset in effect at a local wall-clock time; the earlier offset
    /// wins on ambiguous (fall-back) readings.
    pub fn offset_at(&self, local: NaiveDateTime) -> FixedOffset {
        match self {
            DatasetTz::Fixed(off) => *off,
            DatasetTz::Named(tz) => match tz.offset_from_local_datetime(&local).earliest() {
                Some(o) => o.fix(),
                // Inside a spring-forward gap: use the offset just before it.
                None => tz
                    .offset_from_utc_datetime(&(local - chrono::Duration::hours(3)))
                    .fix(),
            },
        }
    }
}

fn parse_offset(s: &str) -> Option<FixedOffset> {
    let (sign, rest) = match s.as_bytes().first()? {
        b'+' => (1, &s[1..]),
        b'-' => (-1, &s[1..]),
        _ => return None,
    };
    let (h, m) = if let Some((h, m)) = rest.split_once(':') {
        (h, m)
    } else if rest.len() == 4 {
        rest.split_at(2)
    } else {
        (rest, "0")
    };
    let h: i32 = h.parse().ok()?;
    let m: i32 = m.parse().ok()?;
    if h > 14 || m > 59 {
        return None;
    }
    FixedOffset::east_opt(sign * (h * 3600 + m * 60))
}

impl FromStr for DatasetTz {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("utc") || t == "Z" {
            return Ok(DatasetTz::utc());
        }
        let offset_text = t
            .strip_prefix("UTC")
            .or_else(|| t.strip_prefix("GMT"))
            .unwrap_or(t);
        if let Some(off) = parse_offset(offset_text) {
            return Ok(DatasetTz::Fixed(off));
        }
        t.parse::<Tz>()
            .map(DatasetTz::Named)
            .map_err(|_| ModelError::UnknownName("timezone", s.to_string()))
    }
}

impl fmt::Display for DatasetTz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetTz::Fixed(off) if off.local_minus_utc() == 0 => f.write_str("UTC"),
            DatasetTz::Fixed(off) => write!(f, "{off}"),
            DatasetTz::Named(tz) => f.write_str(tz.name()),
        }
    }
}

impl Serialize for DatasetTz {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DatasetTz {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_offsets_and_names() {
        let nine = FixedOffset::east_opt(9 * 3600).unwrap();
        for s in ["+09:00", "+0900", "UTC+9", "UTC+09:00", "+9"] {
            assert_eq!(
                s.parse::<DatasetTz>().unwrap(),
                DatasetTz::Fixed(nine),
                "{s}"
            );
        }
        assert_eq!("utc".parse::<DatasetTz>().unwrap(), DatasetTz::utc());
        assert_eq!(
            "Asia/Seoul".parse::<DatasetTz>().unwrap(),
            DatasetTz::Named(chrono_tz::Asia::Seoul)
        );
        assert!("Mars/Olympus".parse::<DatasetTz>().is_err());
    }

    #[test]
    fn display_parses_back() {
        for s in ["UTC", "+09:00", "-03:30", "Europe/Berlin"] {
            let tz: DatasetTz = s.parse().unwrap();
            assert_eq!(tz.to_string().parse::<DatasetTz>().unwrap(), tz);
        }
    }

    #[test]
    fn localize_converts_offsets() {
        let tz: DatasetTz = "Asia/Seoul".parse().unwrap();
        let instant =
            DateTime::parse_from_str("2024-03-14 23:01:30 +0000", "%Y-%m-%d %H:%M:%S %z").unwrap();
        assert_eq!(tz.localize(instant).to_string(), "2024-03-15 08:01:30");
        assert_eq!(
            tz.offset_at(tz.localize(instant)).local_minus_utc(),
            9 * 3600
        );
    }
}
