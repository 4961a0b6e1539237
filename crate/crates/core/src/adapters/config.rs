//! Per-vendor file schemas and vocabulary maps.
//!
//! The built-in schemas describe the fixture export layout shipped under
//! `fixtures/`; real-world drift is absorbed by loading an edited
//! [`AdapterConfig`] (it is plain serde data) rather than by code changes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::timestamp::TimestampFormat;
use crate::model::{ItemKind, SleepStage, VendorKind};

/// What a column contributes to a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Start,
    End,
    Date,
    Time,
    /// The item's primary value (step count, bpm, percent, day-level minutes).
    Value,
    /// Optional step count attached to an exercise session.
    Steps,
    DurationMinutes,
    DurationSeconds,
    Stage,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Integer,
    Float,
}

/// Layout of one vendor export file carrying one item kind.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSchema {
    pub vendor: VendorKind,
    pub item: ItemKind,
    pub columns: Vec<ColumnSpec>,
    pub timestamp: TimestampFormat,
    pub value_kind: ValueKind,
    /// Rows are per-day aggregates rather than timed spans.
    #[serde(default)]
    pub day_level: bool,
}

impl FileSchema {
    fn new(
        vendor: VendorKind,
        item: ItemKind,
        timestamp: TimestampFormat,
        columns: &[(&str, ColumnRole)],
    ) -> Self {
        FileSchema {
            vendor,
            item,
            columns: columns
                .iter()
                .map(|(n, r)| ColumnSpec {
                    name: (*n).to_string(),
                    role: *r,
                })
                .collect(),
            timestamp,
            value_kind: ValueKind::Integer,
            day_level: false,
        }
    }

    fn float(mut self) -> Self {
        self.value_kind = ValueKind::Float;
        self
    }

    fn day_level(mut self) -> Self {
        self.day_level = true;
        self
    }

    pub fn column(&self, role: ColumnRole) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.role == role)
    }

    pub fn header_line(&self) -> String {
        self.columns
            .iter()
            .map(|c| c.name.as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// True when every schema column appears in `header`.
    pub fn matches(&self, header: &[&str]) -> bool {
        self.columns
            .iter()
            .all(|c| header.contains(&c.name.as_str()))
    }
}

/// A header column a vendor may emit for an item this pipeline does not
/// ingest from that vendor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnsupportedColumn {
    pub vendor: VendorKind,
    pub column: String,
    pub item: ItemKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub schemas: Vec<FileSchema>,
    /// Samsung exports sleep stages as integer codes.
    ///
    /// The shipped defaults (40001 awake, 40002 light, 40003 deep, 40004 rem)
    /// are placeholders and not authoritative; check them against the
    /// export being ingested.
    pub samsung_sleep_stage_codes: BTreeMap<i64, SleepStage>,
    /// Extra case-insensitive stage tokens per vendor, keyed lowercase.
    pub stage_synonyms: BTreeMap<VendorKind, BTreeMap<String, SleepStage>>,
    /// Length given to step rows that carry only a start time
    /// (per-minute step logs).
    pub point_span_seconds: u32,
    /// Allowed disagreement between an explicit duration column and the
    /// end-minus-start span, in minutes.
    pub duration_tolerance_minutes: u32,
    pub unsupported_columns: Vec<UnsupportedColumn>,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        use ColumnRole::{Date, DurationMinutes, DurationSeconds, End, Stage, Start, Time, Value};
        use ItemKind::{
            ActivityDuration, ExerciseDuration, HeartRate, OxygenSaturation, SleepDuration,
        };
        use TimestampFormat::*;
        use VendorKind::*;

        let schemas = vec![
            FileSchema::new(
                Samsung,
                ItemKind::Steps,
                DateTimeMillis,
                &[
                    ("pedometer.start_time", Start),
                    ("pedometer.end_time", End),
                    ("pedometer.count", Value),
                ],
            ),
            FileSchema::new(
                Samsung,
                ActivityDuration,
                DateTimeMillis,
                &[
                    ("activity.start_time", Start),
                    ("activity.end_time", End),
                    ("activity.active_minutes", DurationMinutes),
                ],
            ),
            FileSchema::new(
                Samsung,
                ExerciseDuration,
                DateTimeMillis,
                &[
                    ("exercise.start_time", Start),
                    ("exercise.end_time", End),
                    ("exercise.count", ColumnRole::Steps),
                    ("exercise.duration_minutes", DurationMinutes),
                ],
            ),
            FileSchema::new(
                Samsung,
                HeartRate,
                DateTimeMillis,
                &[
                    ("heart_rate.start_time", Start),
                    ("heart_rate.end_time", End),
                    ("heart_rate.heart_rate", Value),
                ],
            ),
            FileSchema::new(
                Samsung,
                OxygenSaturation,
                DateTimeMillis,
                &[
                    ("oxygen_saturation.start_time", Start),
                    ("oxygen_saturation.end_time", End),
                    ("oxygen_saturation.spo2", Value),
                ],
            ),
            FileSchema::new(
                Samsung,
                SleepDuration,
                DateTimeMillis,
                &[
                    ("sleep.start_time", Start),
                    ("sleep.end_time", End),
                    ("sleep.duration_minutes", DurationMinutes),
                ],
            ),
            FileSchema::new(
                Samsung,
                ItemKind::SleepStage,
                DateTimeMillis,
                &[
                    ("sleep_stage.start_time", Start),
                    ("sleep_stage.end_time", End),
                    ("sleep_stage.stage", Stage),
                    ("sleep_stage.duration_minutes", DurationMinutes),
                ],
            ),
            FileSchema::new(
                Apple,
                ItemKind::Steps,
                DateTimeOffset,
                &[("startDate", Start), ("endDate", End), ("stepCount", Value)],
            ),
            FileSchema::new(
                Apple,
                ActivityDuration,
                DateTimeOffset,
                &[("activityStartDate", Start), ("activityEndDate", End)],
            ),
            FileSchema::new(
                Apple,
                ExerciseDuration,
                DateTimeOffset,
                &[("workoutStartDate", Start), ("workoutEndDate", End)],
            ),
            FileSchema::new(
                Apple,
                HeartRate,
                DateTimeOffset,
                &[("startDate", Start), ("endDate", End), ("heartRate", Value)],
            ),
            FileSchema::new(
                Apple,
                OxygenSaturation,
                DateTimeOffset,
                &[
                    ("startDate", Start),
                    ("endDate", End),
                    ("oxygenSaturation", Value),
                ],
            )
            .float(),
            FileSchema::new(
                Apple,
                SleepDuration,
                DateTimeOffset,
                &[("sleepStartDate", Start), ("sleepEndDate", End)],
            ),
            FileSchema::new(
                Apple,
                ItemKind::SleepStage,
                DateTimeOffset,
                &[
                    ("stageStartDate", Start),
                    ("stageEndDate", End),
                    ("sleepStage", Stage),
                ],
            ),
            FileSchema::new(
                Fitbit,
                ItemKind::Steps,
                UsShortYear,
                &[("Time", Start), ("Steps", Value)],
            ),
            FileSchema::new(
                Fitbit,
                ExerciseDuration,
                UsShortYear,
                &[
                    ("Start Time", Start),
                    ("Steps", ColumnRole::Steps),
                    ("Duration", DurationMinutes),
                ],
            ),
            FileSchema::new(
                Fitbit,
                HeartRate,
                UsShortYear,
                &[("Time", Start), ("Heart Rate", Value)],
            ),
            FileSchema::new(
                Fitbit,
                OxygenSaturation,
                IsoMillis,
                &[("timestamp", Start), ("SpO2", Value)],
            ),
            FileSchema::new(
                Fitbit,
                SleepDuration,
                IsoMillis,
                &[("startTime", Start), ("minutesAsleep", DurationMinutes)],
            ),
            FileSchema::new(
                Fitbit,
                ItemKind::SleepStage,
                IsoMillis,
                &[
                    ("dateTime", Start),
                    ("level", Stage),
                    ("seconds", DurationSeconds),
                ],
            ),
            FileSchema::new(
                Xiaomi,
                ItemKind::Steps,
                SplitDateTime,
                &[("date", Date), ("time", Time), ("steps", Value)],
            ),
            FileSchema::new(
                Xiaomi,
                ExerciseDuration,
                SplitDateTime,
                &[
                    ("date", Date),
                    ("startTime", Time),
                    ("durationMinutes", DurationMinutes),
                    ("steps", ColumnRole::Steps),
                ],
            ),
            FileSchema::new(
                Xiaomi,
                HeartRate,
                SplitDateTime,
                &[("date", Date), ("time", Time), ("heartRate", Value)],
            ),
            FileSchema::new(
                Xiaomi,
                SleepDuration,
                SplitDateTime,
                &[
                    ("date", Date),
                    ("startTime", Time),
                    ("sleepMinutes", DurationMinutes),
                ],
            ),
            FileSchema::new(
                Xiaomi,
                ItemKind::SleepStage,
                SplitDateTime,
                &[
                    ("date", Date),
                    ("sleepStage", Stage),
                    ("stageMinutes", Value),
                ],
            )
            .day_level(),
        ];

        let samsung_sleep_stage_codes = BTreeMap::from([
            (40001, SleepStage::Awake),
            (40002, SleepStage::Light),
            (40003, SleepStage::Deep),
            (40004, SleepStage::Rem),
        ]);

        let syn = |pairs: &[(&str, SleepStage)]| -> BTreeMap<String, SleepStage> {
            pairs.iter().map(|(k, v)| ((*k).to_string(), *v)).collect()
        };
        let stage_synonyms = BTreeMap::from([
            (
                Apple,
                syn(&[
                    ("asleepdeep", SleepStage::Deep),
                    ("asleepcore", SleepStage::Light),
                    ("asleeprem", SleepStage::Rem),
                ]),
            ),
            (Fitbit, syn(&[("wake", SleepStage::Awake)])),
            (
                Xiaomi,
                syn(&[("shallow", SleepStage::Light), ("wake", SleepStage::Awake)]),
            ),
        ]);

        let unsupported_columns = ["spo2", "SpO2", "bloodOxygen"]
            .into_iter()
            .map(|c| UnsupportedColumn {
                vendor: Xiaomi,
                column: c.to_string(),
                item: OxygenSaturation,
            })
            .collect();

        AdapterConfig {
            schemas,
            samsung_sleep_stage_codes,
            stage_synonyms,
            point_span_seconds: 60,
            duration_tolerance_minutes: 1,
            unsupported_columns,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{vendor} does not export {item}, but a schema for it is registered")]
    UnsupportedSchema { vendor: VendorKind, item: ItemKind },
    #[error("{vendor} exports {item} but no schema is registered for it")]
    MissingSchema { vendor: VendorKind, item: ItemKind },
    #[error("schema {vendor}/{item}: {reason}")]
    BadSchema {
        vendor: VendorKind,
        item: ItemKind,
        reason: String,
    },
    #[error("samsung sleep-stage code map is empty")]
    EmptySamsungCodes,
    #[error("point_span_seconds must be positive")]
    ZeroPointSpan,
}

impl AdapterConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for s in &self.schemas {
            if !s.vendor.supports(s.item) {
                return Err(ConfigError::UnsupportedSchema {
                    vendor: s.vendor,
                    item: s.item,
                });
            }
            let bad = |reason: &str| ConfigError::BadSchema {
                vendor: s.vendor,
                item: s.item,
                reason: reason.to_string(),
            };
            let has = |r| s.column(r).is_some();
            if !(has(ColumnRole::Start) || has(ColumnRole::Date)) {
                return Err(bad("no start or date column"));
            }
            if s.item == ItemKind::SleepStage && !has(ColumnRole::Stage) {
                return Err(bad("no stage column"));
            }
            if (s.item == ItemKind::Steps || s.item.is_biometric() || s.day_level)
                && !has(ColumnRole::Value)
            {
                return Err(bad("no value column"));
            }
            if s.day_level && s.item != ItemKind::SleepStage {
                return Err(bad("only sleep stages may be day-level"));
            }
            let mut names: Vec<_> = s.columns.iter().map(|c| c.name.as_str()).collect();
            names.sort_unstable();
            if names.windows(2).any(|w| w[0] == w[1]) {
                return Err(bad("duplicate column name"));
            }
        }
        for v in VendorKind::ALL {
            for &item in v.supported_items() {
                if !self.schemas.iter().any(|s| s.vendor == v && s.item == item) {
                    return Err(ConfigError::MissingSchema { vendor: v, item });
                }
            }
        }
        if self.samsung_sleep_stage_codes.is_empty() {
            return Err(ConfigError::EmptySamsungCodes);
        }
        if self.point_span_seconds == 0 {
            return Err(ConfigError::ZeroPointSpan);
        }
        Ok(())
    }

    pub fn schema_for(&self, vendor: VendorKind, item: ItemKind) -> Option<&FileSchema> {
        self.schemas
            .iter()
            .find(|s| s.vendor == vendor && s.item == item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_complete() {
        let cfg = AdapterConfig::default();
        cfg.validate().unwrap();
        assert!(cfg
            .schema_for(VendorKind::Xiaomi, ItemKind::OxygenSaturation)
            .is_none());
    }

    #[test]
    fn no_default_header_matches_two_vendors() {
        let cfg = AdapterConfig::default();
        for s in &cfg.schemas {
            let header: Vec<&str> = s.columns.iter().map(|c| c.name.as_str()).collect();
            let vendors: Vec<_> = cfg
                .schemas
                .iter()
                .filter(|o| o.matches(&header))
                .map(|o| o.vendor)
                .collect();
            assert!(
                vendors.iter().all(|v| *v == s.vendor),
                "{:?}",
                s.header_line()
            );
        }
    }

    #[test]
    fn rejects_schema_for_item_vendor_lacks() {
        let mut cfg = AdapterConfig::default();
        let mut extra = cfg
            .schema_for(VendorKind::Apple, ItemKind::OxygenSaturation)
            .unwrap()
            .clone();
        extra.vendor = VendorKind::Xiaomi;
        cfg.schemas.push(extra);
        assert_eq!(
            cfg.validate(),
            Err(ConfigError::UnsupportedSchema {
                vendor: VendorKind::Xiaomi,
                item: ItemKind::OxygenSaturation
            })
        );
    }

    #[test]
    fn config_serializes() {
        let cfg = AdapterConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: AdapterConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
