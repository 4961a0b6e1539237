use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::QualityError;
use crate::model::{Dataset, DateSpan};

/// Day-retention criteria plus the plausibility thresholds.
///
/// The default thresholds are configuration choices, not clinical claims.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSpec {
    pub min_wear_minutes_per_day: Option<u32>,
    pub min_steps_per_day: Option<u64>,
    pub date_range: Option<DateSpan>,
    pub hr_bounds: (u16, u16),
    pub steps_during_sleep_step_threshold: u32,
    pub sleep_window_min_minutes: u32,
    pub recency_lookback_days: i64,
    pub min_correlation_pairs: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            min_wear_minutes_per_day: None,
            min_steps_per_day: None,
            date_range: None,
            hr_bounds: (25, 220),
            steps_during_sleep_step_threshold: 20,
            sleep_window_min_minutes: 8,
            recency_lookback_days: 30,
            min_correlation_pairs: 30,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), QualityError> {
        let bad = |m: String| Err(QualityError::InvalidConfig(m));
        if self.hr_bounds.0 >= self.hr_bounds.1 {
            return bad(format!(
                "heart-rate bounds ({}, {}) need low < high",
                self.hr_bounds.0, self.hr_bounds.1
            ));
        }
        if let Some(r) = self.date_range {
            if r.first > r.last {
                return bad(format!("date range {} > {}", r.first, r.last));
            }
        }
        if self.recency_lookback_days <= 0 {
            return bad(format!(
                "recency lookback must be positive, got {}",
                self.recency_lookback_days
            ));
        }
        Ok(())
    }

    fn has_day_criteria(&self) -> bool {
        self.min_wear_minutes_per_day.is_some()
            || self.min_steps_per_day.is_some()
            || self.date_range.is_some()
    }
}

/// First criterion a dropped day failed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "snake_case")]
pub enum DropReason {
    Wear { wear_minutes: u32, required: u32 },
    Steps { total_steps: u64, required: u64 },
    DateRange,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedDay {
    pub date: NaiveDate,
    #[serde(flatten)]
    pub reason: DropReason,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetentionSummary {
    pub kept_dates: Vec<NaiveDate>,
    pub dropped_dates: Vec<DroppedDay>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutcome {
    pub dataset: Dataset,
    pub retention: RetentionSummary,
}

/// Keeps the dates of the collection span that pass every criterion in
/// `spec` (thresholds inclusive) and drops all frames of the others. The
/// input dataset is left untouched.
pub fn apply_filter(dataset: &Dataset, spec: &FilterSpec) -> Result<FilterOutcome, QualityError> {
    spec.validate()?;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let interval = dataset.grid.interval_minutes();
    for date in dataset.collection_span.iter().flat_map(|s| s.days()) {
        let frames = dataset.frames_on(date);
        let wear = frames.len() as u32 * interval;
        let steps: u64 = frames.iter().map(|f| u64::from(f.steps.unwrap_or(0))).sum();
        let reason = if spec.min_wear_minutes_per_day.is_some_and(|m| wear < m) {
            Some(DropReason::Wear {
                wear_minutes: wear,
                required: spec.min_wear_minutes_per_day.unwrap(),
            })
        } else if spec.min_steps_per_day.is_some_and(|m| steps < m) {
            Some(DropReason::Steps {
                total_steps: steps,
                required: spec.min_steps_per_day.unwrap(),
            })
        } else if spec.date_range.is_some_and(|r| !r.contains(date)) {
            Some(DropReason::DateRange)
        } else {
            None
        };
        match reason {
            None => kept.push(date),
            Some(reason) => dropped.push(DroppedDay { date, reason }),
        }
    }
    let filtered = if spec.has_day_criteria() {
        dataset.retain_dates(|d| kept.binary_search(&d).is_ok())
    } else {
        dataset.clone()
    };
    Ok(FilterOutcome {
        dataset: filtered,
        retention: RetentionSummary {
            kept_dates: kept,
            dropped_dates: dropped,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CanonicalFrame, ItemKind, LocalTimestamp, VendorKind, WindowGrid};

    fn day_frames(day: u32, windows: i64, steps_each: u32) -> Vec<CanonicalFrame> {
        let start = LocalTimestamp::from_ymd_hms(2024, 3, day, 0, 0, 0).unwrap();
        (0..windows)
            .map(|k| {
                let mut f = CanonicalFrame::empty(start.plus_seconds(k * 600));
                f.steps = Some(steps_each);
                f.sources.insert(ItemKind::Steps, VendorKind::Fitbit);
                f
            })
            .collect()
    }

    fn wear_dataset() -> Dataset {
        let mut frames = day_frames(1, 102, 10);
        frames.extend(day_frames(2, 108, 10));
        frames.extend(day_frames(3, 114, 10));
        Dataset::new("w", "UTC", WindowGrid::default(), frames, vec![]).unwrap()
    }

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 3, day).unwrap()
    }

    #[test]
    fn eighteen_hour_minimum() {
        let ds = wear_dataset();
        let spec = FilterSpec {
            min_wear_minutes_per_day: Some(18 * 60),
            ..Default::default()
        };
        let out = apply_filter(&ds, &spec).unwrap();
        assert_eq!(out.retention.kept_dates, vec![d(2), d(3)]);
        assert_eq!(
            out.retention.dropped_dates,
            vec![DroppedDay {
                date: d(1),
                reason: DropReason::Wear {
                    wear_minutes: 1020,
                    required: 1080
                }
            }]
        );
        assert_eq!(out.dataset.frames.len(), 108 + 114);
        assert_eq!(ds.frames.len(), 102 + 108 + 114, "input untouched");
    }

    #[test]
    fn empty_spec_is_identity() {
        let ds = wear_dataset();
        let out = apply_filter(&ds, &FilterSpec::default()).unwrap();
        assert_eq!(out.dataset, ds);
        assert_eq!(out.retention.kept_dates.len(), 3);
    }

    #[test]
    fn step_threshold_inclusive() {
        let mut frames = day_frames(1, 1, 9999);
        frames.extend(day_frames(2, 1, 10000));
        let ds = Dataset::new("s", "UTC", WindowGrid::default(), frames, vec![]).unwrap();
        let spec = FilterSpec {
            min_steps_per_day: Some(10000),
            ..Default::default()
        };
        let out = apply_filter(&ds, &spec).unwrap();
        assert_eq!(out.retention.kept_dates, vec![d(2)]);
        assert!(matches!(
            out.retention.dropped_dates[0].reason,
            DropReason::Steps { .. }
        ));
    }

    #[test]
    fn first_failing_criterion_reported() {
        let ds = wear_dataset();
        let spec = FilterSpec {
            min_wear_minutes_per_day: Some(18 * 60),
            date_range: Some(DateSpan::new(d(3), d(3)).unwrap()),
            ..Default::default()
        };
        let out = apply_filter(&ds, &spec).unwrap();
        assert_eq!(out.retention.kept_dates, vec![d(3)]);
        assert!(matches!(
            out.retention.dropped_dates[0].reason,
            DropReason::Wear { .. }
        ));
        assert_eq!(out.retention.dropped_dates[1].reason, DropReason::DateRange);
    }

    #[test]
    fn contradictory_specs_rejected() {
        let ds = wear_dataset();
        let inverted = FilterSpec {
            date_range: Some(DateSpan {
                first: d(3),
                last: d(1),
            }),
            ..Default::default()
        };
        assert!(apply_filter(&ds, &inverted).is_err());
        let bounds = FilterSpec {
            hr_bounds: (220, 25),
            ..Default::default()
        };
        assert!(apply_filter(&ds, &bounds).is_err());
    }

    #[test]
    fn dropping_everything_leaves_empty_dataset() {
        let ds = wear_dataset();
        let spec = FilterSpec {
            min_wear_minutes_per_day: Some(1440),
            ..Default::default()
        };
        let out = apply_filter(&ds, &spec).unwrap();
        assert!(out.dataset.frames.is_empty());
        assert!(out.dataset.collection_span.is_none());
        assert_eq!(out.retention.dropped_dates.len(), 3);
    }

    #[test]
    fn spec_json_uses_defaults() {
        let spec: FilterSpec =
            serde_json::from_str(r#"{"min_wear_minutes_per_day": 1080}"#).unwrap();
        assert_eq!(spec.min_wear_minutes_per_day, Some(1080));
        assert_eq!(spec.hr_bounds, (25, 220));
        assert!(serde_json::from_str::<FilterSpec>(r#"{"min_wear": 1}"#).is_err());
    }
}
