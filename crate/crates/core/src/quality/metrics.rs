use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::QualityError;
use crate::model::{Dataset, LocalTimestamp};

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Minutes on `date` covered by windows holding any item; sleep-only
/// windows count as worn.
pub fn wear_minutes(dataset: &Dataset, date: NaiveDate) -> u32 {
    dataset.frames_on(date).len() as u32 * dataset.grid.interval_minutes()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completeness {
    pub per_day: BTreeMap<NaiveDate, f64>,
    pub overall: f64,
}

/// Fraction of each day's windows holding any item, and the mean of those
/// fractions over every date of the collection span (empty days count 0).
pub fn completeness(dataset: &Dataset) -> Completeness {
    let Some(span) = dataset.collection_span else {
        return Completeness {
            per_day: BTreeMap::new(),
            overall: 0.0,
        };
    };
    let per_window = f64::from(dataset.grid.windows_per_day());
    let per_day: BTreeMap<_, _> = span
        .days()
        .map(|d| (d, dataset.frames_on(d).len() as f64 / per_window))
        .collect();
    let overall = per_day.values().sum::<f64>() / per_day.len() as f64;
    Completeness { per_day, overall }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recency {
    pub reference: Option<LocalTimestamp>,
    pub lookback_days: i64,
    /// Share of non-empty frames starting within the lookback period.
    pub proportion: f64,
    /// Mean age of non-empty frames relative to `reference`, in days.
    pub average_age_days: f64,
}

/// `reference` defaults to the last frame's window start and may not lie
/// before it.
pub fn recency(
    dataset: &Dataset,
    lookback_days: i64,
    reference: Option<LocalTimestamp>,
) -> Result<Recency, QualityError> {
    if lookback_days <= 0 {
        return Err(QualityError::InvalidConfig(format!(
            "lookback must be positive, got {lookback_days} days"
        )));
    }
    let Some(last) = dataset.frames.last() else {
        return Ok(Recency {
            reference,
            lookback_days,
            proportion: 0.0,
            average_age_days: 0.0,
        });
    };
    let reference = reference.unwrap_or(last.window_start);
    if reference < last.window_start {
        return Err(QualityError::InvalidConfig(format!(
            "reference {reference} precedes the last frame {}",
            last.window_start
        )));
    }
    let cutoff = reference.plus_seconds(-lookback_days * 86_400);
    let n = dataset.frames.len() as f64;
    let recent = dataset
        .frames
        .iter()
        .filter(|f| f.window_start >= cutoff && f.window_start <= reference)
        .count() as f64;
    let total_age: f64 = dataset
        .frames
        .iter()
        .map(|f| reference.seconds_since(f.window_start) as f64)
        .sum();
    Ok(Recency {
        reference: Some(reference),
        lookback_days,
        proportion: recent / n,
        average_age_days: total_age / n / SECONDS_PER_DAY,
    })
}
