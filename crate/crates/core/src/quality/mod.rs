//! Wear time, completeness, recency and plausibility over canonical frames,
//! plus day-level filtering.

mod filter;
mod metrics;
mod pearson;
mod plausibility;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use filter::{
    apply_filter, DropReason, DroppedDay, FilterOutcome, FilterSpec, RetentionSummary,
};
pub use metrics::{completeness, recency, wear_minutes, Completeness, Recency};
pub use pearson::pearson_r;
pub use plausibility::{
    plausibility, Correlation, HeartRateOutlier, PlausibilityFindings, PlausibilityThresholds,
    StepsDuringSleep,
};

use crate::model::{Dataset, LocalTimestamp};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QualityError {
    #[error("invalid quality configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub dataset_id: String,
    pub interval_minutes: u32,
    pub wear_minutes: BTreeMap<NaiveDate, u32>,
    pub completeness: Completeness,
    pub recency: Recency,
    pub plausibility: PlausibilityFindings,
}

/// Every metric for `dataset` under the thresholds in `spec`. Day criteria
/// in `spec` are not applied here; see [`apply_filter`].
pub fn assess(
    dataset: &Dataset,
    spec: &FilterSpec,
    reference: Option<LocalTimestamp>,
) -> Result<QualityReport, QualityError> {
    spec.validate()?;
    let wear = dataset
        .collection_span
        .iter()
        .flat_map(|s| s.days())
        .map(|d| (d, wear_minutes(dataset, d)))
        .collect();
    Ok(QualityReport {
        dataset_id: dataset.dataset_id.clone(),
        interval_minutes: dataset.grid.interval_minutes(),
        wear_minutes: wear,
        completeness: completeness(dataset),
        recency: recency(dataset, spec.recency_lookback_days, reference)?,
        plausibility: plausibility(dataset, spec),
    })
}
