use serde::{Deserialize, Serialize};

use super::{pearson_r, FilterSpec};
use crate::model::{Dataset, LocalTimestamp, SleepStage};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepsDuringSleep {
    pub window_start: LocalTimestamp,
    pub steps: u32,
    pub sleep_minutes: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeartRateOutlier {
    pub window_start: LocalTimestamp,
    pub bpm: u16,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
}

/// Thresholds the findings were computed with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlausibilityThresholds {
    pub hr_bounds: (u16, u16),
    pub steps_during_sleep_step_threshold: u32,
    pub sleep_window_min_minutes: u32,
    pub min_correlation_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityFindings {
    pub steps_during_sleep: Vec<StepsDuringSleep>,
    pub step_hr_correlation: Option<Correlation>,
    /// Windows having both steps and heart rate.
    pub correlation_pairs: usize,
    pub hr_outliers: Vec<HeartRateOutlier>,
    pub thresholds: PlausibilityThresholds,
}

/// Flags windows whose items contradict each other or are out of range.
///
/// - steps during sleep: `sleep_minutes >= sleep_window_min_minutes`, stage
///   not awake, and `steps > steps_during_sleep_step_threshold`;
/// - heart-rate outliers: bpm outside `hr_bounds` (bounds themselves pass);
/// - step/heart-rate correlation over window-level pairs, reported only
///   with at least `min_correlation_pairs` pairs.
pub fn plausibility(dataset: &Dataset, spec: &FilterSpec) -> PlausibilityFindings {
    let (low, high) = spec.hr_bounds;
    let mut steps_during_sleep = Vec::new();
    let mut hr_outliers = Vec::new();
    let mut pairs = Vec::new();
    for f in &dataset.frames {
        if let (Some(steps), Some(sleep)) = (f.steps, f.sleep_minutes) {
            if sleep >= spec.sleep_window_min_minutes
                && f.sleep_stage != Some(SleepStage::Awake)
                && steps > spec.steps_during_sleep_step_threshold
            {
                steps_during_sleep.push(StepsDuringSleep {
                    window_start: f.window_start,
                    steps,
                    sleep_minutes: sleep,
                });
            }
        }
        if let Some(bpm) = f.heart_rate_bpm {
            if bpm < low || bpm > high {
                hr_outliers.push(HeartRateOutlier {
                    window_start: f.window_start,
                    bpm,
                });
            }
            if let Some(steps) = f.steps {
                pairs.push((f64::from(steps), f64::from(bpm)));
            }
        }
    }
    let step_hr_correlation = if pairs.len() >= spec.min_correlation_pairs {
        pearson_r(&pairs).map(|r| Correlation { r, n: pairs.len() })
    } else {
        None
    };
    PlausibilityFindings {
        steps_during_sleep,
        step_hr_correlation,
        correlation_pairs: pairs.len(),
        hr_outliers,
        thresholds: PlausibilityThresholds {
            hr_bounds: spec.hr_bounds,
            steps_during_sleep_step_threshold: spec.steps_during_sleep_step_threshold,
            sleep_window_min_minutes: spec.sleep_window_min_minutes,
            min_correlation_pairs: spec.min_correlation_pairs,
        },
    }
}
