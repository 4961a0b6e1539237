use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{CanonicalFrame, ItemKind, LocalTimestamp, SleepStage, VendorKind, WindowGrid};

/// Which vendor wins when several report the same item for one window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergePolicy {
    pub vendor_priority: Vec<VendorKind>,
    #[serde(default)]
    pub overrides: BTreeMap<ItemKind, Vec<VendorKind>>,
}

impl Default for MergePolicy {
    fn default() -> Self {
        MergePolicy {
            vendor_priority: VendorKind::ALL.to_vec(),
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("vendor priority {0:?} is not a permutation of the registered vendors")]
pub struct PolicyError(pub Vec<VendorKind>);

impl MergePolicy {
    pub fn new(vendor_priority: Vec<VendorKind>) -> Result<Self, PolicyError> {
        let p = MergePolicy {
            vendor_priority,
            overrides: BTreeMap::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        for order in std::iter::once(&self.vendor_priority).chain(self.overrides.values()) {
            let mut sorted = order.clone();
            sorted.sort();
            if sorted != VendorKind::ALL {
                return Err(PolicyError(order.clone()));
            }
        }
        Ok(())
    }

    pub fn rank(&self, item: ItemKind, vendor: VendorKind) -> usize {
        let order = self.overrides.get(&item).unwrap_or(&self.vendor_priority);
        order
            .iter()
            .position(|v| *v == vendor)
            .unwrap_or(usize::MAX)
    }
}

/// One vendor's aggregates for one window, before merging and before
/// clamping durations to the interval.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VendorFrame {
    pub steps: Option<u64>,
    pub activity_minutes: Option<u64>,
    pub exercise_minutes: Option<u64>,
    /// (sum of samples, sample count)
    pub heart_rate: Option<(u64, u32)>,
    pub spo2: Option<(u64, u32)>,
    /// Minutes from sleep-duration records.
    pub sleep_duration_minutes: Option<u64>,
    /// Minutes from sleep-stage records.
    pub stage_minutes: Option<u64>,
    pub stage_seconds: BTreeMap<SleepStage, u64>,
}

/// Final per-item values a vendor frame offers to the merge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VendorCells {
    pub vendor: Option<VendorKind>,
    pub steps: Option<u32>,
    pub activity_minutes: Option<u32>,
    pub exercise_minutes: Option<u32>,
    pub heart_rate: Option<(u16, u32)>,
    pub spo2: Option<(u8, u32)>,
    pub sleep_minutes: Option<u32>,
    pub sleep_stage: Option<SleepStage>,
}

impl VendorFrame {
    /// Resolves the frame to canonical cell values: means rounded, durations
    /// clamped to the interval, staged minutes preferred over plain sleep
    /// durations.
    pub fn cells(&self, vendor: VendorKind, grid: WindowGrid) -> VendorCells {
        let cap = u64::from(grid.interval_minutes());
        let clamp = |m: Option<u64>| m.map(|m| m.min(cap) as u32);
        let mean = |s: Option<(u64, u32)>| {
            s.filter(|(_, n)| *n > 0)
                .map(|(sum, n)| (crate::model::round_div(sum, u64::from(n)), n))
        };
        let sleep_minutes = clamp(self.stage_minutes.or(self.sleep_duration_minutes));
        let sleep_stage = if self.stage_minutes.is_some_and(|m| m > 0) {
            super::dominant_sleep_stage(&self.stage_seconds).map(|(s, _)| s)
        } else {
            None
        };
        VendorCells {
            vendor: Some(vendor),
            steps: self.steps.map(|s| s.min(u64::from(u32::MAX)) as u32),
            activity_minutes: clamp(self.activity_minutes),
            exercise_minutes: clamp(self.exercise_minutes),
            heart_rate: mean(self.heart_rate).map(|(v, n)| (v.min(u64::from(u16::MAX)) as u16, n)),
            spo2: mean(self.spo2).map(|(v, n)| (v.min(100) as u8, n)),
            sleep_minutes,
            sleep_stage,
        }
    }
}

/// A value that lost to a higher-priority vendor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub window_start: LocalTimestamp,
    pub item: ItemKind,
    pub kept: VendorKind,
    pub kept_value: String,
    pub dropped: VendorKind,
    pub dropped_value: String,
}

fn item_value(c: &VendorCells, item: ItemKind) -> Option<String> {
    match item {
        ItemKind::Steps => c.steps.map(|v| v.to_string()),
        ItemKind::ActivityDuration => c.activity_minutes.map(|v| v.to_string()),
        ItemKind::ExerciseDuration => c.exercise_minutes.map(|v| v.to_string()),
        ItemKind::HeartRate => c.heart_rate.map(|v| v.0.to_string()),
        ItemKind::OxygenSaturation => c.spo2.map(|v| v.0.to_string()),
        ItemKind::SleepDuration => c.sleep_minutes.map(|v| v.to_string()),
        ItemKind::SleepStage => c.sleep_stage.map(|v| v.to_string()),
    }
}

/// Builds one canonical frame from the vendors' cells for a window: each
/// item comes from the highest-priority vendor that has it. Values are
/// never summed across vendors.
pub fn merge_sources(
    window_start: LocalTimestamp,
    per_vendor: &[VendorCells],
    policy: &MergePolicy,
) -> (CanonicalFrame, Vec<Conflict>) {
    let mut frame = CanonicalFrame::empty(window_start);
    let mut conflicts = Vec::new();
    let mut winners: BTreeMap<ItemKind, usize> = BTreeMap::new();
    for item in ItemKind::ALL {
        let mut having: Vec<usize> = (0..per_vendor.len())
            .filter(|i| {
                per_vendor[*i].vendor.is_some() && item_value(&per_vendor[*i], item).is_some()
            })
            .collect();
        having.sort_by_key(|i| policy.rank(item, per_vendor[*i].vendor.unwrap()));
        let Some(&win) = having.first() else { continue };
        winners.insert(item, win);
        let w = &per_vendor[win];
        for &lose in &having[1..] {
            let l = &per_vendor[lose];
            conflicts.push(Conflict {
                window_start,
                item,
                kept: w.vendor.unwrap(),
                kept_value: item_value(w, item).unwrap(),
                dropped: l.vendor.unwrap(),
                dropped_value: item_value(l, item).unwrap(),
            });
        }
    }
    // A stage needs positive sleep minutes beside it; take them from the
    // stage's own vendor when the preferred sleep-minute source has zero.
    if let (Some(&st), Some(&sl)) = (
        winners.get(&ItemKind::SleepStage),
        winners.get(&ItemKind::SleepDuration),
    ) {
        if per_vendor[sl].sleep_minutes == Some(0) {
            winners.insert(ItemKind::SleepDuration, st);
        }
    }
    for (item, idx) in winners {
        let c = &per_vendor[idx];
        match item {
            ItemKind::Steps => frame.steps = c.steps,
            ItemKind::ActivityDuration => frame.activity_minutes = c.activity_minutes,
            ItemKind::ExerciseDuration => frame.exercise_minutes = c.exercise_minutes,
            ItemKind::HeartRate => {
                frame.heart_rate_bpm = c.heart_rate.map(|v| v.0);
                frame.sample_counts.heart_rate = c.heart_rate.map_or(0, |v| v.1);
            }
            ItemKind::OxygenSaturation => {
                frame.spo2_percent = c.spo2.map(|v| v.0);
                frame.sample_counts.spo2 = c.spo2.map_or(0, |v| v.1);
            }
            ItemKind::SleepDuration => frame.sleep_minutes = c.sleep_minutes,
            ItemKind::SleepStage => frame.sleep_stage = c.sleep_stage,
        }
        frame.sources.insert(item, c.vendor.unwrap());
    }
    (frame, conflicts)
}
