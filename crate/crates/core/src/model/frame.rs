use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ItemKind, LocalTimestamp, ModelError, SleepStage, VendorKind, WindowGrid};

/// Which vendor supplied each present item of a frame.
pub type Sources = BTreeMap<ItemKind, VendorKind>;

/// Number of raw samples behind each averaged biometric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub heart_rate: u32,
    pub spo2: u32,
}

/// One integrated row of the fixed-interval grid.
///
/// `None` means "not measured"; `Some(0)` means a measured zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalFrame {
    pub window_start: LocalTimestamp,
    pub steps: Option<u32>,
    pub activity_minutes: Option<u32>,
    pub exercise_minutes: Option<u32>,
    pub heart_rate_bpm: Option<u16>,
    pub spo2_percent: Option<u8>,
    pub sleep_minutes: Option<u32>,
    pub sleep_stage: Option<SleepStage>,
    pub sources: Sources,
    pub sample_counts: SampleCounts,
}

impl CanonicalFrame {
    pub fn empty(window_start: LocalTimestamp) -> Self {
        CanonicalFrame {
            window_start,
            steps: None,
            activity_minutes: None,
            exercise_minutes: None,
            heart_rate_bpm: None,
            spo2_percent: None,
            sleep_minutes: None,
            sleep_stage: None,
            sources: Sources::new(),
            sample_counts: SampleCounts::default(),
        }
    }

    /// Items with a value in this frame, in canonical column order.
    pub fn present_items(&self) -> impl Iterator<Item = ItemKind> + '_ {
        ItemKind::ALL.into_iter().filter(|k| self.has(*k))
    }

    pub fn has(&self, item: ItemKind) -> bool {
        match item {
            ItemKind::Steps => self.steps.is_some(),
            ItemKind::ActivityDuration => self.activity_minutes.is_some(),
            ItemKind::ExerciseDuration => self.exercise_minutes.is_some(),
            ItemKind::HeartRate => self.heart_rate_bpm.is_some(),
            ItemKind::OxygenSaturation => self.spo2_percent.is_some(),
            ItemKind::SleepDuration => self.sleep_minutes.is_some(),
            ItemKind::SleepStage => self.sleep_stage.is_some(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.present_items().next().is_none()
    }

    /// Equality over the exported columns only (sample counts are not
    /// part of the canonical CSV).
    pub fn cells_eq(&self, other: &CanonicalFrame) -> bool {
        self.window_start == other.window_start
            && self.steps == other.steps
            && self.activity_minutes == other.activity_minutes
            && self.exercise_minutes == other.exercise_minutes
            && self.heart_rate_bpm == other.heart_rate_bpm
            && self.spo2_percent == other.spo2_percent
            && self.sleep_minutes == other.sleep_minutes
            && self.sleep_stage == other.sleep_stage
            && self.sources == other.sources
    }

    pub fn check(&self, grid: WindowGrid) -> Result<(), ModelError> {
        let bad = |why: &str| {
            Err(ModelError::FrameInvariant {
                window: self.window_start,
                reason: why.to_string(),
            })
        };
        if !grid.is_aligned(self.window_start) {
            return bad("window_start is not aligned to the grid");
        }
        let limit = grid.interval_minutes();
        for (name, v) in [
            ("activity_minutes", self.activity_minutes),
            ("exercise_minutes", self.exercise_minutes),
            ("sleep_minutes", self.sleep_minutes),
        ] {
            if v.is_some_and(|m| m > limit) {
                return bad(&format!("{name} exceeds the {limit}-minute interval"));
            }
        }
        if self.heart_rate_bpm == Some(0) {
            return bad("heart_rate_bpm must be positive");
        }
        if self.spo2_percent.is_some_and(|p| p > 100) {
            return bad("spo2_percent above 100");
        }
        if self.sleep_stage.is_some() && !self.sleep_minutes.is_some_and(|m| m > 0) {
            return bad("sleep_stage present without positive sleep_minutes");
        }
        for item in ItemKind::ALL {
            if self.has(item) != self.sources.contains_key(&item) {
                return bad(&format!("source provenance mismatch for {item}"));
            }
        }
        Ok(())
    }
}

/// Inclusive calendar-date range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateSpan {
    pub first: NaiveDate,
    pub last: NaiveDate,
}

impl DateSpan {
    pub fn new(first: NaiveDate, last: NaiveDate) -> Result<Self, ModelError> {
        if first > last {
            return Err(ModelError::InvertedRange(first, last));
        }
        Ok(DateSpan { first, last })
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let last = self.last;
        self.first.iter_days().take_while(move |d| *d <= last)
    }

    pub fn len_days(&self) -> u32 {
        (self.last - self.first).num_days() as u32 + 1
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.first <= date && date <= self.last
    }
}

/// Sleep-stage minutes reported only as a per-day aggregate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyStageRecord {
    pub date: NaiveDate,
    pub stage: SleepStage,
    pub minutes: u32,
    pub source: VendorKind,
}

/// The integrated store: a sparse, strictly ascending sequence of non-empty
/// frames on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub dataset_id: String,
    pub timezone: String,
    pub grid: WindowGrid,
    pub frames: Vec<CanonicalFrame>,
    pub collection_span: Option<DateSpan>,
    #[serde(default)]
    pub daily_stages: Vec<DailyStageRecord>,
}

impl Dataset {
    /// Sorts and validates `frames`; empty frames are discarded.
    pub fn new(
        dataset_id: impl Into<String>,
        timezone: impl Into<String>,
        grid: WindowGrid,
        mut frames: Vec<CanonicalFrame>,
        mut daily_stages: Vec<DailyStageRecord>,
    ) -> Result<Self, ModelError> {
        frames.retain(|f| !f.is_empty());
        frames.sort_by_key(|f| f.window_start);
        daily_stages.sort_by_key(|r| (r.date, r.stage, r.source));
        let ds = Dataset {
            dataset_id: dataset_id.into(),
            timezone: timezone.into(),
            grid,
            collection_span: span_of(&frames),
            frames,
            daily_stages,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for pair in self.frames.windows(2) {
            if pair[0].window_start >= pair[1].window_start {
                return Err(ModelError::FrameOrder(pair[1].window_start));
            }
        }
        for f in &self.frames {
            if f.is_empty() {
                return Err(ModelError::FrameInvariant {
                    window: f.window_start,
                    reason: "empty frame materialized".into(),
                });
            }
            f.check(self.grid)?;
        }
        if self.collection_span != span_of(&self.frames) {
            return Err(ModelError::SpanMismatch);
        }
        Ok(())
    }

    /// Frames whose window starts on `date`.
    pub fn frames_on(&self, date: NaiveDate) -> &[CanonicalFrame] {
        let next = date.succ_opt().expect("date in range");
        self.frames_between(
            LocalTimestamp::midnight(date),
            LocalTimestamp::midnight(next),
        )
    }

    /// Frames with `from <= window_start < to`.
    pub fn frames_between(&self, from: LocalTimestamp, to: LocalTimestamp) -> &[CanonicalFrame] {
        let lo = self.frames.partition_point(|f| f.window_start < from);
        let hi = self.frames.partition_point(|f| f.window_start < to);
        &self.frames[lo..hi.max(lo)]
    }

    /// A copy carrying only the frames on dates accepted by `keep`.
    pub fn retain_dates(&self, mut keep: impl FnMut(NaiveDate) -> bool) -> Dataset {
        let frames: Vec<_> = self
            .frames
            .iter()
            .filter(|f| keep(f.window_start.date()))
            .cloned()
            .collect();
        let daily_stages = self
            .daily_stages
            .iter()
            .filter(|r| keep(r.date))
            .cloned()
            .collect();
        Dataset {
            dataset_id: self.dataset_id.clone(),
            timezone: self.timezone.clone(),
            grid: self.grid,
            collection_span: span_of(&frames),
            frames,
            daily_stages,
        }
    }
}

fn span_of(frames: &[CanonicalFrame]) -> Option<DateSpan> {
    Some(DateSpan {
        first: frames.first()?.window_start.date(),
        last: frames.last()?.window_start.date(),
    })
}

/// Per-date rollup of the integrated frames.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailySummary {
    pub date: NaiveDate,
    pub total_steps: u64,
    pub total_sleep_minutes: u32,
    pub total_activity_minutes: u32,
    pub total_exercise_minutes: u32,
    pub mean_heart_rate_bpm: Option<u16>,
    pub mean_spo2_percent: Option<u8>,
    pub wear_minutes: u32,
    pub nonempty_windows: u32,
    /// Minutes per sleep stage; from window-level stages when the day has
    /// any, otherwise from day-level aggregates.
    pub stage_minutes: BTreeMap<SleepStage, u32>,
}
