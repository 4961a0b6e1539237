//! Integration of normalized records into the fixed-interval dataset.
//!
//! Per record: decompose its span over the grid, allocate its quantity to
//! the windows, then per vendor and window sum span quantities and average
//! biometric samples. Vendors are merged per item by priority and only
//! windows with at least one present item are materialized.

mod allocate;
mod merge;
mod rollup;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

pub use allocate::{
    allocate_span_quantity, average_biometric, dominant_sleep_stage, largest_remainder,
    seconds_to_minutes, sum_short_records, Allocation,
};
pub use merge::{merge_sources, Conflict, MergePolicy, PolicyError, VendorCells, VendorFrame};
pub use rollup::daily_rollup;

use crate::adapters::RawRecord;
use crate::model::{
    align_to_window, overlap_decomposition, DailyStageRecord, Dataset, ItemKind, LocalTimestamp,
    ModelError, SleepStage, VendorKind, WindowGrid,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntegrationError {
    #[error("no records produced any frame")]
    EmptyDataset,
    #[error("internal consistency: {0}")]
    InternalConsistency(String),
    #[error("{source_line}: {reason}")]
    InvalidRecord { source_line: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IntegrationError {
    pub(crate) fn invalid(record: &RawRecord, reason: &str) -> Self {
        IntegrationError::InvalidRecord {
            source_line: record.source.to_string(),
            reason: reason.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub grid: WindowGrid,
    pub policy: MergePolicy,
    pub dataset_id: String,
    pub timezone: String,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            grid: WindowGrid::default(),
            policy: MergePolicy::default(),
            dataset_id: String::new(),
            timezone: "UTC".to_string(),
        }
    }
}

impl IntegrateOptions {
    pub fn with_grid(grid: WindowGrid) -> Self {
        IntegrateOptions {
            grid,
            ..Default::default()
        }
    }
}

/// Everything integration produced, including the pre-merge per-vendor
/// aggregates used for audits.
#[derive(Clone, Debug)]
pub struct IntegrationOutput {
    pub dataset: Dataset,
    pub conflicts: Vec<Conflict>,
    pub vendor_frames: BTreeMap<(LocalTimestamp, VendorKind), VendorFrame>,
    /// Whole minutes allocated per input record (zero for non-duration
    /// records), indexed like the input.
    pub record_minutes: Vec<u64>,
}

pub fn integrate(
    records: &[RawRecord],
    opts: &IntegrateOptions,
) -> Result<Dataset, IntegrationError> {
    integrate_detailed(records, opts).map(|o| o.dataset)
}

fn add(slot: &mut Option<u64>, amount: u64) {
    *slot = Some(slot.unwrap_or(0) + amount);
}

pub fn integrate_detailed(
    records: &[RawRecord],
    opts: &IntegrateOptions,
) -> Result<IntegrationOutput, IntegrationError> {
    let grid = opts.grid;
    let step = grid.interval_seconds();
    let mut frames: HashMap<(LocalTimestamp, VendorKind), VendorFrame> = HashMap::new();
    let mut daily: BTreeMap<(chrono::NaiveDate, SleepStage, VendorKind), u64> = BTreeMap::new();
    let mut record_minutes = vec![0u64; records.len()];
    let mut seconds = Vec::new();

    for (i, r) in records.iter().enumerate() {
        if r.day_level {
            let (Some(stage), Some(minutes)) = (r.stage, r.value.and_then(|q| q.as_int())) else {
                return Err(IntegrationError::invalid(
                    r,
                    "day-level row needs a stage and minutes",
                ));
            };
            if minutes < 0 {
                return Err(IntegrationError::invalid(r, "negative minutes"));
            }
            *daily.entry((r.start.date(), stage, r.vendor)).or_default() += minutes as u64;
            continue;
        }

        if r.item.is_biometric() {
            let value = r
                .value
                .and_then(|q| q.as_int())
                .filter(|v| *v > 0 || (*v == 0 && r.item == ItemKind::OxygenSaturation))
                .ok_or_else(|| IntegrationError::invalid(r, "biometric value not normalized"))?;
            let vf = frames
                .entry((align_to_window(r.start, grid), r.vendor))
                .or_default();
            let slot = match r.item {
                ItemKind::HeartRate => &mut vf.heart_rate,
                _ => &mut vf.spo2,
            };
            let (sum, n) = slot.get_or_insert((0, 0));
            *sum += value as u64;
            *n += 1;
            continue;
        }

        let end = r
            .end
            .ok_or_else(|| IntegrationError::invalid(r, "span record without an end"))?;
        if r.item == ItemKind::SleepStage && r.stage.is_none() {
            return Err(IntegrationError::invalid(
                r,
                "sleep-stage record without a stage",
            ));
        }
        let decomposition = overlap_decomposition(r.start, end, grid)?;
        let allocations = allocate_span_quantity(r, i, &decomposition, step)?;

        seconds.clear();
        for a in allocations.iter().filter(|a| a.item != ItemKind::Steps) {
            seconds.push(a.amount);
        }
        let minutes = if seconds.is_empty() {
            Vec::new()
        } else {
            seconds_to_minutes(&seconds)
        };
        record_minutes[i] = minutes.iter().sum();

        let mut minute_iter = minutes.into_iter();
        for a in &allocations {
            let vf = frames.entry((a.window_start, a.vendor)).or_default();
            if a.item == ItemKind::Steps {
                add(&mut vf.steps, a.amount);
                continue;
            }
            let m = minute_iter
                .next()
                .expect("one minute share per duration allocation");
            match a.item {
                ItemKind::ActivityDuration => add(&mut vf.activity_minutes, m),
                ItemKind::ExerciseDuration => add(&mut vf.exercise_minutes, m),
                ItemKind::SleepDuration => add(&mut vf.sleep_duration_minutes, m),
                ItemKind::SleepStage => {
                    add(&mut vf.stage_minutes, m);
                    *vf.stage_seconds.entry(r.stage.unwrap()).or_default() += a.amount;
                }
                _ => unreachable!("biometrics handled above"),
            }
        }
    }

    let vendor_frames: BTreeMap<_, _> = frames.into_iter().collect();
    let mut out_frames = Vec::new();
    let mut conflicts = Vec::new();
    let mut cells = Vec::with_capacity(VendorKind::ALL.len());
    let mut iter = vendor_frames.iter().peekable();
    while let Some(((window, vendor), vf)) = iter.next() {
        cells.clear();
        cells.push(vf.cells(*vendor, grid));
        while let Some(((w, v), next)) = iter.peek() {
            if w != window {
                break;
            }
            cells.push(next.cells(*v, grid));
            iter.next();
        }
        let (frame, mut c) = merge_sources(*window, &cells, &opts.policy);
        conflicts.append(&mut c);
        if !frame.is_empty() {
            out_frames.push(frame);
        }
    }
    if out_frames.is_empty() {
        return Err(IntegrationError::EmptyDataset);
    }

    let daily_stages = daily
        .into_iter()
        .map(|((date, stage, source), minutes)| DailyStageRecord {
            date,
            stage,
            minutes: minutes.min(u64::from(u32::MAX)) as u32,
            source,
        })
        .collect();
    let dataset = Dataset::new(
        opts.dataset_id.clone(),
        opts.timezone.clone(),
        grid,
        out_frames,
        daily_stages,
    )?;
    Ok(IntegrationOutput {
        dataset,
        conflicts,
        vendor_frames,
        record_minutes,
    })
}
