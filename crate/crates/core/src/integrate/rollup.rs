use std::collections::BTreeMap;

use crate::model::{round_div, DailySummary, Dataset, SleepStage};

/// One summary per calendar date of the collection span; dates without
/// frames come out zeroed.
pub fn daily_rollup(dataset: &Dataset) -> Vec<DailySummary> {
    let Some(span) = dataset.collection_span else {
        return Vec::new();
    };
    let interval = dataset.grid.interval_minutes();
    span.days()
        .map(|date| {
            let frames = dataset.frames_on(date);
            let mut s = DailySummary {
                date,
                total_steps: 0,
                total_sleep_minutes: 0,
                total_activity_minutes: 0,
                total_exercise_minutes: 0,
                mean_heart_rate_bpm: None,
                mean_spo2_percent: None,
                wear_minutes: frames.len() as u32 * interval,
                nonempty_windows: frames.len() as u32,
                stage_minutes: BTreeMap::new(),
            };
            let (mut hr_sum, mut hr_n, mut o2_sum, mut o2_n) = (0u64, 0u64, 0u64, 0u64);
            for f in frames {
                s.total_steps += u64::from(f.steps.unwrap_or(0));
                s.total_sleep_minutes += f.sleep_minutes.unwrap_or(0);
                s.total_activity_minutes += f.activity_minutes.unwrap_or(0);
                s.total_exercise_minutes += f.exercise_minutes.unwrap_or(0);
                if let Some(hr) = f.heart_rate_bpm {
                    let w = u64::from(f.sample_counts.heart_rate.max(1));
                    hr_sum += u64::from(hr) * w;
                    hr_n += w;
                }
                if let Some(p) = f.spo2_percent {
                    let w = u64::from(f.sample_counts.spo2.max(1));
                    o2_sum += u64::from(p) * w;
                    o2_n += w;
                }
                if let (Some(stage), Some(m)) = (f.sleep_stage, f.sleep_minutes) {
                    *s.stage_minutes.entry(stage).or_default() += m;
                }
            }
            s.mean_heart_rate_bpm = (hr_n > 0).then(|| round_div(hr_sum, hr_n) as u16);
            s.mean_spo2_percent = (o2_n > 0).then(|| round_div(o2_sum, o2_n) as u8);
            if s.stage_minutes.is_empty() {
                s.stage_minutes = day_level_stages(dataset, date);
            }
            s
        })
        .collect()
}

/// Day-aggregated stage minutes from the first vendor that reported any.
fn day_level_stages(dataset: &Dataset, date: chrono::NaiveDate) -> BTreeMap<SleepStage, u32> {
    let rows: Vec<_> = dataset
        .daily_stages
        .iter()
        .filter(|r| r.date == date)
        .collect();
    let Some(vendor) = rows.iter().map(|r| r.source).min() else {
        return BTreeMap::new();
    };
    let mut out = BTreeMap::new();
    for r in rows.into_iter().filter(|r| r.source == vendor) {
        *out.entry(r.stage).or_default() += r.minutes;
    }
    out
}
