//! Deterministic synthetic exports for demos, tests and benchmarks.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adapters::{render_export, AdapterConfig, Quantity, RawRecord, SourceLine};
use crate::model::{DatasetTz, ItemKind, LocalTimestamp, SleepStage, VendorKind};
use crate::store::SourceFile;

/// Daily step target of the 19-day demonstration dataset.
pub const DEMO_MEAN_STEPS: u64 = 15_466;
pub const DEMO_DAYS: usize = 19;
pub const DEMO_SLEEP_MINUTES: u32 = 240;

pub fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn record(
    vendor: VendorKind,
    item: ItemKind,
    start: LocalTimestamp,
    end: Option<LocalTimestamp>,
    value: Option<i64>,
) -> RawRecord {
    RawRecord {
        vendor,
        item,
        start,
        end,
        value: value.map(Quantity::Int),
        stage: None,
        day_level: false,
        source: SourceLine::new("synthetic", 0),
    }
}

fn span(
    vendor: VendorKind,
    item: ItemKind,
    start: LocalTimestamp,
    secs: i64,
    value: Option<i64>,
) -> RawRecord {
    record(vendor, item, start, Some(start.plus_seconds(secs)), value)
}

fn point(vendor: VendorKind, item: ItemKind, at: LocalTimestamp, value: i64) -> RawRecord {
    record(vendor, item, at, None, Some(value))
}

/// Renders `records` (all of one vendor and item) as that vendor's export.
pub fn render_file(name: &str, records: &[RawRecord], tz: &DatasetTz) -> SourceFile {
    let config = AdapterConfig::default();
    let first = records.first().expect("at least one record");
    let schema = config
        .schema_for(first.vendor, first.item)
        .expect("default schema for every supported item");
    SourceFile {
        name: name.to_string(),
        vendor: Some(first.vendor),
        item: Some(first.item),
        bytes: render_export(schema, records, &config, tz).into_bytes(),
    }
}

/// A generated export set plus the totals it was built from.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub timezone: String,
    pub files: Vec<SourceFile>,
    pub dates: Vec<NaiveDate>,
    pub daily_steps: Vec<u64>,
    pub daily_sleep_minutes: Vec<u32>,
}

/// 19 days of Samsung pedometer and sleep exports: daily step totals spread
/// evenly around 15,466 (so their mean is exact) and 4 h of sleep a night,
/// plus Fitbit heart rate over the day.
pub fn demo_fixture() -> Fixture {
    let tz = DatasetTz::utc();
    let first = day(2024, 3, 1);
    let mut steps = Vec::new();
    let mut sleep = Vec::new();
    let mut hr = Vec::new();
    let mut dates = Vec::new();
    let mut daily_steps = Vec::new();
    for i in 0..DEMO_DAYS {
        let date = first + chrono::Days::new(i as u64);
        let midnight = LocalTimestamp::midnight(date);
        let total = (DEMO_MEAN_STEPS as i64 + (i as i64 - 9) * 311) as u64;
        dates.push(date);
        daily_steps.push(total);
        // 72 ten-minute pedometer rows, 08:00 to 20:00
        let (q, r) = (total / 72, total % 72);
        for k in 0..72u64 {
            let start = midnight.plus_seconds(8 * 3600 + k as i64 * 600);
            let n = q + u64::from(k < r);
            steps.push(span(
                VendorKind::Samsung,
                ItemKind::Steps,
                start,
                600,
                Some(n as i64),
            ));
        }
        sleep.push(span(
            VendorKind::Samsung,
            ItemKind::SleepDuration,
            midnight.plus_seconds(3600),
            i64::from(DEMO_SLEEP_MINUTES) * 60,
            None,
        ));
        for k in 0..72i64 {
            let at = midnight.plus_seconds(8 * 3600 + k * 600 + 120);
            hr.push(point(
                VendorKind::Fitbit,
                ItemKind::HeartRate,
                at,
                70 + (k % 25),
            ));
        }
    }
    Fixture {
        timezone: tz.to_string(),
        files: vec![
            render_file("samsung_pedometer.csv", &steps, &tz),
            render_file("samsung_sleep.csv", &sleep, &tz),
            render_file("fitbit_heart_rate.csv", &hr, &tz),
        ],
        dates,
        daily_steps,
        daily_sleep_minutes: vec![DEMO_SLEEP_MINUTES; DEMO_DAYS],
    }
}

/// Fitbit heart-rate and per-minute step rows covering the first
/// `hours[i]` hours of consecutive days starting 2024-03-01, one heart-rate
/// sample and one 100-step minute per 10-minute window.
pub fn wear_fixture(hours: &[u32]) -> Fixture {
    let tz = DatasetTz::utc();
    let first = day(2024, 3, 1);
    let mut hr = Vec::new();
    let mut steps = Vec::new();
    let mut dates = Vec::new();
    let mut daily_steps = Vec::new();
    for (i, h) in hours.iter().enumerate() {
        let date = first + chrono::Days::new(i as u64);
        let midnight = LocalTimestamp::midnight(date);
        let windows = i64::from(*h) * 6;
        for k in 0..windows {
            let at = midnight.plus_seconds(k * 600 + 60);
            hr.push(point(
                VendorKind::Fitbit,
                ItemKind::HeartRate,
                at,
                60 + (k % 30),
            ));
            steps.push(span(VendorKind::Fitbit, ItemKind::Steps, at, 60, Some(100)));
        }
        dates.push(date);
        daily_steps.push(windows as u64 * 100);
    }
    Fixture {
        timezone: tz.to_string(),
        files: vec![
            render_file("fitbit_heart_rate.csv", &hr, &tz),
            render_file("fitbit_steps.csv", &steps, &tz),
        ],
        daily_sleep_minutes: vec![0; dates.len()],
        dates,
        daily_steps,
    }
}

/// Samsung exports on 2024-03-15 exercising each aggregation rule once:
/// short step and activity records inside one window, a 30-minute exercise
/// session with 300 steps crossing four windows, and two heart-rate samples
/// in one window.
pub fn rules_fixture() -> Fixture {
    let tz = DatasetTz::utc();
    let t =
        |h: u32, m: u32| LocalTimestamp::from_ymd_hms(2024, 3, 15, h, m, 0).expect("valid time");
    let s = VendorKind::Samsung;
    let steps = vec![
        span(s, ItemKind::Steps, t(8, 0), 180, Some(120)),
        span(s, ItemKind::Steps, t(8, 5), 180, Some(80)),
    ];
    let activity = vec![
        span(s, ItemKind::ActivityDuration, t(8, 1), 180, None),
        span(s, ItemKind::ActivityDuration, t(8, 5), 240, None),
    ];
    let exercise = vec![span(
        s,
        ItemKind::ExerciseDuration,
        t(10, 5),
        1800,
        Some(300),
    )];
    let hr = vec![
        point(s, ItemKind::HeartRate, t(12, 2), 72),
        point(s, ItemKind::HeartRate, t(12, 7), 78),
    ];
    Fixture {
        timezone: tz.to_string(),
        files: vec![
            render_file("samsung_pedometer.csv", &steps, &tz),
            render_file("samsung_activity.csv", &activity, &tz),
            render_file("samsung_exercise.csv", &exercise, &tz),
            render_file("samsung_heart_rate.csv", &hr, &tz),
        ],
        dates: vec![day(2024, 3, 15)],
        daily_steps: vec![500],
        daily_sleep_minutes: vec![0],
    }
}

/// Roughly `2_180 * days` records per vendor: per-minute steps, heart rate
/// every two minutes (SpO2 hourly where exported), a few activity and
/// exercise spans and a staged night of sleep.
pub fn throughput_records(days: u32, seed: u64) -> Vec<RawRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = day(2024, 1, 1);
    let mut out = Vec::with_capacity(days as usize * 4 * 2_200);
    let stages = [
        SleepStage::Light,
        SleepStage::Deep,
        SleepStage::Rem,
        SleepStage::Awake,
    ];
    for vendor in VendorKind::ALL {
        for d in 0..days {
            let midnight = LocalTimestamp::midnight(first + chrono::Days::new(u64::from(d)));
            for m in 0..1440i64 {
                let at = midnight.plus_seconds(m * 60);
                out.push(span(
                    vendor,
                    ItemKind::Steps,
                    at,
                    60,
                    Some(rng.gen_range(0..120)),
                ));
                if m % 2 == 0 {
                    let at = at.plus_seconds(rng.gen_range(0..60));
                    out.push(point(
                        vendor,
                        ItemKind::HeartRate,
                        at,
                        rng.gen_range(45..160),
                    ));
                }
                if m % 60 == 30 && vendor.supports(ItemKind::OxygenSaturation) {
                    out.push(point(
                        vendor,
                        ItemKind::OxygenSaturation,
                        at,
                        rng.gen_range(90..=100),
                    ));
                }
            }
            if vendor.supports(ItemKind::ActivityDuration) {
                for k in 0..6i64 {
                    let start = midnight.plus_seconds(9 * 3600 + k * 5400 + rng.gen_range(0..600));
                    out.push(span(
                        vendor,
                        ItemKind::ActivityDuration,
                        start,
                        rng.gen_range(120..2400),
                        None,
                    ));
                }
            }
            let start = midnight.plus_seconds(18 * 3600 + rng.gen_range(0..1800));
            out.push(span(
                vendor,
                ItemKind::ExerciseDuration,
                start,
                rng.gen_range(900..3600),
                Some(rng.gen_range(500..4000)),
            ));
            let mut t = midnight.plus_seconds(23 * 3600);
            for _ in 0..8 {
                let len = rng.gen_range(600..3600);
                let mut r = span(vendor, ItemKind::SleepStage, t, len, None);
                r.stage = Some(stages[rng.gen_range(0..stages.len())]);
                out.push(r);
                t = t.plus_seconds(len);
            }
        }
    }
    out
}
