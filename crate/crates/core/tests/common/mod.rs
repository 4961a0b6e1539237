//! Generators and independent reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::Rng;

use vital_core::adapters::{ColumnRole, FileSchema, Quantity, RawRecord, SourceLine};
use vital_core::model::{
    CanonicalFrame, Dataset, ItemKind, LocalTimestamp, SleepStage, VendorKind, WindowGrid,
};
use vital_core::quality::FilterSpec;

pub const INTERVALS: [u32; 8] = [1, 2, 5, 10, 15, 20, 30, 60];

pub fn ts(s: &str) -> LocalTimestamp {
    s.parse().expect("canonical timestamp")
}

pub fn base_time() -> LocalTimestamp {
    ts("2024-03-15 00:00:00")
}

fn raw(vendor: VendorKind, item: ItemKind, start: LocalTimestamp) -> RawRecord {
    RawRecord {
        vendor,
        item,
        start,
        end: None,
        value: None,
        stage: None,
        day_level: false,
        source: SourceLine::new("gen", 0),
    }
}

fn supported_vendor<R: Rng>(rng: &mut R, item: ItemKind) -> VendorKind {
    let choices: Vec<VendorKind> = VendorKind::ALL
        .into_iter()
        .filter(|v| v.supports(item))
        .collect();
    *choices.choose(rng).unwrap()
}

/// Random normalized records over about three days: spans of every
/// duration item and steps with arbitrary second boundaries (midnight
/// crossings included) plus heart-rate and SpO2 points.
pub fn random_records<R: Rng>(rng: &mut R, n: usize) -> Vec<RawRecord> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let start = base_time().plus_seconds(rng.gen_range(0..3 * 86_400));
        let item = *ItemKind::ALL.choose(rng).unwrap();
        let vendor = supported_vendor(rng, item);
        let mut r = raw(vendor, item, start);
        match item {
            ItemKind::HeartRate => r.value = Some(Quantity::Int(rng.gen_range(30..200))),
            ItemKind::OxygenSaturation => r.value = Some(Quantity::Int(rng.gen_range(85..=100))),
            _ => {
                let secs = if rng.gen_bool(0.2) {
                    rng.gen_range(1..120)
                } else {
                    rng.gen_range(60..7_200)
                };
                r.end = Some(start.plus_seconds(secs));
                match item {
                    ItemKind::Steps => r.value = Some(Quantity::Int(rng.gen_range(0..5_000))),
                    ItemKind::ExerciseDuration if rng.gen_bool(0.5) => {
                        r.value = Some(Quantity::Int(rng.gen_range(0..8_000)))
                    }
                    ItemKind::SleepStage => r.stage = Some(*SleepStage::ALL.choose(rng).unwrap()),
                    _ => {}
                }
            }
        }
        out.push(r);
    }
    out
}

/// Records that integrate back into exactly `ds`'s cells: each present item
/// becomes one record from its source vendor lying inside the window.
pub fn frames_to_records(ds: &Dataset) -> Vec<RawRecord> {
    let mut out = Vec::new();
    for f in &ds.frames {
        let w = f.window_start;
        let span = |vendor, item, minutes: u32| {
            let mut r = raw(vendor, item, w);
            let secs = if minutes == 0 {
                1
            } else {
                i64::from(minutes) * 60
            };
            r.end = Some(w.plus_seconds(secs));
            r
        };
        if let Some(n) = f.steps {
            let mut r = span(f.sources[&ItemKind::Steps], ItemKind::Steps, 1);
            r.value = Some(Quantity::Int(i64::from(n)));
            out.push(r);
        }
        if let Some(m) = f.activity_minutes {
            out.push(span(
                f.sources[&ItemKind::ActivityDuration],
                ItemKind::ActivityDuration,
                m,
            ));
        }
        if let Some(m) = f.exercise_minutes {
            out.push(span(
                f.sources[&ItemKind::ExerciseDuration],
                ItemKind::ExerciseDuration,
                m,
            ));
        }
        if let Some(bpm) = f.heart_rate_bpm {
            let mut r = raw(f.sources[&ItemKind::HeartRate], ItemKind::HeartRate, w);
            r.value = Some(Quantity::Int(i64::from(bpm)));
            out.push(r);
        }
        if let Some(p) = f.spo2_percent {
            let mut r = raw(
                f.sources[&ItemKind::OxygenSaturation],
                ItemKind::OxygenSaturation,
                w,
            );
            r.value = Some(Quantity::Int(i64::from(p)));
            out.push(r);
        }
        if let Some(m) = f.sleep_minutes {
            match f.sleep_stage {
                Some(stage) => {
                    let stage_vendor = f.sources[&ItemKind::SleepStage];
                    let mut r = span(stage_vendor, ItemKind::SleepStage, m);
                    r.stage = Some(stage);
                    out.push(r);
                    let minutes_vendor = f.sources[&ItemKind::SleepDuration];
                    if minutes_vendor != stage_vendor {
                        out.push(span(minutes_vendor, ItemKind::SleepDuration, m));
                    }
                }
                None => out.push(span(
                    f.sources[&ItemKind::SleepDuration],
                    ItemKind::SleepDuration,
                    m,
                )),
            }
        }
    }
    out
}

/// A valid random dataset: sparse frames over up to three days on a random
/// grid, each item present with some probability.
pub fn random_dataset<R: Rng>(rng: &mut R, max_frames: usize) -> Dataset {
    let interval = *INTERVALS.choose(rng).unwrap();
    let grid = WindowGrid::new(interval).unwrap();
    let windows = i64::from(grid.windows_per_day()) * 3;
    let n = rng.gen_range(0..=max_frames.min(windows as usize));
    let mut idx: Vec<i64> = (0..windows).collect();
    idx.shuffle(rng);
    idx.truncate(n);
    let frames = idx
        .into_iter()
        .map(|k| {
            random_frame(
                rng,
                base_time().plus_seconds(k * grid.interval_seconds()),
                interval,
            )
        })
        .collect();
    Dataset::new("generated", "UTC", grid, frames, Vec::new()).expect("generated frames are valid")
}

pub fn random_frame<R: Rng>(
    rng: &mut R,
    window_start: LocalTimestamp,
    interval: u32,
) -> CanonicalFrame {
    let mut f = CanonicalFrame::empty(window_start);
    let p = 0.45;
    while f.is_empty() {
        if rng.gen_bool(p) {
            f.steps = Some(rng.gen_range(0..3_000));
        }
        if rng.gen_bool(p) {
            f.activity_minutes = Some(rng.gen_range(0..=interval));
        }
        if rng.gen_bool(p) {
            f.exercise_minutes = Some(rng.gen_range(0..=interval));
        }
        if rng.gen_bool(p) {
            f.heart_rate_bpm = Some(rng.gen_range(1..260));
            f.sample_counts.heart_rate = 1;
        }
        if rng.gen_bool(p) {
            f.spo2_percent = Some(rng.gen_range(0..=100));
            f.sample_counts.spo2 = 1;
        }
        if rng.gen_bool(p) {
            f.sleep_minutes = Some(rng.gen_range(0..=interval));
            if f.sleep_minutes.unwrap() > 0 && rng.gen_bool(0.6) {
                f.sleep_stage = Some(*SleepStage::ALL.choose(rng).unwrap());
            }
        }
    }
    let present: Vec<ItemKind> = f.present_items().collect();
    for item in present {
        let v = supported_vendor(rng, item);
        f.sources.insert(item, v);
    }
    f
}

/// Records that `schema` can carry without loss, in the shape its parser
/// produces after normalization.
pub fn records_for_schema<R: Rng>(rng: &mut R, schema: &FileSchema, n: usize) -> Vec<RawRecord> {
    let has = |role| schema.columns.iter().any(|c| c.role == role);
    let mut starts: Vec<i64> = (0..n as i64 * 4)
        .map(|k| k * 97 + rng.gen_range(0..97))
        .collect();
    starts.shuffle(rng);
    starts.truncate(n);
    starts.sort();
    let mut out = Vec::with_capacity(n);
    for (k, off) in starts.into_iter().enumerate() {
        let start = base_time().plus_seconds(off * 60);
        let mut r = raw(schema.vendor, schema.item, start);
        if schema.day_level {
            r.start = LocalTimestamp::midnight(base_time().date() + chrono::Days::new(k as u64));
            r.day_level = true;
            r.stage = Some(*SleepStage::ALL.choose(rng).unwrap());
            r.value = Some(Quantity::Int(rng.gen_range(0..600)));
            out.push(r);
            continue;
        }
        // whole-second starts only when the format writes seconds
        let start = if schema.timestamp == vital_core::adapters::TimestampFormat::SplitDateTime
            && rng.gen_bool(0.5)
        {
            start
        } else {
            start.plus_seconds(rng.gen_range(0..60))
        };
        r.start = start;
        if schema.item.is_biometric() {
            let v = match schema.item {
                ItemKind::HeartRate => rng.gen_range(30..220),
                _ => rng.gen_range(80..=100),
            };
            r.value = Some(Quantity::Int(v));
            out.push(r);
            continue;
        }
        let secs = if has(ColumnRole::End) || has(ColumnRole::DurationSeconds) {
            rng.gen_range(1..7_200)
        } else if has(ColumnRole::DurationMinutes) {
            rng.gen_range(1..120) * 60
        } else {
            60
        };
        r.end = Some(start.plus_seconds(secs));
        if has(ColumnRole::Value) || has(ColumnRole::Steps) {
            r.value = Some(Quantity::Int(rng.gen_range(0..6_000)));
        }
        if has(ColumnRole::Stage) {
            r.stage = Some(*SleepStage::ALL.choose(rng).unwrap());
        }
        out.push(r);
    }
    out
}

/// Record equality ignoring where it was read from.
pub fn same_record(a: &RawRecord, b: &RawRecord) -> bool {
    a.vendor == b.vendor
        && a.item == b.item
        && a.start == b.start
        && a.end == b.end
        && a.value == b.value
        && a.stage == b.stage
        && a.day_level == b.day_level
}

/// Apportionment by exact rational comparison: floors of the quotas, then
/// one extra unit to each of the `leftover` largest remainders, compared by
/// cross-multiplication, lower index first on ties.
pub fn largest_remainder_oracle(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut shares: Vec<u64> = weights
        .iter()
        .map(|&w| (total as u128 * w as u128 / sum) as u64)
        .collect();
    let given: u64 = shares.iter().sum();
    let mut taken = vec![false; weights.len()];
    for _ in 0..(total - given) {
        let mut best: Option<usize> = None;
        for i in 0..weights.len() {
            if taken[i] {
                continue;
            }
            let rem = |j: usize| total as u128 * weights[j] as u128 - shares[j] as u128 * sum;
            match best {
                None => best = Some(i),
                Some(b) if rem(i) > rem(b) => best = Some(i),
                _ => {}
            }
        }
        let b = best.unwrap();
        taken[b] = true;
        shares[b] += 1;
    }
    shares
}

/// Pearson r by the single-pass textbook formula in exact integer sums.
pub fn pearson_oracle(pairs: &[(i64, i64)]) -> Option<f64> {
    let n = pairs.len() as i128;
    if n < 2 {
        return None;
    }
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for &(x, y) in pairs {
        let (x, y) = (x as i128, y as i128);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let num = n * sxy - sx * sy;
    let dx = n * sxx - sx * sx;
    let dy = n * syy - sy * sy;
    if dx == 0 || dy == 0 {
        return None;
    }
    Some(num as f64 / ((dx as f64).sqrt() * (dy as f64).sqrt()))
}

/// Brute-force plausibility scan: (steps-during-sleep windows, HR outlier
/// windows).
pub fn plausibility_scan(
    ds: &Dataset,
    spec: &FilterSpec,
) -> (Vec<LocalTimestamp>, Vec<LocalTimestamp>) {
    let mut sleep = Vec::new();
    let mut outliers = Vec::new();
    for f in &ds.frames {
        let asleep = matches!(f.sleep_minutes, Some(m) if m >= spec.sleep_window_min_minutes)
            && f.sleep_stage != Some(SleepStage::Awake);
        if asleep && matches!(f.steps, Some(s) if s > spec.steps_during_sleep_step_threshold) {
            sleep.push(f.window_start);
        }
        if let Some(bpm) = f.heart_rate_bpm {
            if bpm < spec.hr_bounds.0 || bpm > spec.hr_bounds.1 {
                outliers.push(f.window_start);
            }
        }
    }
    (sleep, outliers)
}

/// Runs the `vital` binary.
pub fn vital(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vital"))
        .args(args)
        .env_remove("VITAL_TOKEN")
        .output()
        .expect("run vital")
}

pub fn vital_ok(args: &[&str]) -> String {
    let out = vital(args);
    assert!(
        out.status.success(),
        "vital {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub fn write_fixture(dir: &Path, files: &[vital_core::store::SourceFile]) {
    std::fs::create_dir_all(dir).unwrap();
    for f in files {
        std::fs::write(dir.join(&f.name), &f.bytes).unwrap();
    }
}

pub fn fixtures_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Per-date totals of a canonical CSV's steps column.
pub fn csv_dates(csv: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for line in csv.lines().skip(1) {
        *out.entry(line[..10].to_string()).or_default() += 1;
    }
    out
}

pub mod api {
    use axum::body::Body;
    use axum::http::{Request, StatusCode};
    use axum::Router;
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    pub struct Reply {
        pub status: StatusCode,
        pub content_type: Option<String>,
        pub body: Vec<u8>,
    }

    impl Reply {
        pub fn json(&self) -> serde_json::Value {
            serde_json::from_slice(&self.body)
                .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
        }

        pub fn text(&self) -> String {
            String::from_utf8(self.body.clone()).unwrap()
        }
    }

    pub async fn call(
        router: &Router,
        method: &str,
        uri: &str,
        body: Option<serde_json::Value>,
    ) -> Reply {
        call_with(router, method, uri, body, None).await
    }

    pub async fn call_with(
        router: &Router,
        method: &str,
        uri: &str,
        body: Option<serde_json::Value>,
        token: Option<&str>,
    ) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(serde_json::to_vec(&b).unwrap())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let content_type = resp
            .headers()
            .get("content-type")
            .map(|v| v.to_str().unwrap().to_string());
        let body = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        Reply {
            status,
            content_type,
            body,
        }
    }

    /// `{"files": [...]}` upload body from source files.
    pub fn upload_body(files: &[vital_core::store::SourceFile]) -> serde_json::Value {
        serde_json::json!({
            "files": files
                .iter()
                .map(|f| serde_json::json!({
                    "name": f.name,
                    "content": String::from_utf8(f.bytes.clone()).unwrap(),
                }))
                .collect::<Vec<_>>()
        })
    }
}
