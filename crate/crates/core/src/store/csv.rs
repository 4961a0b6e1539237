use std::fmt::Write as _;
use std::str::FromStr;

use crate::model::{
    CanonicalFrame, Dataset, ItemKind, LocalTimestamp, ModelError, SleepStage, Sources, VendorKind,
    WindowGrid,
};
use crate::quality::{apply_filter, FilterSpec, QualityError, RetentionSummary};

pub const CANONICAL_HEADER: &str =
    "window_start,steps,activity_min,exercise_min,heart_rate_bpm,spo2_pct,sleep_min,sleep_stage,sources";

const COLUMNS: usize = 9;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ImportError {
    #[error("not a canonical export: header is {found:?}")]
    Schema { found: String },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Invariant {
        line: usize,
        #[source]
        source: ModelError,
    },
}

/// Canonical CSV of every non-empty frame in ascending window order.
pub fn export_canonical_csv(dataset: &Dataset) -> String {
    let mut frames: Vec<&CanonicalFrame> =
        dataset.frames.iter().filter(|f| !f.is_empty()).collect();
    frames.sort_by_key(|f| f.window_start);
    let mut out = String::with_capacity(64 * (frames.len() + 1));
    out.push_str(CANONICAL_HEADER);
    out.push('\n');
    for f in frames {
        write_row(&mut out, f);
    }
    out
}

/// Export after applying `spec`; also returns the retention summary.
pub fn export_filtered_csv(
    dataset: &Dataset,
    spec: &FilterSpec,
) -> Result<(String, RetentionSummary), QualityError> {
    let outcome = apply_filter(dataset, spec)?;
    Ok((export_canonical_csv(&outcome.dataset), outcome.retention))
}

fn write_row(out: &mut String, f: &CanonicalFrame) {
    fn cell<T: std::fmt::Display>(out: &mut String, v: Option<T>) {
        out.push(',');
        if let Some(v) = v {
            let _ = write!(out, "{v}");
        }
    }
    let _ = write!(out, "{}", f.window_start);
    cell(out, f.steps);
    cell(out, f.activity_minutes);
    cell(out, f.exercise_minutes);
    cell(out, f.heart_rate_bpm);
    cell(out, f.spo2_percent);
    cell(out, f.sleep_minutes);
    cell(out, f.sleep_stage);
    out.push(',');
    out.push_str(&sources_field(&f.sources));
    out.push('\n');
}

/// Bare vendor when one vendor supplied every item, else `item=vendor`
/// pairs joined by `;`.
pub fn sources_field(sources: &Sources) -> String {
    let mut vendors = sources.values();
    match vendors.next() {
        None => String::new(),
        Some(first) if vendors.all(|v| v == first) => first.to_string(),
        Some(_) => sources
            .iter()
            .map(|(item, vendor)| format!("{item}={vendor}"))
            .collect::<Vec<_>>()
            .join(";"),
    }
}

#[derive(Clone, Debug)]
pub struct ImportOptions {
    pub dataset_id: String,
    pub timezone: String,
    pub grid: WindowGrid,
}

impl Default for ImportOptions {
    fn default() -> Self {
        ImportOptions {
            dataset_id: "imported".into(),
            timezone: "UTC".into(),
            grid: WindowGrid::default(),
        }
    }
}

/// Parses a canonical export back into a dataset. Averaged biometrics
/// come back with a sample count of one.
pub fn import_canonical_csv(content: &[u8], opts: &ImportOptions) -> Result<Dataset, ImportError> {
    let text = std::str::from_utf8(content).map_err(|e| ImportError::Parse {
        line: 1,
        reason: format!("not UTF-8: {e}"),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    if header.trim_end_matches('\r') != CANONICAL_HEADER {
        return Err(ImportError::Schema {
            found: header.to_string(),
        });
    }
    let mut frames: Vec<CanonicalFrame> = Vec::new();
    for (line, raw) in lines {
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let frame = parse_row(raw).map_err(|reason| ImportError::Parse { line, reason })?;
        frame
            .check(opts.grid)
            .map_err(|source| ImportError::Invariant { line, source })?;
        if frame.is_empty() {
            return Err(ImportError::Parse {
                line,
                reason: "row carries no values".into(),
            });
        }
        if let Some(prev) = frames.last() {
            if prev.window_start >= frame.window_start {
                return Err(ImportError::Invariant {
                    line,
                    source: ModelError::FrameOrder(frame.window_start),
                });
            }
        }
        frames.push(frame);
    }
    Dataset::new(
        opts.dataset_id.clone(),
        opts.timezone.clone(),
        opts.grid,
        frames,
        vec![],
    )
    .map_err(|source| ImportError::Invariant { line: 0, source })
}

fn parse_row(raw: &str) -> Result<CanonicalFrame, String> {
    let cells: Vec<&str> = raw.split(',').collect();
    if cells.len() != COLUMNS {
        return Err(format!("expected {COLUMNS} fields, found {}", cells.len()));
    }
    fn opt<T: FromStr>(name: &str, s: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|e| format!("{name} {s:?}: {e}"))
    }
    let window_start: LocalTimestamp =
        cells[0].parse().map_err(|e| format!("window_start: {e}"))?;
    let mut f = CanonicalFrame::empty(window_start);
    f.steps = opt("steps", cells[1])?;
    f.activity_minutes = opt("activity_min", cells[2])?;
    f.exercise_minutes = opt("exercise_min", cells[3])?;
    f.heart_rate_bpm = opt("heart_rate_bpm", cells[4])?;
    f.spo2_percent = opt("spo2_pct", cells[5])?;
    f.sleep_minutes = opt("sleep_min", cells[6])?;
    f.sleep_stage = opt::<SleepStage>("sleep_stage", cells[7])?;
    f.sample_counts.heart_rate = u32::from(f.heart_rate_bpm.is_some());
    f.sample_counts.spo2 = u32::from(f.spo2_percent.is_some());
    f.sources = parse_sources(cells[8], &f)?;
    Ok(f)
}

fn parse_sources(field: &str, frame: &CanonicalFrame) -> Result<Sources, String> {
    let mut sources = Sources::new();
    if field.is_empty() {
        return Ok(sources);
    }
    if !field.contains('=') {
        let vendor: VendorKind = field.parse().map_err(|e| format!("sources: {e}"))?;
        for item in frame.present_items() {
            sources.insert(item, vendor);
        }
        return Ok(sources);
    }
    for pair in field.split(';') {
        let (item, vendor) = pair
            .split_once('=')
            .ok_or_else(|| format!("sources entry {pair:?} is not item=vendor"))?;
        let item: ItemKind = item.parse().map_err(|e| format!("sources: {e}"))?;
        let vendor: VendorKind = vendor.parse().map_err(|e| format!("sources: {e}"))?;
        if sources.insert(item, vendor).is_some() {
            return Err(format!("sources lists {item} twice"));
        }
    }
    Ok(sources)
}
