//! C ABI over `vital-core`.
//!
//! Datasets are opaque `VitalDataset` handles. Every function returns a
//! `VitalStatus`; on failure `vital_last_error_message` describes the error
//! for the calling thread. Strings handed out by the library are owned by
//! the caller and released with `vital_string_free`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use vital_core::integrate::{daily_rollup, MergePolicy};
use vital_core::model::WindowGrid;
use vital_core::pipeline::{run_pipeline, PipelineError, PipelineOptions};
use vital_core::quality::{apply_filter, assess, FilterSpec, QualityError};
use vital_core::service::parse_priority;
use vital_core::store::{
    export_canonical_csv, import_canonical_csv, read_dataset_dir, read_source_dir, read_sources,
    write_dataset_dir, ImportError, ImportOptions, Manifest, SourceFile, StoreError, StoredDataset,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VitalStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    NotFound = 4,
    Io = 5,
    Corrupt = 6,
    ParseFailed = 7,
    NoRecords = 8,
    IntegrationFailed = 9,
    InvalidSpec = 10,
    Panic = 11,
}

const STATUS_NAMES: [&CStr; 12] = [
    c"ok",
    c"null_argument",
    c"invalid_utf8",
    c"invalid_argument",
    c"not_found",
    c"io",
    c"corrupt",
    c"parse_failed",
    c"no_records",
    c"integration_failed",
    c"invalid_spec",
    c"panic",
];

/// An integrated dataset together with the exports it came from.
pub struct VitalDataset {
    stored: StoredDataset,
    sources: Vec<SourceFile>,
}

struct Failure {
    status: VitalStatus,
    message: String,
}

impl Failure {
    fn new(status: VitalStatus, message: impl Into<String>) -> Failure {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Failure {
        let status = match &e {
            StoreError::NotFound(_) | StoreError::FilterNotFound { .. } => VitalStatus::NotFound,
            StoreError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                VitalStatus::NotFound
            }
            StoreError::Io { .. } => VitalStatus::Io,
            StoreError::InvalidName(_) | StoreError::AlreadyExists(_) => {
                VitalStatus::InvalidArgument
            }
            StoreError::Json { .. }
            | StoreError::DigestMismatch { .. }
            | StoreError::Corrupt { .. }
            | StoreError::Invalid { .. } => VitalStatus::Corrupt,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Failure {
        let status = match &e {
            PipelineError::Config(_) | PipelineError::Timezone(_) => VitalStatus::InvalidArgument,
            PipelineError::NoRecords { .. } => VitalStatus::NoRecords,
            PipelineError::Integration(_) => VitalStatus::IntegrationFailed,
        };
        let mut message = e.to_string();
        if let PipelineError::NoRecords { diagnostics, .. } = &e {
            for d in diagnostics {
                message.push('\n');
                message.push_str(&d.to_string());
            }
        }
        Failure::new(status, message)
    }
}

impl From<ImportError> for Failure {
    fn from(e: ImportError) -> Failure {
        Failure::new(VitalStatus::ParseFailed, e.to_string())
    }
}

impl From<QualityError> for Failure {
    fn from(e: QualityError) -> Failure {
        Failure::new(VitalStatus::InvalidSpec, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VitalStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VitalStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {what}"));
            VitalStatus::Panic
        }
    }
}

unsafe fn required_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            VitalStatus::NullArgument,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(VitalStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn optional_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        required_str(p, what).map(Some)
    }
}

unsafe fn dataset<'a>(ds: *const VitalDataset) -> Result<&'a VitalDataset, Failure> {
    ds.as_ref()
        .ok_or_else(|| Failure::new(VitalStatus::NullArgument, "dataset is null"))
}

fn check_out<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure::new(
            VitalStatus::NullArgument,
            "output pointer is null",
        ))
    } else {
        Ok(())
    }
}

fn grid(interval_minutes: u32) -> Result<WindowGrid, Failure> {
    WindowGrid::new(interval_minutes)
        .map_err(|e| Failure::new(VitalStatus::InvalidArgument, e.to_string()))
}

fn parse_spec(json: Option<&str>) -> Result<FilterSpec, Failure> {
    let spec: FilterSpec = match json {
        None => FilterSpec::default(),
        Some(text) => serde_json::from_str(text)
            .map_err(|e| Failure::new(VitalStatus::InvalidSpec, format!("filter spec: {e}")))?,
    };
    spec.validate()?;
    Ok(spec)
}

fn to_c_string(text: String) -> Result<*mut c_char, Failure> {
    CString::new(text)
        .map(CString::into_raw)
        .map_err(|e| Failure::new(VitalStatus::Corrupt, e.to_string()))
}

fn to_json(value: &impl serde::Serialize) -> Result<*mut c_char, Failure> {
    let text = serde_json::to_string(value)
        .map_err(|e| Failure::new(VitalStatus::Corrupt, e.to_string()))?;
    to_c_string(text)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn vital_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Static snake_case name of a status code; "unknown" for other values.
#[no_mangle]
pub extern "C" fn vital_status_name(status: i32) -> *const c_char {
    usize::try_from(status)
        .ok()
        .and_then(|i| STATUS_NAMES.get(i))
        .map_or(c"unknown".as_ptr(), |s| s.as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn vital_version() -> *const c_char {
    const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Integrates every `.csv` export under `in_dir`.
///
/// `timezone` (default UTC), `priority` (comma-separated vendors, default
/// order otherwise) and `dataset_id` (default "dataset") may be null.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_integrate_dir(
    in_dir: *const c_char,
    timezone: *const c_char,
    interval_minutes: u32,
    priority: *const c_char,
    dataset_id: *const c_char,
    out: *mut *mut VitalDataset,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        let in_dir = required_str(in_dir, "in_dir")?;
        let timezone = optional_str(timezone, "timezone")?.unwrap_or("UTC");
        let priority = optional_str(priority, "priority")?;
        let defaults = PipelineOptions::default();
        let dataset_id = optional_str(dataset_id, "dataset_id")?
            .map_or(defaults.dataset_id.clone(), str::to_string);
        let policy = match priority {
            None => MergePolicy::default(),
            Some(p) => parse_priority(p)
                .map_err(|e| Failure::new(VitalStatus::InvalidArgument, e.message))?,
        };
        let mut sources = read_source_dir(Path::new(in_dir))?;
        if sources.is_empty() {
            return Err(Failure::new(
                VitalStatus::NoRecords,
                format!("{in_dir}: no files to integrate"),
            ));
        }
        let opts = PipelineOptions {
            dataset_id,
            timezone: timezone.to_string(),
            grid: grid(interval_minutes)?,
            policy,
            ..defaults
        };
        let output = run_pipeline(&sources, &opts)?;
        for (s, f) in sources.iter_mut().zip(&output.files) {
            s.vendor = f.vendor;
            s.item = f.item;
        }
        let stored = StoredDataset {
            manifest: Manifest::describe(&output.dataset, &sources),
            dataset: output.dataset,
            report: None,
            filters: BTreeMap::new(),
        };
        *out = Box::into_raw(Box::new(VitalDataset { stored, sources }));
        Ok(())
    })
}

/// Loads a dataset directory, verifying every stored file.
///
/// # Safety
/// `dir` must be a valid NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_load(
    dir: *const c_char,
    out: *mut *mut VitalDataset,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        let dir = Path::new(required_str(dir, "dir")?);
        let stored = read_dataset_dir(dir)?;
        let sources = read_sources(dir, &stored.manifest)?;
        *out = Box::into_raw(Box::new(VitalDataset { stored, sources }));
        Ok(())
    })
}

/// Writes the dataset directory to `dir`, replacing what is there.
///
/// # Safety
/// `ds` must come from this library; `dir` must be a valid string.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_save(
    ds: *const VitalDataset,
    dir: *const c_char,
) -> VitalStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let dir = required_str(dir, "dir")?;
        write_dataset_dir(Path::new(dir), &ds.stored, &ds.sources)?;
        Ok(())
    })
}

/// Reads a canonical CSV export back into a dataset with no source files.
/// `timezone` (default UTC) and `dataset_id` (default "imported") may be
/// null.
///
/// # Safety
/// String arguments must be null where allowed or valid strings; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_import_csv(
    csv_path: *const c_char,
    timezone: *const c_char,
    interval_minutes: u32,
    dataset_id: *const c_char,
    out: *mut *mut VitalDataset,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        let path = required_str(csv_path, "csv_path")?;
        let defaults = ImportOptions::default();
        let opts = ImportOptions {
            dataset_id: optional_str(dataset_id, "dataset_id")?
                .map_or(defaults.dataset_id, str::to_string),
            timezone: optional_str(timezone, "timezone")?
                .unwrap_or("UTC")
                .to_string(),
            grid: grid(interval_minutes)?,
        };
        let bytes = std::fs::read(path).map_err(|e| {
            let status = if e.kind() == std::io::ErrorKind::NotFound {
                VitalStatus::NotFound
            } else {
                VitalStatus::Io
            };
            Failure::new(status, format!("{path}: {e}"))
        })?;
        let dataset = import_canonical_csv(&bytes, &opts)?;
        let stored = StoredDataset {
            manifest: Manifest::describe(&dataset, &[]),
            dataset,
            report: None,
            filters: BTreeMap::new(),
        };
        *out = Box::into_raw(Box::new(VitalDataset {
            stored,
            sources: Vec::new(),
        }));
        Ok(())
    })
}

/// Number of window frames.
///
/// # Safety
/// `ds` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_frame_count(
    ds: *const VitalDataset,
    out: *mut usize,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        *out = dataset(ds)?.stored.dataset.frames.len();
        Ok(())
    })
}

/// Dataset id as a new string.
///
/// # Safety
/// `ds` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_id(
    ds: *const VitalDataset,
    out: *mut *mut c_char,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        *out = to_c_string(dataset(ds)?.stored.dataset.dataset_id.clone())?;
        Ok(())
    })
}

/// Manifest JSON.
///
/// # Safety
/// `ds` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_manifest_json(
    ds: *const VitalDataset,
    out: *mut *mut c_char,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        *out = to_json(&dataset(ds)?.stored.manifest)?;
        Ok(())
    })
}

/// Quality report JSON under the thresholds of `spec_json` (null for the
/// defaults).
///
/// # Safety
/// `ds` must come from this library; `spec_json` null or a valid string;
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_quality_json(
    ds: *const VitalDataset,
    spec_json: *const c_char,
    out: *mut *mut c_char,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        let ds = dataset(ds)?;
        let spec = parse_spec(optional_str(spec_json, "spec_json")?)?;
        let report = assess(&ds.stored.dataset, &spec, None)?;
        *out = to_json(&report)?;
        Ok(())
    })
}

/// Canonical CSV of the days kept by `spec_json`. The retention summary JSON
/// goes to `out_retention` unless it is null. The dataset is not modified.
///
/// # Safety
/// `ds` must come from this library; `spec_json` a valid string; `out_csv`
/// a valid pointer; `out_retention` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_filter_export_csv(
    ds: *const VitalDataset,
    spec_json: *const c_char,
    out_csv: *mut *mut c_char,
    out_retention: *mut *mut c_char,
) -> VitalStatus {
    guard(|| {
        check_out(out_csv)?;
        let ds = dataset(ds)?;
        let spec = parse_spec(Some(required_str(spec_json, "spec_json")?))?;
        let outcome = apply_filter(&ds.stored.dataset, &spec)?;
        let csv = to_c_string(export_canonical_csv(&outcome.dataset))?;
        if !out_retention.is_null() {
            match to_json(&outcome.retention) {
                Ok(r) => *out_retention = r,
                Err(e) => {
                    drop(CString::from_raw(csv));
                    return Err(e);
                }
            }
        }
        *out_csv = csv;
        Ok(())
    })
}

/// Canonical CSV of every frame.
///
/// # Safety
/// `ds` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_export_csv(
    ds: *const VitalDataset,
    out: *mut *mut c_char,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        *out = to_c_string(export_canonical_csv(&dataset(ds)?.stored.dataset))?;
        Ok(())
    })
}

/// Daily summaries as a JSON array.
///
/// # Safety
/// `ds` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_daily_json(
    ds: *const VitalDataset,
    out: *mut *mut c_char,
) -> VitalStatus {
    guard(|| {
        check_out(out)?;
        *out = to_json(&daily_rollup(&dataset(ds)?.stored.dataset))?;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vital_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a dataset handle. Null is ignored.
///
/// # Safety
/// `ds` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vital_dataset_free(ds: *mut VitalDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}
