use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ApiError;
use crate::adapters::AdapterConfig;
use crate::integrate::{daily_rollup, MergePolicy};
use crate::model::{CanonicalFrame, DailySummary, Dataset, DatasetTz, VendorKind, WindowGrid};
use crate::pipeline::{
    ingest, run_pipeline, DiagnosticEntry, FileSummary, PipelineError, PipelineOptions,
};
use crate::quality::{apply_filter, assess, FilterSpec, QualityReport, RetentionSummary};
use crate::store::{export_canonical_csv, Manifest, SourceFile, Store, StoreError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Receiving,
    Integrated,
    Failed,
}

/// An upload in progress. Only the receiving state accepts files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UploadSession {
    pub session_id: String,
    pub timezone: String,
    pub state: SessionState,
    pub files: Vec<FileSummary>,
    pub diagnostics: Vec<DiagnosticEntry>,
    pub dataset_id: Option<String>,
    #[serde(skip)]
    sources: Vec<SourceFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegrateResponse {
    pub dataset_id: String,
    pub frame_count: usize,
    pub conflicts: usize,
    pub session: UploadSession,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    Window,
    Daily,
}

impl std::str::FromStr for Granularity {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, ApiError> {
        match s {
            "window" => Ok(Granularity::Window),
            "daily" => Ok(Granularity::Daily),
            other => Err(ApiError::bad_request(format!(
                "granularity must be window or daily, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "granularity", content = "rows", rename_all = "snake_case")]
pub enum FrameRows {
    Window(Vec<CanonicalFrame>),
    Daily(Vec<DailySummary>),
}

impl FrameRows {
    pub fn len(&self) -> usize {
        match self {
            FrameRows::Window(v) => v.len(),
            FrameRows::Daily(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterResponse {
    pub dataset_id: String,
    pub saved_as: Option<String>,
    pub retention: RetentionSummary,
}

#[derive(Clone, Debug)]
pub struct AppConfig {
    pub data_dir: PathBuf,
    pub token: Option<String>,
}

/// Service state shared by the HTTP handlers.
#[derive(Debug)]
pub struct App {
    pub config: AppConfig,
    store: Store,
    adapters: AdapterConfig,
    sessions: Mutex<HashMap<String, UploadSession>>,
    quality_cache: Mutex<HashMap<(String, String), QualityReport>>,
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl App {
    pub fn new(config: AppConfig) -> Result<App, ApiError> {
        let store = Store::open(&config.data_dir)?;
        Ok(App {
            config,
            store,
            adapters: AdapterConfig::default(),
            sessions: Mutex::new(HashMap::new()),
            quality_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn create_session(&self, timezone: Option<&str>) -> Result<UploadSession, ApiError> {
        let timezone = timezone.unwrap_or("UTC");
        let tz: DatasetTz = timezone
            .parse()
            .map_err(|e| ApiError::bad_request(format!("timezone: {e}")))?;
        let session = UploadSession {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            timezone: tz.to_string(),
            state: SessionState::Receiving,
            files: Vec::new(),
            diagnostics: Vec::new(),
            dataset_id: None,
            sources: Vec::new(),
        };
        lock(&self.sessions).insert(session.session_id.clone(), session.clone());
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<UploadSession, ApiError> {
        lock(&self.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("session {id:?} not found")))
    }

    /// Adds files to a receiving session, detecting each file's vendor.
    /// Undetectable files stay in the session with a diagnostic.
    pub fn handle_upload(
        &self,
        session_id: &str,
        files: Vec<SourceFile>,
    ) -> Result<UploadSession, ApiError> {
        if files.is_empty() {
            return Err(ApiError::bad_request("upload contains no files"));
        }
        let mut sessions = lock(&self.sessions);
        let session = sessions
            .get_mut(session_id)
            .ok_or_else(|| ApiError::not_found(format!("session {session_id:?} not found")))?;
        if session.state != SessionState::Receiving {
            return Err(ApiError::conflict(format!(
                "session {session_id} is {:?} and no longer accepts files",
                session.state
            )));
        }
        let tz: DatasetTz = session.timezone.parse().map_err(ApiError::internal)?;
        let checked = ingest(&files, &self.adapters, &tz);
        for (mut source, summary) in files.into_iter().zip(checked.files) {
            source.vendor = summary.vendor;
            source.item = summary.item;
            session
                .diagnostics
                .extend(summary.diagnostics.iter().cloned());
            session.files.push(summary);
            session.sources.push(source);
        }
        Ok(session.clone())
    }

    /// Integrates a receiving session and persists the dataset.
    pub fn handle_integrate(
        &self,
        session_id: &str,
        grid: WindowGrid,
        policy: MergePolicy,
    ) -> Result<IntegrateResponse, ApiError> {
        policy
            .validate()
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let session = self.session(session_id)?;
        if session.state != SessionState::Receiving {
            return Err(ApiError::conflict(format!(
                "session {session_id} was already {:?}",
                session.state
            )));
        }
        if session.sources.is_empty() {
            return Err(ApiError::bad_request("session has no files"));
        }
        let dataset_id = uuid::Uuid::new_v4().simple().to_string();
        let opts = PipelineOptions {
            dataset_id: dataset_id.clone(),
            timezone: session.timezone.clone(),
            grid,
            policy,
            adapters: self.adapters.clone(),
        };
        let result = run_pipeline(&session.sources, &opts);
        let mut sessions = lock(&self.sessions);
        let stored = sessions
            .get_mut(session_id)
            .ok_or_else(|| ApiError::not_found(format!("session {session_id:?} not found")))?;
        if stored.state != SessionState::Receiving {
            return Err(ApiError::conflict(format!(
                "session {session_id} changed state"
            )));
        }
        match result {
            Ok(out) => {
                self.store.create(&out.dataset, &session.sources)?;
                stored.state = SessionState::Integrated;
                stored.dataset_id = Some(dataset_id.clone());
                Ok(IntegrateResponse {
                    dataset_id,
                    frame_count: out.dataset.frames.len(),
                    conflicts: out.conflicts.len(),
                    session: stored.clone(),
                })
            }
            Err(PipelineError::NoRecords { diagnostics, .. }) => {
                stored.state = SessionState::Failed;
                Err(
                    ApiError::unprocessable("no usable records in the uploaded files")
                        .with_diagnostics(diagnostics),
                )
            }
            Err(PipelineError::Integration(e)) => {
                stored.state = SessionState::Failed;
                Err(ApiError::unprocessable(e.to_string()))
            }
            Err(e) => Err(ApiError::internal(e)),
        }
    }

    pub fn handle_list(&self) -> Result<Vec<Manifest>, ApiError> {
        Ok(self.store.list()?)
    }

    /// Window frames or daily summaries with dates in `[from, to]`.
    pub fn handle_query_frames(
        &self,
        dataset_id: &str,
        granularity: Granularity,
        from: Option<NaiveDate>,
        to: Option<NaiveDate>,
    ) -> Result<FrameRows, ApiError> {
        check_range(from, to)?;
        let ds = self.store.load_dataset(dataset_id)?;
        select_rows(&ds, granularity, from, to)
    }

    /// Quality report under `spec`, cached per dataset and spec.
    pub fn handle_quality(
        &self,
        dataset_id: &str,
        spec: &FilterSpec,
    ) -> Result<QualityReport, ApiError> {
        spec.validate()
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let key = (
            dataset_id.to_string(),
            serde_json::to_string(spec).map_err(ApiError::internal)?,
        );
        if let Some(hit) = lock(&self.quality_cache).get(&key) {
            return Ok(hit.clone());
        }
        let ds = self.store.load_dataset(dataset_id)?;
        let report = assess(&ds, spec, None).map_err(|e| ApiError::bad_request(e.to_string()))?;
        self.store.put_report(dataset_id, &report)?;
        lock(&self.quality_cache).insert(key, report.clone());
        Ok(report)
    }

    /// Retention summary of `spec`; saved as a named filter when `name` is
    /// given.
    pub fn handle_filter(
        &self,
        dataset_id: &str,
        spec: &FilterSpec,
        name: Option<&str>,
    ) -> Result<FilterResponse, ApiError> {
        spec.validate()
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let ds = self.store.load_dataset(dataset_id)?;
        let outcome = apply_filter(&ds, spec).map_err(|e| ApiError::bad_request(e.to_string()))?;
        if let Some(name) = name {
            self.store.put_filter(dataset_id, name, spec)?;
        }
        Ok(FilterResponse {
            dataset_id: dataset_id.to_string(),
            saved_as: name.map(str::to_string),
            retention: outcome.retention,
        })
    }

    /// Canonical CSV, filtered when a spec is given; the stored dataset is
    /// never modified.
    pub fn handle_filter_and_export(
        &self,
        dataset_id: &str,
        spec: Option<&FilterSpec>,
    ) -> Result<(String, Option<RetentionSummary>), ApiError> {
        let ds = self.store.load_dataset(dataset_id)?;
        match spec {
            None => Ok((export_canonical_csv(&ds), None)),
            Some(spec) => {
                let outcome =
                    apply_filter(&ds, spec).map_err(|e| ApiError::bad_request(e.to_string()))?;
                Ok((
                    export_canonical_csv(&outcome.dataset),
                    Some(outcome.retention),
                ))
            }
        }
    }

    /// Export using a filter previously saved under `name`.
    pub fn handle_export_named(
        &self,
        dataset_id: &str,
        name: Option<&str>,
    ) -> Result<String, ApiError> {
        let spec = match name {
            None => None,
            Some(n) => Some(self.store.filter(dataset_id, n)?),
        };
        Ok(self.handle_filter_and_export(dataset_id, spec.as_ref())?.0)
    }
}

fn check_range(from: Option<NaiveDate>, to: Option<NaiveDate>) -> Result<(), ApiError> {
    match (from, to) {
        (Some(f), Some(t)) if f > t => {
            Err(ApiError::bad_request(format!("inverted range {f} > {t}")))
        }
        _ => Ok(()),
    }
}

/// Rows of `dataset` at `granularity` whose date lies in `[from, to]`.
pub fn select_rows(
    dataset: &Dataset,
    granularity: Granularity,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<FrameRows, ApiError> {
    check_range(from, to)?;
    let in_range = |d: NaiveDate| from.is_none_or(|f| d >= f) && to.is_none_or(|t| d <= t);
    Ok(match granularity {
        Granularity::Window => FrameRows::Window(
            dataset
                .frames
                .iter()
                .filter(|f| in_range(f.window_start.date()))
                .cloned()
                .collect(),
        ),
        Granularity::Daily => FrameRows::Daily(
            daily_rollup(dataset)
                .into_iter()
                .filter(|s| in_range(s.date))
                .collect(),
        ),
    })
}

/// Parses a comma-separated vendor priority list. Vendors left out follow
/// in default order.
pub fn parse_priority(list: &str) -> Result<MergePolicy, ApiError> {
    let mut vendors = list
        .split(',')
        .map(|v| v.trim().parse::<VendorKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    for (i, v) in vendors.iter().enumerate() {
        if vendors[..i].contains(v) {
            return Err(ApiError::bad_request(format!("vendor {v} listed twice")));
        }
    }
    let missing: Vec<VendorKind> = VendorKind::ALL
        .into_iter()
        .filter(|v| !vendors.contains(v))
        .collect();
    vendors.extend(missing);
    MergePolicy::new(vendors).map_err(|e| ApiError::bad_request(e.to_string()))
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) | StoreError::FilterNotFound { .. } => {
                ApiError::not_found(e.to_string())
            }
            StoreError::InvalidName(_) => ApiError::bad_request(e.to_string()),
            StoreError::AlreadyExists(_) => ApiError::conflict(e.to_string()),
            other => ApiError::internal(other),
        }
    }
}
