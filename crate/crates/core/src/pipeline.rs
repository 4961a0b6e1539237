//! End-to-end ingest: vendor files → parsed records → normalized records →
//! integrated dataset, with every skipped row or file reported.

use serde::{Deserialize, Serialize};

use crate::adapters::{
    normalize_unit, parse_file, AdapterConfig, AdapterError, ConfigError, Diagnostic,
    DiagnosticCode, RawRecord,
};
use crate::integrate::{
    integrate_detailed, Conflict, IntegrateOptions, IntegrationError, MergePolicy,
};
use crate::model::{Dataset, DatasetTz, ItemKind, ModelError, VendorKind, WindowGrid};
use crate::store::{sha256_hex, SourceFile};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticEntry {
    pub file: String,
    pub line: u32,
    pub code: String,
    pub message: String,
}

impl From<&Diagnostic> for DiagnosticEntry {
    fn from(d: &Diagnostic) -> Self {
        DiagnosticEntry {
            file: d.file.to_string(),
            line: d.line,
            code: d.code.as_str().to_string(),
            message: d.message.clone(),
        }
    }
}

impl std::fmt::Display for DiagnosticEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.file, self.line, self.code, self.message
        )
    }
}

/// What happened to one input file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSummary {
    pub name: String,
    pub vendor: Option<VendorKind>,
    pub item: Option<ItemKind>,
    pub bytes: u64,
    pub sha256: String,
    pub data_rows: usize,
    pub records: usize,
    pub diagnostics: Vec<DiagnosticEntry>,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub records: Vec<RawRecord>,
    pub files: Vec<FileSummary>,
}

impl Ingested {
    pub fn diagnostics(&self) -> impl Iterator<Item = &DiagnosticEntry> {
        self.files.iter().flat_map(|f| f.diagnostics.iter())
    }
}

fn file_level(name: &str, err: &AdapterError) -> DiagnosticEntry {
    let (line, code) = match err {
        AdapterError::UnknownFormat { .. } | AdapterError::AmbiguousFormat { .. } => {
            (1, DiagnosticCode::UnknownFormat)
        }
        AdapterError::Schema { .. } => (1, DiagnosticCode::UnknownFormat),
        AdapterError::UnknownStage { line, .. } => (*line, DiagnosticCode::FileError),
        AdapterError::Encoding { .. } => (0, DiagnosticCode::FileError),
    };
    DiagnosticEntry {
        file: name.to_string(),
        line,
        code: code.as_str().to_string(),
        message: err.to_string(),
    }
}

/// Parses and normalizes every file. Files that cannot be read at all and
/// rows that cannot be used become diagnostics; nothing here fails.
pub fn ingest(files: &[SourceFile], config: &AdapterConfig, tz: &DatasetTz) -> Ingested {
    let mut records = Vec::new();
    let mut summaries = Vec::with_capacity(files.len());
    for f in files {
        let mut summary = FileSummary {
            name: f.name.clone(),
            vendor: None,
            item: None,
            bytes: f.bytes.len() as u64,
            sha256: sha256_hex(&f.bytes),
            data_rows: 0,
            records: 0,
            diagnostics: Vec::new(),
        };
        match parse_file(&f.name, &f.bytes, config, tz) {
            Err(e) => summary.diagnostics.push(file_level(&f.name, &e)),
            Ok(parsed) => {
                summary.vendor = Some(parsed.vendor);
                summary.item = Some(parsed.item);
                summary.data_rows = parsed.data_rows;
                summary
                    .diagnostics
                    .extend(parsed.diagnostics.iter().map(DiagnosticEntry::from));
                for r in parsed.records {
                    let source = r.source.clone();
                    match normalize_unit(r) {
                        Ok(r) => {
                            records.push(r);
                            summary.records += 1;
                        }
                        Err(e) => summary.diagnostics.push(DiagnosticEntry {
                            file: source.file.to_string(),
                            line: source.line,
                            code: DiagnosticCode::InvalidValue.as_str().to_string(),
                            message: e.to_string(),
                        }),
                    }
                }
                summary.diagnostics.sort_by_key(|d| d.line);
            }
        }
        summaries.push(summary);
    }
    Ingested {
        records,
        files: summaries,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("adapter configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("timezone: {0}")]
    Timezone(ModelError),
    #[error("no usable records in {files} file(s)")]
    NoRecords {
        files: usize,
        diagnostics: Vec<DiagnosticEntry>,
    },
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub dataset_id: String,
    pub timezone: String,
    pub grid: WindowGrid,
    pub policy: MergePolicy,
    pub adapters: AdapterConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            dataset_id: "dataset".into(),
            timezone: "UTC".into(),
            grid: WindowGrid::default(),
            policy: MergePolicy::default(),
            adapters: AdapterConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub dataset: Dataset,
    pub files: Vec<FileSummary>,
    pub conflicts: Vec<Conflict>,
}

pub fn run_pipeline(
    files: &[SourceFile],
    opts: &PipelineOptions,
) -> Result<PipelineOutput, PipelineError> {
    opts.adapters.validate()?;
    let tz: DatasetTz = opts.timezone.parse().map_err(PipelineError::Timezone)?;
    let ingested = ingest(files, &opts.adapters, &tz);
    if ingested.records.is_empty() {
        return Err(PipelineError::NoRecords {
            files: files.len(),
            diagnostics: ingested.diagnostics().cloned().collect(),
        });
    }
    let iopts = IntegrateOptions {
        grid: opts.grid,
        policy: opts.policy.clone(),
        dataset_id: opts.dataset_id.clone(),
        timezone: tz.to_string(),
    };
    let out = integrate_detailed(&ingested.records, &iopts)?;
    Ok(PipelineOutput {
        dataset: out.dataset,
        files: ingested.files,
        conflicts: out.conflicts,
    })
}
