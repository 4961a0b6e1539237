//! Canonical CSV export/import and the on-disk dataset directories.
//!
//! A dataset directory holds `manifest.json`, `dataset.json`, an optional
//! `report.json`, named filter specs under `filters/` and the uploaded
//! exports under `blobs/`, keyed by SHA-256.

mod csv;
mod dir;

use std::path::PathBuf;

pub use csv::{
    export_canonical_csv, export_filtered_csv, import_canonical_csv, sources_field, ImportError,
    ImportOptions, CANONICAL_HEADER,
};
pub use dir::{
    check_name, read_dataset_dir, read_manifest, read_source_dir, read_sources, sha256_hex,
    write_dataset_dir, write_filter, write_report, FileEntry, Manifest, SourceFile, Store,
    StoredDataset,
};

use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("dataset {0:?} not found")]
    NotFound(String),
    #[error("dataset {0:?} already exists")]
    AlreadyExists(String),
    #[error("filter {name:?} not found for dataset {dataset_id:?}")]
    FilterNotFound { dataset_id: String, name: String },
    #[error("invalid name {0:?}: use 1-64 ASCII letters, digits, '-' or '_'")]
    InvalidName(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("stored file {file:?} does not match its manifest digest")]
    DigestMismatch { file: String },
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
}
