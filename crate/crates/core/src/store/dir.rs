use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, SubsecRound, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::StoreError;
use crate::model::{Dataset, DateSpan, ItemKind, VendorKind};
use crate::quality::{FilterSpec, QualityReport};

const MANIFEST: &str = "manifest.json";
const DATASET: &str = "dataset.json";
const REPORT: &str = "report.json";
const BLOBS: &str = "blobs";
const FILTERS: &str = "filters";

/// An uploaded export as received.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceFile {
    pub name: String,
    pub vendor: Option<VendorKind>,
    pub item: Option<ItemKind>,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub vendor: Option<VendorKind>,
    pub item: Option<ItemKind>,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_id: String,
    pub created_at: DateTime<Utc>,
    pub timezone: String,
    pub interval_minutes: u32,
    pub frame_count: usize,
    pub collection_span: Option<DateSpan>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn describe(dataset: &Dataset, files: &[SourceFile]) -> Manifest {
        Manifest {
            dataset_id: dataset.dataset_id.clone(),
            created_at: Utc::now().trunc_subsecs(0),
            timezone: dataset.timezone.clone(),
            interval_minutes: dataset.grid.interval_minutes(),
            frame_count: dataset.frames.len(),
            collection_span: dataset.collection_span,
            files: files
                .iter()
                .map(|f| FileEntry {
                    name: f.name.clone(),
                    vendor: f.vendor,
                    item: f.item,
                    bytes: f.bytes.len() as u64,
                    sha256: sha256_hex(&f.bytes),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoredDataset {
    pub manifest: Manifest,
    pub dataset: Dataset,
    pub report: Option<QualityReport>,
    pub filters: BTreeMap<String, FilterSpec>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Ids and filter names double as path components.
pub fn check_name(name: &str) -> Result<(), StoreError> {
    let ok = !name.is_empty()
        && name.len() <= 64
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
        && !name.starts_with('-');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidName(name.to_string()))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn temp_sibling(path: &Path, tag: &str) -> PathBuf {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("x");
    path.with_file_name(format!(".{name}.{tag}-{}", uuid::Uuid::new_v4().simple()))
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = temp_sibling(path, "tmp");
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut text = serde_json::to_vec_pretty(value).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push(b'\n');
    write_atomic(path, &text)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn is_export_name(name: &str) -> bool {
    !name.starts_with('.') && name.to_ascii_lowercase().ends_with(".csv")
}

/// Every `.csv` file under `dir`, recursively, in path order, named by its
/// path relative to `dir`. Hidden files are skipped.
pub fn read_source_dir(dir: &Path) -> Result<Vec<SourceFile>, StoreError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| StoreError::Io { path, source }
    };
    let mut paths = Vec::new();
    let mut pending = vec![dir.to_path_buf()];
    while let Some(d) = pending.pop() {
        for entry in fs::read_dir(&d).map_err(io(&d))? {
            let path = entry.map_err(io(&d))?.path();
            if path.is_dir() {
                pending.push(path);
            } else if path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(is_export_name)
            {
                paths.push(path);
            }
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p).map_err(io(&p))?;
            let name = p
                .strip_prefix(dir)
                .unwrap_or(&p)
                .to_string_lossy()
                .replace('\\', "/");
            Ok(SourceFile {
                name,
                vendor: None,
                item: None,
                bytes,
            })
        })
        .collect()
}

/// Writes a complete dataset directory at `dir`, replacing any previous
/// one only once the new directory is fully written.
pub fn write_dataset_dir(
    dir: &Path,
    stored: &StoredDataset,
    sources: &[SourceFile],
) -> Result<(), StoreError> {
    for entry in &stored.manifest.files {
        let present = sources.iter().any(|s| sha256_hex(&s.bytes) == entry.sha256);
        if !present {
            return Err(StoreError::Corrupt {
                path: dir.to_path_buf(),
                reason: format!("no blob supplied for manifest file {}", entry.name),
            });
        }
    }
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let staging = temp_sibling(dir, "new");
    let result = fill_dir(&staging, stored, sources).and_then(|()| swap_into_place(&staging, dir));
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

fn fill_dir(dir: &Path, stored: &StoredDataset, sources: &[SourceFile]) -> Result<(), StoreError> {
    fs::create_dir_all(dir.join(BLOBS)).map_err(io_err(dir))?;
    fs::create_dir_all(dir.join(FILTERS)).map_err(io_err(dir))?;
    for s in sources {
        let path = dir.join(BLOBS).join(sha256_hex(&s.bytes));
        fs::write(&path, &s.bytes).map_err(io_err(&path))?;
    }
    write_json(&dir.join(DATASET), &stored.dataset)?;
    if let Some(report) = &stored.report {
        write_json(&dir.join(REPORT), report)?;
    }
    for (name, spec) in &stored.filters {
        check_name(name)?;
        write_json(&dir.join(FILTERS).join(format!("{name}.json")), spec)?;
    }
    // the manifest goes last: a directory without one is never loadable
    write_json(&dir.join(MANIFEST), &stored.manifest)
}

fn swap_into_place(staging: &Path, dir: &Path) -> Result<(), StoreError> {
    if dir.exists() {
        let old = temp_sibling(dir, "old");
        fs::rename(dir, &old).map_err(io_err(dir))?;
        fs::rename(staging, dir).map_err(io_err(dir))?;
        let _ = fs::remove_dir_all(&old);
        Ok(())
    } else {
        fs::rename(staging, dir).map_err(io_err(dir))
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, StoreError> {
    read_json(&dir.join(MANIFEST))
}

/// Loads a dataset directory, checking blob digests and dataset invariants.
pub fn read_dataset_dir(dir: &Path) -> Result<StoredDataset, StoreError> {
    let manifest = read_manifest(dir)?;
    for entry in &manifest.files {
        let path = dir.join(BLOBS).join(&entry.sha256);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if sha256_hex(&bytes) != entry.sha256 || bytes.len() as u64 != entry.bytes {
            return Err(StoreError::DigestMismatch {
                file: entry.name.clone(),
            });
        }
    }
    let dataset: Dataset = read_json(&dir.join(DATASET))?;
    dataset.validate().map_err(|source| StoreError::Invalid {
        path: dir.to_path_buf(),
        source,
    })?;
    if dataset.dataset_id != manifest.dataset_id {
        return Err(StoreError::Corrupt {
            path: dir.to_path_buf(),
            reason: "dataset id differs from manifest".into(),
        });
    }
    let report_path = dir.join(REPORT);
    let report = if report_path.exists() {
        Some(read_json(&report_path)?)
    } else {
        None
    };
    Ok(StoredDataset {
        manifest,
        dataset,
        report,
        filters: read_filters(dir)?,
    })
}

/// The stored exports of a dataset directory, in manifest order.
pub fn read_sources(dir: &Path, manifest: &Manifest) -> Result<Vec<SourceFile>, StoreError> {
    manifest
        .files
        .iter()
        .map(|entry| {
            let path = dir.join(BLOBS).join(&entry.sha256);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(StoreError::DigestMismatch {
                    file: entry.name.clone(),
                });
            }
            Ok(SourceFile {
                name: entry.name.clone(),
                vendor: entry.vendor,
                item: entry.item,
                bytes,
            })
        })
        .collect()
}

fn read_filters(dir: &Path) -> Result<BTreeMap<String, FilterSpec>, StoreError> {
    let fdir = dir.join(FILTERS);
    let mut out = BTreeMap::new();
    let Ok(entries) = fs::read_dir(&fdir) else {
        return Ok(out);
    };
    for entry in entries {
        let path = entry.map_err(io_err(&fdir))?.path();
        let Some(name) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(".json"))
        else {
            continue;
        };
        if check_name(name).is_ok() {
            out.insert(name.to_string(), read_json(&path)?);
        }
    }
    Ok(out)
}

pub fn write_report(dir: &Path, report: &QualityReport) -> Result<(), StoreError> {
    read_manifest(dir)?;
    write_json(&dir.join(REPORT), report)
}

pub fn write_filter(dir: &Path, name: &str, spec: &FilterSpec) -> Result<(), StoreError> {
    check_name(name)?;
    read_manifest(dir)?;
    let fdir = dir.join(FILTERS);
    fs::create_dir_all(&fdir).map_err(io_err(&fdir))?;
    write_json(&fdir.join(format!("{name}.json")), spec)
}

/// A root directory holding one dataset directory per id.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    writer: Mutex<()>,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Store {
            root,
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir_of(&self, id: &str) -> Result<PathBuf, StoreError> {
        check_name(id)?;
        Ok(self.root.join(id))
    }

    fn existing(&self, id: &str) -> Result<PathBuf, StoreError> {
        let dir = self.dir_of(id)?;
        if dir.join(MANIFEST).is_file() {
            Ok(dir)
        } else {
            Err(StoreError::NotFound(id.to_string()))
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ()> {
        self.writer.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Persists a new dataset under its own id.
    pub fn create(
        &self,
        dataset: &Dataset,
        sources: &[SourceFile],
    ) -> Result<Manifest, StoreError> {
        let dir = self.dir_of(&dataset.dataset_id)?;
        let _guard = self.lock();
        if dir.exists() {
            return Err(StoreError::AlreadyExists(dataset.dataset_id.clone()));
        }
        let stored = StoredDataset {
            manifest: Manifest::describe(dataset, sources),
            dataset: dataset.clone(),
            report: None,
            filters: BTreeMap::new(),
        };
        write_dataset_dir(&dir, &stored, sources)?;
        Ok(stored.manifest)
    }

    pub fn load(&self, id: &str) -> Result<StoredDataset, StoreError> {
        read_dataset_dir(&self.existing(id)?)
    }

    pub fn load_dataset(&self, id: &str) -> Result<Dataset, StoreError> {
        Ok(self.load(id)?.dataset)
    }

    pub fn manifest(&self, id: &str) -> Result<Manifest, StoreError> {
        read_manifest(&self.existing(id)?)
    }

    /// Manifests of every stored dataset, ordered by id.
    pub fn list(&self) -> Result<Vec<Manifest>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let path = entry.map_err(io_err(&self.root))?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if check_name(name).is_ok() && path.join(MANIFEST).is_file() {
                out.push(read_manifest(&path)?);
            }
        }
        out.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
        Ok(out)
    }

    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        let dir = self.existing(id)?;
        let _guard = self.lock();
        let tomb = temp_sibling(&dir, "del");
        fs::rename(&dir, &tomb).map_err(io_err(&dir))?;
        fs::remove_dir_all(&tomb).map_err(io_err(&tomb))
    }

    pub fn put_report(&self, id: &str, report: &QualityReport) -> Result<(), StoreError> {
        let dir = self.existing(id)?;
        let _guard = self.lock();
        write_report(&dir, report)
    }

    pub fn put_filter(&self, id: &str, name: &str, spec: &FilterSpec) -> Result<(), StoreError> {
        let dir = self.existing(id)?;
        let _guard = self.lock();
        write_filter(&dir, name, spec)
    }

    pub fn filter(&self, id: &str, name: &str) -> Result<FilterSpec, StoreError> {
        check_name(name)?;
        let path = self
            .existing(id)?
            .join(FILTERS)
            .join(format!("{name}.json"));
        if !path.is_file() {
            return Err(StoreError::FilterNotFound {
                dataset_id: id.to_string(),
                name: name.to_string(),
            });
        }
        read_json(&path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CanonicalFrame, LocalTimestamp, WindowGrid};
    use crate::quality::assess;

    fn dataset(id: &str) -> Dataset {
        let start: LocalTimestamp = "2024-03-15 08:00:00".parse().unwrap();
        let frames = (0..5)
            .map(|k| {
                let mut f = CanonicalFrame::empty(start.plus_seconds(600 * k));
                f.steps = Some(10 * k as u32);
                f.sources.insert(ItemKind::Steps, VendorKind::Apple);
                f
            })
            .collect();
        Dataset::new(id, "Asia/Seoul", WindowGrid::default(), frames, vec![]).unwrap()
    }

    fn source() -> SourceFile {
        SourceFile {
            name: "steps.csv".into(),
            vendor: Some(VendorKind::Apple),
            item: Some(ItemKind::Steps),
            bytes: b"startDate,endDate,stepCount\n".to_vec(),
        }
    }

    #[test]
    fn save_load_identity() {
        let tmp = tempfile::tempdir().unwrap();
        let store = Store::open(tmp.path()).unwrap();
        let ds = dataset("abc");
        let manifest = store.create(&ds, &[source()]).unwrap();
        assert_eq!(manifest.files[0].bytes, 28);
        let loaded = store.load("abc").unwrap();
        assert_eq!(loaded.dataset, ds);
        assert_eq!(loaded.manifest, manifest);
        assert!(loaded.report.is_none());
    }

    #[test]
    fn unknown_and_deleted_ids() {
        let tmp = tempfile::tempdir().unwrap();
        let store = Store::open(tmp.path()).unwrap();
        assert!(matches!(store.load("nope"), Err(StoreError::NotFound(_))));
        store.create(&dataset("a"), &[]).unwrap();
        store.create(&dataset("b"), &[]).unwrap();
        assert!(matches!(
            store.create(&dataset("a"), &[]),
            Err(StoreError::AlreadyExists(_))
        ));
        store.delete("a").unwrap();
        let ids: Vec<_> = store
            .list()
            .unwrap()
            .into_iter()
            .map(|m| m.dataset_id)
            .collect();
        assert_eq!(ids, vec!["b"]);
        assert!(matches!(store.delete("a"), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn path_like_ids_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let store = Store::open(tmp.path()).unwrap();
        for bad in ["../x", "a/b", "", ".hidden"] {
            assert!(
                matches!(store.load(bad), Err(StoreError::InvalidName(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn report_and_filters_persist() {
        let tmp = tempfile::tempdir().unwrap();
        let store = Store::open(tmp.path()).unwrap();
        let ds = dataset("r");
        store.create(&ds, &[]).unwrap();
        let spec = FilterSpec {
            min_wear_minutes_per_day: Some(1080),
            ..Default::default()
        };
        let report = assess(&ds, &spec, None).unwrap();
        store.put_report("r", &report).unwrap();
        store.put_filter("r", "wear18", &spec).unwrap();
        let loaded = store.load("r").unwrap();
        assert_eq!(loaded.report, Some(report));
        assert_eq!(loaded.filters["wear18"], spec);
        assert_eq!(store.filter("r", "wear18").unwrap(), spec);
        assert!(matches!(
            store.filter("r", "other"),
            Err(StoreError::FilterNotFound { .. })
        ));
    }

    #[test]
    fn tampered_blob_detected() {
        let tmp = tempfile::tempdir().unwrap();
        let store = Store::open(tmp.path()).unwrap();
        store.create(&dataset("t"), &[source()]).unwrap();
        let blob = tmp
            .path()
            .join("t")
            .join(BLOBS)
            .join(sha256_hex(&source().bytes));
        fs::write(&blob, b"changed").unwrap();
        assert!(matches!(
            store.load("t"),
            Err(StoreError::DigestMismatch { .. })
        ));
    }

    #[test]
    fn rewrite_replaces_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("out");
        let mut stored = StoredDataset {
            manifest: Manifest::describe(&dataset("x"), &[]),
            dataset: dataset("x"),
            report: None,
            filters: BTreeMap::new(),
        };
        write_dataset_dir(&dir, &stored, &[]).unwrap();
        stored.dataset.frames.truncate(2);
        write_dataset_dir(&dir, &stored, &[]).unwrap();
        assert_eq!(read_dataset_dir(&dir).unwrap().dataset.frames.len(), 2);
        let leftovers: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
