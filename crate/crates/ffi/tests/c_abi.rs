use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use serde_json::Value;
use vital_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn cpath(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

/// Takes ownership of a library string.
fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { vital_string_free(p) };
    s
}

fn last_error() -> String {
    let p = vital_last_error_message();
    assert!(!p.is_null(), "no error message");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn write_fixture(dir: &Path, fixture: &vital_core::synth::Fixture) {
    std::fs::create_dir_all(dir).unwrap();
    for f in &fixture.files {
        std::fs::write(dir.join(&f.name), &f.bytes).unwrap();
    }
}

struct Handle(*mut VitalDataset);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { vital_dataset_free(self.0) };
    }
}

impl Handle {
    fn export(&self) -> String {
        let mut out = ptr::null_mut();
        assert_eq!(
            unsafe { vital_dataset_export_csv(self.0, &mut out) },
            VitalStatus::Ok
        );
        take(out)
    }

    fn frames(&self) -> usize {
        let mut n = usize::MAX;
        assert_eq!(
            unsafe { vital_dataset_frame_count(self.0, &mut n) },
            VitalStatus::Ok
        );
        n
    }
}

fn integrate(dir: &Path, tz: Option<&str>, interval: u32, id: &str) -> Handle {
    let tz = tz.map(c);
    let id = c(id);
    let mut out = ptr::null_mut();
    let status = unsafe {
        vital_integrate_dir(
            cpath(dir).as_ptr(),
            tz.as_ref().map_or(ptr::null(), |t| t.as_ptr()),
            interval,
            ptr::null(),
            id.as_ptr(),
            &mut out,
        )
    };
    assert_eq!(status, VitalStatus::Ok, "{}", last_error());
    Handle(out)
}

#[test]
fn integrate_save_load_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = integrate(&fixtures_dir(), Some("Europe/Berlin"), 10, "fx");
    assert_eq!(ds.frames(), 30);

    let mut id = ptr::null_mut();
    assert_eq!(unsafe { vital_dataset_id(ds.0, &mut id) }, VitalStatus::Ok);
    assert_eq!(take(id), "fx");

    let dir = tmp.path().join("fx");
    assert_eq!(
        unsafe { vital_dataset_save(ds.0, cpath(&dir).as_ptr()) },
        VitalStatus::Ok
    );
    let mut raw = ptr::null_mut();
    assert_eq!(
        unsafe { vital_dataset_load(cpath(&dir).as_ptr(), &mut raw) },
        VitalStatus::Ok
    );
    let back = Handle(raw);
    assert_eq!(back.export(), ds.export());

    // a loaded dataset keeps its sources and saves again
    let again = tmp.path().join("again");
    assert_eq!(
        unsafe { vital_dataset_save(back.0, cpath(&again).as_ptr()) },
        VitalStatus::Ok
    );
    let mut manifest = ptr::null_mut();
    assert_eq!(
        unsafe { vital_dataset_manifest_json(back.0, &mut manifest) },
        VitalStatus::Ok
    );
    let manifest: Value = serde_json::from_str(&take(manifest)).unwrap();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 11);
    assert_eq!(manifest["timezone"], "Europe/Berlin");
    assert_eq!(
        std::fs::read(again.join("manifest.json")).unwrap(),
        std::fs::read(dir.join("manifest.json")).unwrap()
    );
}

#[test]
fn wear_filter_and_quality() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    let fixture = vital_core::synth::wear_fixture(&[17, 18, 19]);
    write_fixture(&input, &fixture);
    let ds = integrate(&input, Some(&fixture.timezone), 10, "wear");

    let spec = c(r#"{"min_wear_minutes_per_day": 1080}"#);
    let mut csv = ptr::null_mut();
    let mut retention = ptr::null_mut();
    let status =
        unsafe { vital_dataset_filter_export_csv(ds.0, spec.as_ptr(), &mut csv, &mut retention) };
    assert_eq!(status, VitalStatus::Ok, "{}", last_error());
    let retention: Value = serde_json::from_str(&take(retention)).unwrap();
    assert_eq!(
        retention["kept_dates"],
        serde_json::json!(["2024-03-02", "2024-03-03"])
    );
    let csv = take(csv);
    assert!(csv.lines().skip(1).all(|l| !l.starts_with("2024-03-01")));
    assert!(csv.lines().count() > 1);

    // the handle is unchanged by filtering
    let mut empty = ptr::null_mut();
    let status = unsafe {
        vital_dataset_filter_export_csv(ds.0, c("{}").as_ptr(), &mut empty, ptr::null_mut())
    };
    assert_eq!(status, VitalStatus::Ok);
    assert_eq!(take(empty), ds.export());

    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { vital_dataset_quality_json(ds.0, ptr::null(), &mut report) },
        VitalStatus::Ok
    );
    let report: Value = serde_json::from_str(&take(report)).unwrap();
    assert_eq!(report["dataset_id"], "wear");
    assert_eq!(report["wear_minutes"]["2024-03-01"], 17 * 60);
    assert_eq!(report["wear_minutes"]["2024-03-03"], 19 * 60);

    let mut daily = ptr::null_mut();
    assert_eq!(
        unsafe { vital_dataset_daily_json(ds.0, &mut daily) },
        VitalStatus::Ok
    );
    let daily: Value = serde_json::from_str(&take(daily)).unwrap();
    assert_eq!(daily.as_array().unwrap().len(), 3);
}

#[test]
fn import_csv_matches_export() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    let fixture = vital_core::synth::rules_fixture();
    write_fixture(&input, &fixture);
    let ds = integrate(&input, Some(&fixture.timezone), 10, "f1");
    let csv = ds.export();
    let file = tmp.path().join("f1.csv");
    std::fs::write(&file, &csv).unwrap();

    let mut raw = ptr::null_mut();
    let status = unsafe {
        vital_dataset_import_csv(
            cpath(&file).as_ptr(),
            c(&fixture.timezone).as_ptr(),
            10,
            ptr::null(),
            &mut raw,
        )
    };
    assert_eq!(status, VitalStatus::Ok, "{}", last_error());
    let back = Handle(raw);
    assert_eq!(back.export(), csv);
    assert_eq!(back.frames(), 6);
    let saved = tmp.path().join("imported");
    assert_eq!(
        unsafe { vital_dataset_save(back.0, cpath(&saved).as_ptr()) },
        VitalStatus::Ok
    );
    assert!(saved.join("manifest.json").exists());
}

#[test]
fn error_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut out = ptr::null_mut();
    let mut n = 0usize;

    let status = unsafe {
        vital_integrate_dir(
            ptr::null(),
            ptr::null(),
            10,
            ptr::null(),
            ptr::null(),
            &mut out,
        )
    };
    assert_eq!(status, VitalStatus::NullArgument);
    assert!(last_error().contains("in_dir"));
    assert!(out.is_null());

    let dir = cpath(&fixtures_dir());
    let bad = |tz: &str, interval: u32, priority: Option<&str>| {
        let mut out = ptr::null_mut();
        let priority = priority.map(c);
        let status = unsafe {
            vital_integrate_dir(
                dir.as_ptr(),
                c(tz).as_ptr(),
                interval,
                priority.as_ref().map_or(ptr::null(), |p| p.as_ptr()),
                ptr::null(),
                &mut out,
            )
        };
        assert!(out.is_null());
        status
    };
    assert_eq!(bad("UTC", 7, None), VitalStatus::InvalidArgument);
    assert_eq!(bad("Nowhere/City", 10, None), VitalStatus::InvalidArgument);
    assert_eq!(bad("UTC", 10, Some("garmin")), VitalStatus::InvalidArgument);
    assert_eq!(
        bad("UTC", 10, Some("fitbit,fitbit")),
        VitalStatus::InvalidArgument
    );

    let bytes = [0x66u8, 0xff, 0x00];
    let status = unsafe { vital_dataset_load(bytes.as_ptr().cast(), &mut out) };
    assert_eq!(status, VitalStatus::InvalidUtf8);

    let missing = cpath(&tmp.path().join("missing"));
    assert_eq!(
        unsafe { vital_dataset_load(missing.as_ptr(), &mut out) },
        VitalStatus::NotFound
    );
    assert_eq!(
        unsafe {
            vital_dataset_import_csv(missing.as_ptr(), ptr::null(), 10, ptr::null(), &mut out)
        },
        VitalStatus::NotFound
    );

    let junk = tmp.path().join("junk");
    std::fs::create_dir(&junk).unwrap();
    std::fs::write(junk.join("a.csv"), "x,y\n1,2\n").unwrap();
    let status = unsafe {
        vital_integrate_dir(
            cpath(&junk).as_ptr(),
            ptr::null(),
            10,
            ptr::null(),
            ptr::null(),
            &mut out,
        )
    };
    assert_eq!(status, VitalStatus::NoRecords);
    assert!(last_error().contains("a.csv:1: unknown-format"));

    let not_csv = tmp.path().join("bad.csv");
    std::fs::write(&not_csv, "a,b,c\n").unwrap();
    assert_eq!(
        unsafe {
            vital_dataset_import_csv(
                cpath(&not_csv).as_ptr(),
                ptr::null(),
                10,
                ptr::null(),
                &mut out,
            )
        },
        VitalStatus::ParseFailed
    );

    assert_eq!(
        unsafe { vital_dataset_frame_count(ptr::null(), &mut n) },
        VitalStatus::NullArgument
    );

    let ds = integrate(&fixtures_dir(), None, 30, "e");
    assert_eq!(
        unsafe { vital_dataset_frame_count(ds.0, ptr::null_mut()) },
        VitalStatus::NullArgument
    );
    let mut s = ptr::null_mut();
    for spec in [r#"{"nope": 1}"#, "not json", r#"{"hr_bounds": [90, 80]}"#] {
        assert_eq!(
            unsafe { vital_dataset_quality_json(ds.0, c(spec).as_ptr(), &mut s) },
            VitalStatus::InvalidSpec,
            "{spec}"
        );
        assert_eq!(
            unsafe {
                vital_dataset_filter_export_csv(ds.0, c(spec).as_ptr(), &mut s, ptr::null_mut())
            },
            VitalStatus::InvalidSpec,
            "{spec}"
        );
    }
    assert!(s.is_null());

    // success clears the message
    assert_eq!(
        unsafe { vital_dataset_frame_count(ds.0, &mut n) },
        VitalStatus::Ok
    );
    assert!(vital_last_error_message().is_null());
}

#[test]
fn tampered_blob_is_corrupt() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = integrate(&fixtures_dir(), None, 10, "t");
    let dir = tmp.path().join("t");
    assert_eq!(
        unsafe { vital_dataset_save(ds.0, cpath(&dir).as_ptr()) },
        VitalStatus::Ok
    );
    let blob = std::fs::read_dir(dir.join("blobs"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    std::fs::write(blob, "tampered").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { vital_dataset_load(cpath(&dir).as_ptr(), &mut out) },
        VitalStatus::Corrupt
    );
    assert!(out.is_null());
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        vital_string_free(ptr::null_mut());
        vital_dataset_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(vital_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    let name = unsafe { CStr::from_ptr(vital_status_name(VitalStatus::NoRecords as i32)) };
    assert_eq!(name.to_str().unwrap(), "no_records");
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/vital.h"))
            .unwrap();
    for symbol in [
        "typedef struct VitalDataset VitalDataset;",
        "VITAL_STATUS_OK = 0",
        "VITAL_STATUS_PANIC = 11",
        "vital_last_error_message(void)",
        "vital_status_name(int32_t status)",
        "vital_version(void)",
        "vital_integrate_dir(",
        "vital_dataset_load(",
        "vital_dataset_save(",
        "vital_dataset_import_csv(",
        "vital_dataset_frame_count(const struct VitalDataset *ds, size_t *out)",
        "vital_dataset_id(",
        "vital_dataset_manifest_json(",
        "vital_dataset_quality_json(",
        "vital_dataset_filter_export_csv(",
        "vital_dataset_export_csv(",
        "vital_dataset_daily_json(",
        "vital_string_free(char *s)",
        "vital_dataset_free(struct VitalDataset *ds)",
    ] {
        assert!(header.contains(symbol), "missing {symbol}");
    }
}

#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"vital.h\"\n\
         int main(void) {\n\
           VitalDataset *ds = NULL;\n\
           enum VitalStatus s = vital_integrate_dir(\"in\", NULL, 10, NULL, NULL, &ds);\n\
           size_t n = 0;\n\
           if (s == VITAL_STATUS_OK) { vital_dataset_frame_count(ds, &n); vital_dataset_free(ds); }\n\
           return (int)n;\n\
         }\n",
    )
    .unwrap();
    let run = std::process::Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output();
    match run {
        Ok(out) => assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        ),
        Err(e) => eprintln!("skipping: {cc}: {e}"),
    }
}
