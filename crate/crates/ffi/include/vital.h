#ifndef VITAL_H
#define VITAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum VitalStatus {
  VITAL_STATUS_OK = 0,
  VITAL_STATUS_NULL_ARGUMENT = 1,
  VITAL_STATUS_INVALID_UTF8 = 2,
  VITAL_STATUS_INVALID_ARGUMENT = 3,
  VITAL_STATUS_NOT_FOUND = 4,
  VITAL_STATUS_IO = 5,
  VITAL_STATUS_CORRUPT = 6,
  VITAL_STATUS_PARSE_FAILED = 7,
  VITAL_STATUS_NO_RECORDS = 8,
  VITAL_STATUS_INTEGRATION_FAILED = 9,
  VITAL_STATUS_INVALID_SPEC = 10,
  VITAL_STATUS_PANIC = 11,
} VitalStatus;

/*
 An integrated dataset together with the exports it came from.
 */
typedef struct VitalDataset VitalDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call into the library from the same thread.
 */
const char *vital_last_error_message(void);

/*
 Static snake_case name of a status code; "unknown" for other values.
 */
const char *vital_status_name(int32_t status);

/*
 Library version as a static string.
 */
const char *vital_version(void);

/*
 Integrates every `.csv` export under `in_dir`.

 `timezone` (default UTC), `priority` (comma-separated vendors, default
 order otherwise) and `dataset_id` (default "dataset") may be null.

 # Safety
 String arguments must be null or valid NUL-terminated strings; `out` must
 be a valid pointer.
 */
enum VitalStatus vital_integrate_dir(const char *in_dir,
                                     const char *timezone,
                                     uint32_t interval_minutes,
                                     const char *priority,
                                     const char *dataset_id,
                                     struct VitalDataset **out);

/*
 Loads a dataset directory, verifying every stored file.

 # Safety
 `dir` must be a valid NUL-terminated string; `out` a valid pointer.
 */
enum VitalStatus vital_dataset_load(const char *dir, struct VitalDataset **out);

/*
 Writes the dataset directory to `dir`, replacing what is there.

 # Safety
 `ds` must come from this library; `dir` must be a valid string.
 */
enum VitalStatus vital_dataset_save(const struct VitalDataset *ds, const char *dir);

/*
 Reads a canonical CSV export back into a dataset with no source files.
 `timezone` (default UTC) and `dataset_id` (default "imported") may be
 null.

 # Safety
 String arguments must be null where allowed or valid strings; `out` must
 be a valid pointer.
 */
enum VitalStatus vital_dataset_import_csv(const char *csv_path,
                                          const char *timezone,
                                          uint32_t interval_minutes,
                                          const char *dataset_id,
                                          struct VitalDataset **out);

/*
 Number of window frames.

 # Safety
 `ds` must come from this library; `out` must be a valid pointer.
 */
enum VitalStatus vital_dataset_frame_count(const struct VitalDataset *ds, size_t *out);

/*
 Dataset id as a new string.

 # Safety
 `ds` must come from this library; `out` must be a valid pointer.
 */
enum VitalStatus vital_dataset_id(const struct VitalDataset *ds, char **out);

/*
 Manifest JSON.

 # Safety
 `ds` must come from this library; `out` must be a valid pointer.
 */
enum VitalStatus vital_dataset_manifest_json(const struct VitalDataset *ds, char **out);

/*
 Quality report JSON under the thresholds of `spec_json` (null for the
 defaults).

 # Safety
 `ds` must come from this library; `spec_json` null or a valid string;
 `out` a valid pointer.
 */
enum VitalStatus vital_dataset_quality_json(const struct VitalDataset *ds,
                                            const char *spec_json,
                                            char **out);

/*
 Canonical CSV of the days kept by `spec_json`. The retention summary JSON
 goes to `out_retention` unless it is null. The dataset is not modified.

 # Safety
 `ds` must come from this library; `spec_json` a valid string; `out_csv`
 a valid pointer; `out_retention` null or a valid pointer.
 */
enum VitalStatus vital_dataset_filter_export_csv(const struct VitalDataset *ds,
                                                 const char *spec_json,
                                                 char **out_csv,
                                                 char **out_retention);

/*
 Canonical CSV of every frame.

 # Safety
 `ds` must come from this library; `out` must be a valid pointer.
 */
enum VitalStatus vital_dataset_export_csv(const struct VitalDataset *ds, char **out);

/*
 Daily summaries as a JSON array.

 # Safety
 `ds` must come from this library; `out` must be a valid pointer.
 */
enum VitalStatus vital_dataset_daily_json(const struct VitalDataset *ds, char **out);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must be null or a string from this library not yet freed.
 */
void vital_string_free(char *s);

/*
 Releases a dataset handle. Null is ignored.

 # Safety
 `ds` must be null or a handle from this library not yet freed.
 */
void vital_dataset_free(struct VitalDataset *ds);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VITAL_H */
