/* C interface of the SCLIFD class-incremental fault-diagnosis library.
 *
 * All entry points return SCLIFD_OK or an error code; sclifd_last_error()
 * holds a human-readable message for the calling thread. Strings returned
 * by handle accessors stay valid until the handle is destroyed.
 */
#ifndef SCLIFD_H
#define SCLIFD_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SCLIFD_API __declspec(dllexport)
#else
#define SCLIFD_API __attribute__((visibility("default")))
#endif

#define SCLIFD_OK 0
#define SCLIFD_ERR_CONFIG 1   /* malformed or invalid configuration */
#define SCLIFD_ERR_RUNTIME 2  /* I/O or execution failure */
#define SCLIFD_ERR_ARGUMENT 3 /* null handle or output pointer */

typedef struct sclifd_experiment_t sclifd_experiment_t;

SCLIFD_API const char* sclifd_version(void);

/* Message of the most recent failure on this thread; empty if none. */
SCLIFD_API const char* sclifd_last_error(void);

/* The built-in defaults as a JSON document (caller must not free). */
SCLIFD_API const char* sclifd_default_config_json(void);

/* Parses and validates config_json; on success *out_handle owns the
 * experiment. Unknown keys are rejected. */
SCLIFD_API int sclifd_experiment_create(const char* config_json,
                                        sclifd_experiment_t** out_handle);

/* Executes every incremental session. */
SCLIFD_API int sclifd_experiment_run(sclifd_experiment_t* handle);

/* Number of completed sessions, or -1 before a successful run. */
SCLIFD_API int sclifd_experiment_session_count(const sclifd_experiment_t* handle);

/* Joint accuracy of 1-based session, or -1.0 on error. */
SCLIFD_API double sclifd_experiment_accuracy(const sclifd_experiment_t* handle, int session);

/* Per-session reports / reproducibility manifest as JSON; NULL before run. */
SCLIFD_API const char* sclifd_experiment_reports_json(const sclifd_experiment_t* handle);
SCLIFD_API const char* sclifd_experiment_manifest_json(const sclifd_experiment_t* handle);

/* Writes reports.json, confusion_s<k>.csv and manifest.json under out_dir
 * (created if missing). */
SCLIFD_API int sclifd_experiment_write_outputs(sclifd_experiment_t* handle, const char* out_dir);

SCLIFD_API void sclifd_experiment_destroy(sclifd_experiment_t* handle);

/* Generates a Gaussian-blob dataset and writes it as CSV. blob_config_json
 * keys: num_classes, dim, mean_separation, within_std, samples_per_class,
 * seed. */
SCLIFD_API int sclifd_synth_csv(const char* blob_config_json, const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif /* SCLIFD_H */
