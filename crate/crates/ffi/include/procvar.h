#ifndef PROCVAR_H
#define PROCVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum pv_outcome {
  PV_OUTCOME_SATISFIED = 0,
  PV_OUTCOME_VIOLATED = 1,
  PV_OUTCOME_VAC_SATISFIED = 2,
} pv_outcome;

typedef enum pv_status {
  PV_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PV_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not UTF-8 or a value was out of range.
   */
  PV_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Unreadable or malformed input (log, labels, config).
   */
  PV_STATUS_INPUT = 3,
  /**
   * A pipeline stage failed.
   */
  PV_STATUS_STAGE = 4,
  /**
   * The library panicked; the message holds the payload.
   */
  PV_STATUS_PANIC = 5,
} pv_status;

typedef struct pv_config pv_config;

typedef struct pv_log pv_log;

typedef struct pv_net pv_net;

typedef struct pv_report pv_report;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *pv_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *pv_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void pv_string_free(char *s);

/**
 * Reads a CSV or XES log. `case_column`, `activity_column` and
 * `timestamp_column` may be null to use `case_id`, `activity` and
 * `timestamp`; pass an empty `timestamp_column` to keep file order.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum pv_status pv_log_read(const char *path,
                           const char *case_column,
                           const char *activity_column,
                           const char *timestamp_column,
                           struct pv_log **out);

/**
 * Builds a log from newline-separated traces of comma-separated
 * activities, e.g. `"p,a,l\np,l,a"`. Case ids are the line numbers.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
enum pv_status pv_log_from_text(const char *text, struct pv_log **out);

/**
 * Number of traces, or 0 for a null handle.
 *
 * # Safety
 * `log` must be null or a live handle.
 */
uintptr_t pv_log_len(const struct pv_log *log);

/**
 * # Safety
 * `log` must be null or a handle from this library, not yet freed.
 */
void pv_log_free(struct pv_log *log);

/**
 * Evaluates one Declare constraint such as `"Response(a,b)"` on a trace.
 *
 * # Safety
 * `activities` must point to `len` NUL-terminated strings.
 */
enum pv_status pv_declare_evaluate(const char *constraint,
                                   const char *const *activities,
                                   uintptr_t len,
                                   enum pv_outcome *out);

/**
 * Inductive-miner discovery with noise threshold `threshold` in [0, 1].
 *
 * # Safety
 * `log` must be a live handle; `out` must be writable.
 */
enum pv_status pv_discover(const struct pv_log *log, double threshold, struct pv_net **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum pv_status pv_net_read_pnml(const char *path, struct pv_net **out);

/**
 * PNML text of the net; free it with [`pv_string_free`].
 *
 * # Safety
 * `net` must be a live handle; `name` NUL-terminated; `out` writable.
 */
enum pv_status pv_net_to_pnml(const struct pv_net *net, const char *name, char **out);

/**
 * # Safety
 * `net` must be null or a handle from this library, not yet freed.
 */
void pv_net_free(struct pv_net *net);

/**
 * Share of traces whose optimal alignment costs 0.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum pv_status pv_trace_fitness(const struct pv_log *log, const struct pv_net *net, double *out);

/**
 * Cost-normalized alignment fitness.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum pv_status pv_alignment_fitness(const struct pv_log *log,
                                    const struct pv_net *net,
                                    double *out);

/**
 * Escaping-edges precision over aligned prefixes.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum pv_status pv_precision(const struct pv_log *log, const struct pv_net *net, double *out);

/**
 * Loads a TOML config. Relative paths are resolved against its directory.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum pv_status pv_config_load(const char *path, struct pv_config **out);

/**
 * Parses a TOML config from memory. Relative paths stay relative to the
 * working directory.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
enum pv_status pv_config_from_toml(const char *text, struct pv_config **out);

/**
 * Replaces the output directory.
 *
 * # Safety
 * `cfg` must be a live handle; `dir` NUL-terminated.
 */
enum pv_status pv_config_set_output_dir(struct pv_config *cfg, const char *dir);

/**
 * # Safety
 * `cfg` must be null or a handle from this library, not yet freed.
 */
void pv_config_free(struct pv_config *cfg);

/**
 * Runs the whole pipeline and writes every artifact to the output
 * directory.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum pv_status pv_run(const struct pv_config *cfg, struct pv_report **out);

/**
 * The report as JSON; free it with [`pv_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum pv_status pv_report_json(const struct pv_report *report, char **out);

/**
 * Number of clusters, or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
uintptr_t pv_report_cluster_count(const struct pv_report *report);

/**
 * Number of metric rows (clusters plus the two baselines).
 *
 * # Safety
 * `report` must be null or a live handle.
 */
uintptr_t pv_report_metric_rows(const struct pv_report *report);

/**
 * Test-fold accuracy of the sparse rule model, or NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double pv_report_ml_accuracy(const struct pv_report *report);

/**
 * True when the regression kept no rule.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
bool pv_report_is_degenerate(const struct pv_report *report);

/**
 * # Safety
 * `report` must be null or a handle from this library, not yet freed.
 */
void pv_report_free(struct pv_report *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROCVAR_H */
