#ifndef INLS_H
#define INLS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InlsFateKind {
  INLS_FATE_KIND_RAN_TO_END = 0,
  INLS_FATE_KIND_BLOWUP_DETECTED = 1,
  INLS_FATE_KIND_DISPERSED = 2,
  INLS_FATE_KIND_BOUNDARY_CONTAMINATED = 3,
  INLS_FATE_KIND_STEP_FLOOR_HIT = 4,
} InlsFateKind;

/**
 * Outcome of a call; the numeric values match the CLI exit codes where they overlap.
 */
typedef enum InlsStatus {
  INLS_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  INLS_STATUS_INVALID_ARGUMENT = 1,
  INLS_STATUS_VALIDATION = 2,
  INLS_STATUS_OUTPUT_CONFLICT = 3,
  INLS_STATUS_RUNTIME_GUARD = 4,
  INLS_STATUS_SOLVER_FAILURE = 5,
  INLS_STATUS_PANIC = 6,
} InlsStatus;

/**
 * Opaque validated experiment configuration.
 */
typedef struct InlsExperiment InlsExperiment;

/**
 * Opaque converged ground state.
 */
typedef struct InlsGroundState InlsGroundState;

/**
 * Opaque finished run.
 */
typedef struct InlsRun InlsRun;

/**
 * Scalars of a converged ground state.
 */
typedef struct InlsGroundSummary {
  double mass;
  double grad_sq;
  double potential;
  double energy;
  double c_opt;
  double e_m_sigma;
  double grad_m_sigma;
  double p_m_sigma;
  double pohozaev_r1;
  double pohozaev_r2;
  size_t iterations;
} InlsGroundSummary;

/**
 * Observed fate of a run; `t` is zero for `RanToEnd`.
 */
typedef struct InlsFate {
  enum InlsFateKind kind;
  double t;
  size_t steps;
  double grad_growth;
} InlsFate;

/**
 * One diagnostic sample; NaN marks an unavailable variance entry.
 */
typedef struct InlsRecord {
  double t;
  double mass;
  double energy;
  double potential;
  double virial_g;
  double grad_sq;
  double variance;
  double variance_d1;
  double variance_d2;
  double variance_d2_fd;
} InlsRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *inls_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *inls_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void inls_string_free(char *s);

/**
 * Solves for `Q` on the default radial grid.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum InlsStatus inls_ground_state_solve(size_t n,
                                        double b,
                                        double alpha,
                                        struct InlsGroundState **out);

/**
 * # Safety
 * `gs` must be null or a live handle from [`inls_ground_state_solve`].
 */
void inls_ground_state_free(struct InlsGroundState *gs);

/**
 * # Safety
 * `gs` must be a live handle and `out` valid for one write.
 */
enum InlsStatus inls_ground_state_summary(const struct InlsGroundState *gs,
                                          struct InlsGroundSummary *out);

/**
 * Number of radial samples of `Q`.
 *
 * # Safety
 * `gs` must be null or a live handle.
 */
size_t inls_ground_state_len(const struct InlsGroundState *gs);

/**
 * Copies up to `len` samples of `r` and `Q(r)`; either buffer may be null.
 *
 * # Safety
 * Non-null buffers must hold `len` doubles.
 */
enum InlsStatus inls_ground_state_profile(const struct InlsGroundState *gs,
                                          double *r,
                                          double *q,
                                          size_t len);

/**
 * Parses and validates a JSON experiment config.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for one write.
 */
enum InlsStatus inls_experiment_from_json(const char *json, struct InlsExperiment **out);

/**
 * # Safety
 * `exp` must be null or a live handle.
 */
void inls_experiment_free(struct InlsExperiment *exp);

/**
 * Classifies the configured datum; `*out` receives a JSON verdict to release
 * with [`inls_string_free`].
 *
 * # Safety
 * `exp` must be a live handle and `out` valid for one write.
 */
enum InlsStatus inls_experiment_classify(const struct InlsExperiment *exp, char **out);

/**
 * Integrates the configured datum.
 *
 * # Safety
 * `exp` must be a live handle and `out` valid for one write.
 */
enum InlsStatus inls_experiment_run(const struct InlsExperiment *exp, struct InlsRun **out);

/**
 * # Safety
 * `run` must be null or a live handle.
 */
void inls_run_free(struct InlsRun *run);

/**
 * # Safety
 * `run` must be a live handle and `out` valid for one write.
 */
enum InlsStatus inls_run_fate(const struct InlsRun *run, struct InlsFate *out);

/**
 * Full fate report as JSON, released with [`inls_string_free`].
 *
 * # Safety
 * `run` must be a live handle and `out` valid for one write.
 */
enum InlsStatus inls_run_report_json(const struct InlsRun *run, char **out);

/**
 * # Safety
 * `run` must be null or a live handle.
 */
size_t inls_run_records_len(const struct InlsRun *run);

/**
 * Copies record `index`; out-of-range indices are `INLS_STATUS_INVALID_ARGUMENT`.
 *
 * # Safety
 * `run` must be a live handle and `out` valid for one write.
 */
enum InlsStatus inls_run_record(const struct InlsRun *run, size_t index, struct InlsRecord *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INLS_H */
