#ifndef NEVRAND_H
#define NEVRAND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NrStatus {
  NR_STATUS_OK = 0,
  NR_STATUS_INVALID_INPUT = 1,
  NR_STATUS_CONFIG = 2,
  NR_STATUS_STATISTICAL_FLOOR = 3,
  NR_STATUS_TRUNCATION_FAILURE = 4,
  NR_STATUS_QUADRATURE_DIVERGENCE = 5,
  NR_STATUS_ROOT_FINDING_FAILURE = 6,
  NR_STATUS_CIRCLE_ROOT_PROXIMITY = 7,
  NR_STATUS_IO = 8,
  NR_STATUS_NULL_POINTER = 9,
  NR_STATUS_PANIC = 10,
} NrStatus;

typedef enum NrModel {
  NR_MODEL_GAUSSIAN = 0,
  NR_MODEL_RADEMACHER = 1,
  NR_MODEL_STEINHAUS = 2,
} NrModel;

typedef enum NrFormat {
  NR_FORMAT_CSV = 0,
  NR_FORMAT_JSONL = 1,
} NrFormat;

/**
 * A validated experiment configuration.
 */
typedef struct NrConfig NrConfig;

/**
 * One truncated random (or deterministic) sample.
 */
typedef struct NrSample NrSample;

/**
 * Base coefficient sequence.
 */
typedef struct NrSequence NrSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library, `0.1.0-<git describe>`. Static storage.
 */
const char *nr_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL;
 * 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t nr_last_error_message(char *buf, size_t len);

/**
 * Parses a base description such as `exponential`,
 * `geometric-factorial:1,2`, `mittag-leffler:0.5`, `explicit-list:0,1` or
 * `star:exponential`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum NrStatus nr_sequence_parse(const char *spec, struct NrSequence **out);

/**
 * # Safety
 * `re` (and `im` unless null) must hold `len` values; `out` must be writable.
 */
enum NrStatus nr_sequence_explicit(const double *re,
                                   const double *im,
                                   size_t len,
                                   struct NrSequence **out);

/**
 * The sequence `j·a_j` of `z f'(z)`.
 *
 * # Safety
 * `seq` must come from this library; `out` must be writable.
 */
enum NrStatus nr_sequence_star(const struct NrSequence *seq, struct NrSequence **out);

/**
 * # Safety
 * `seq` must be null or come from this library and not be freed twice.
 */
void nr_sequence_free(struct NrSequence *seq);

/**
 * `log σ(r, f)` under the default truncation policy.
 *
 * # Safety
 * `seq` must come from this library; `out` must be writable.
 */
enum NrStatus nr_log_sigma(const struct NrSequence *seq, double r, double *out);

/**
 * `r d/dr log σ(r, f)`.
 *
 * # Safety
 * As [`nr_log_sigma`].
 */
enum NrStatus nr_log_sigma_derivative(const struct NrSequence *seq, double r, double *out);

/**
 * # Safety
 * As [`nr_log_sigma`].
 */
enum NrStatus nr_truncation_degree(const struct NrSequence *seq, double r, size_t *out);

/**
 * `log M(r, f)` of the base.
 *
 * # Safety
 * As [`nr_log_sigma`].
 */
enum NrStatus nr_log_max_modulus(const struct NrSequence *seq, double r, double *out);

/**
 * Sample `χ_j a_j`, `j = 0..=degree`, from the stream of `(seed, trial)`.
 *
 * # Safety
 * `seq` must come from this library; `out` must be writable.
 */
enum NrStatus nr_sample_new(const struct NrSequence *seq,
                            enum NrModel model,
                            size_t degree,
                            uint64_t seed,
                            uint64_t trial,
                            struct NrSample **out);

/**
 * A fixed polynomial with the given coefficients.
 *
 * # Safety
 * As [`nr_sequence_explicit`].
 */
enum NrStatus nr_sample_from_coefficients(const double *re,
                                          const double *im,
                                          size_t len,
                                          struct NrSample **out);

/**
 * # Safety
 * `sample` must be null or come from this library and not be freed twice.
 */
void nr_sample_free(struct NrSample *sample);

/**
 * Degree `N` of the sample; 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or come from this library.
 */
size_t nr_sample_degree(const struct NrSample *sample);

/**
 * Copies up to `len` coefficients into `re` and `im`.
 *
 * # Safety
 * `re` and `im` must be valid for `len` writes.
 */
enum NrStatus nr_sample_coefficients(const struct NrSample *sample,
                                     double *re,
                                     double *im,
                                     size_t len);

/**
 * `n(r, a)` by the argument principle.
 *
 * # Safety
 * `sample` must come from this library; `out` must be writable.
 */
enum NrStatus nr_count_zeros(const struct NrSample *sample,
                             double r,
                             double a_re,
                             double a_im,
                             size_t *out);

/**
 * `N(r, a)` from the located roots.
 *
 * # Safety
 * As [`nr_count_zeros`].
 */
enum NrStatus nr_counting_n(const struct NrSample *sample,
                            double r,
                            double a_re,
                            double a_im,
                            double *out);

/**
 * `T(r)` of the sample.
 *
 * # Safety
 * As [`nr_count_zeros`].
 */
enum NrStatus nr_characteristic_t(const struct NrSample *sample, double r, double *out);

/**
 * `log σ(r)` of the sample, by Parseval.
 *
 * # Safety
 * As [`nr_count_zeros`].
 */
enum NrStatus nr_sample_log_sigma(const struct NrSample *sample, double r, double *out);

/**
 * `X_r`: circle mean of `|log|f_ω| − log σ(r, f)|`.
 *
 * # Safety
 * As [`nr_count_zeros`].
 */
enum NrStatus nr_x_r(const struct NrSample *sample, double log_sigma_f, double r, double *out);

/**
 * Residual of the Jensen identity at `r`.
 *
 * # Safety
 * As [`nr_count_zeros`].
 */
enum NrStatus nr_jensen_residual(const struct NrSample *sample, double r, double *out);

/**
 * Loads and validates a TOML experiment config.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum NrStatus nr_config_load(const char *path, struct NrConfig **out);

/**
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum NrStatus nr_config_parse(const char *text, struct NrConfig **out);

/**
 * # Safety
 * `config` must be null or come from this library and not be freed twice.
 */
void nr_config_free(struct NrConfig *config);

/**
 * # Safety
 * `config` must come from this library.
 */
enum NrStatus nr_config_set_seed(struct NrConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` must come from this library.
 */
enum NrStatus nr_config_set_trials(struct NrConfig *config, size_t trials);

/**
 * Runs the config as `verify` (`tails` != 0 selects `tails`), writes the
 * record file and report under `out_dir`, and stores 1 in `passed` when all
 * checks pass. `workers` = 0 means one per core.
 *
 * # Safety
 * `config` must come from this library, `out_dir` must be a NUL-terminated
 * string and `passed` writable.
 */
enum NrStatus nr_run(const struct NrConfig *config,
                     int tails,
                     size_t workers,
                     const char *out_dir,
                     enum NrFormat format,
                     int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEVRAND_H */
