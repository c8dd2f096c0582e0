#ifndef DFFC_H
#define DFFC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DffcStatus {
  DFFC_STATUS_OK = 0,
  DFFC_STATUS_NULL_POINTER = 1,
  DFFC_STATUS_INVALID_ARGUMENT = 2,
  DFFC_STATUS_INVALID_SCHEDULE = 3,
  DFFC_STATUS_INDEX_OUT_OF_RANGE = 4,
  DFFC_STATUS_SHAPE_MISMATCH = 5,
  DFFC_STATUS_UNDEFINED_AUC = 6,
  DFFC_STATUS_DIVERGED = 7,
  DFFC_STATUS_IO = 8,
  DFFC_STATUS_FORMAT = 9,
  DFFC_STATUS_PANIC = 10,
} DffcStatus;

/**
 * Per-sample hardness state.
 */
typedef struct DffcHardness DffcHardness;

/**
 * Hard-pool schedule.
 */
typedef struct DffcSchedule DffcSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dffc_last_error(void);

const char *dffc_version(void);

void dffc_string_free(char *s);

enum DffcStatus dffc_instantaneous_hardness(double loss, double eta_t, double eta_max, double *out);

enum DffcStatus dffc_cosine_lr(double eta_max,
                               double eta_min,
                               size_t total_epochs,
                               size_t epoch,
                               double *out);

enum DffcStatus dffc_hardness_new(const double *prior,
                                  size_t n,
                                  double gamma,
                                  double alpha_f,
                                  struct DffcHardness **out);

/**
 * Restores a state saved by [`dffc_hardness_to_json`].
 */
enum DffcStatus dffc_hardness_from_json(const char *json, struct DffcHardness **out);

void dffc_hardness_free(struct DffcHardness *h);

/**
 * Number of samples, or 0 for a NULL handle.
 */
size_t dffc_hardness_len(const struct DffcHardness *h);

enum DffcStatus dffc_hardness_update(struct DffcHardness *h,
                                     size_t sample_id,
                                     double instantaneous,
                                     bool in_hard_pool);

/**
 * Writes all `n` DFH scores into `out`.
 */
enum DffcStatus dffc_hardness_dfh(const struct DffcHardness *h, double *out, size_t n);

/**
 * Writes all `n` DIH values into `out`.
 */
enum DffcStatus dffc_hardness_dih(const struct DffcHardness *h, double *out, size_t n);

/**
 * Serialises the state; free the string with [`dffc_string_free`].
 */
enum DffcStatus dffc_hardness_to_json(const struct DffcHardness *h, char **out);

enum DffcStatus dffc_schedule_new(const size_t *milestones,
                                  size_t n_milestones,
                                  double alpha_k,
                                  size_t easy_pool_size,
                                  size_t n_samples,
                                  size_t total_epochs,
                                  struct DffcSchedule **out);

void dffc_schedule_free(struct DffcSchedule *s);

enum DffcStatus dffc_schedule_pool_size(const struct DffcSchedule *s, size_t epoch, size_t *out);

/**
 * Writes the ids of the `k` highest scores, in ascending id order, to
 * `out_ids` (room for `k`). Ties go to the smaller id.
 */
enum DffcStatus dffc_select_hard_pool(const double *scores, size_t n, size_t k, size_t *out_ids);

/**
 * As [`dffc_select_hard_pool`] for the `e` lowest scores.
 */
enum DffcStatus dffc_select_easy_pool(const double *scores, size_t n, size_t e, size_t *out_ids);

/**
 * Global-window SSIM of two row-major `width * height` images in [0, 1].
 */
enum DffcStatus dffc_ssim(const float *a, const float *b, size_t width, size_t height, double *out);

/**
 * Fraction of pixels whose absolute difference exceeds `threshold`.
 */
enum DffcStatus dffc_tampering_ratio(const float *fake,
                                     const float *real,
                                     size_t width,
                                     size_t height,
                                     double threshold,
                                     double *out);

/**
 * ROC-AUC of `scores` against 0/1 `labels`.
 */
enum DffcStatus dffc_roc_auc(const double *scores, const double *labels, size_t n, double *out);

/**
 * Trains from a JSON run config (`"{}"` for defaults). When `out_dir` is
 * non-NULL the run artifacts are written there; the directory must exist.
 * `out_metrics`, when non-NULL, receives the per-epoch metrics as a JSON
 * array to be freed with [`dffc_string_free`].
 */
enum DffcStatus dffc_train_json(const char *config_json, const char *out_dir, char **out_metrics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFFC_H */
