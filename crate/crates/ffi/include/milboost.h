#ifndef MILBOOST_H
#define MILBOOST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MilboostStatus {
  MILBOOST_STATUS_OK = 0,
  MILBOOST_STATUS_NULL_POINTER = 1,
  MILBOOST_STATUS_INVALID_ARGUMENT = 2,
  MILBOOST_STATUS_IO = 3,
  MILBOOST_STATUS_PARSE = 4,
  MILBOOST_STATUS_UNTRAINED = 5,
  MILBOOST_STATUS_RUNTIME = 6,
  MILBOOST_STATUS_PANIC = 7,
} MilboostStatus;

/**
 * Opaque dataset handle.
 */
typedef struct MilboostDataset MilboostDataset;

/**
 * Opaque trained model handle.
 */
typedef struct MilboostModel MilboostModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or `NULL` if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *milboost_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *milboost_version(void);

/**
 * Loads a JSONL or CSV dataset; `format` is `"jsonl"`, `"csv"` or `NULL` to
 * infer it from the extension.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string, `format` NULL or valid, and
 * `out` a valid pointer to write the handle to.
 */
enum MilboostStatus milboost_dataset_load(const char *path,
                                          const char *format,
                                          struct MilboostDataset **out);

/**
 * Generates a synthetic dataset labelled by the stump
 * `x[target_feature] > target_threshold` pooled with max.
 *
 * # Safety
 * `regime` must be NULL (homogeneous_independent) or a valid string; `out`
 * must be a valid pointer.
 */
enum MilboostStatus milboost_dataset_synth(const char *regime,
                                           size_t dimension,
                                           size_t max_bag_size,
                                           size_t num_bags,
                                           double positive_rate,
                                           size_t target_feature,
                                           double target_threshold,
                                           double noise,
                                           uint64_t seed,
                                           struct MilboostDataset **out);

/**
 * Number of bags; 0 for a NULL handle.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t milboost_dataset_num_bags(const struct MilboostDataset *dataset);

/**
 * Instance dimension; 0 for a NULL handle.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t milboost_dataset_dimension(const struct MilboostDataset *dataset);

/**
 * Label (`-1` or `1`) of bag `index`, or 0 when out of range.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
int32_t milboost_dataset_label(const struct MilboostDataset *dataset, size_t index);

/**
 * # Safety
 * `dataset` must be NULL or a handle not freed before.
 */
void milboost_dataset_free(struct MilboostDataset *dataset);

/**
 * Trains an ensemble. String options may be NULL for their defaults:
 * `psi` = "max", `oracle` = "agnostic", `mode` = "per_instance",
 * `booster` = "adaboost" (or "adaboost_star", which uses `nu`).
 *
 * # Safety
 * `dataset` must be a live handle, string arguments NULL or valid, `out` a
 * valid pointer.
 */
enum MilboostStatus milboost_train(const struct MilboostDataset *dataset,
                                   const char *psi,
                                   const char *oracle,
                                   const char *mode,
                                   const char *booster,
                                   size_t rounds,
                                   double nu,
                                   struct MilboostModel **out);

/**
 * Parses a model from its JSON text.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum MilboostStatus milboost_model_from_json(const char *json, struct MilboostModel **out);

/**
 * Serializes a model to JSON; release the string with [`milboost_string_free`].
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum MilboostStatus milboost_model_to_json(const struct MilboostModel *model, char **out);

/**
 * Number of boosting terms; 0 for a NULL handle.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t milboost_model_num_terms(const struct MilboostModel *model);

/**
 * Writes normalized scores (in `[-1, 1]`) and predicted labels (`-1`/`1`)
 * for every bag. Either output array may be NULL; non-NULL arrays must hold
 * `len` elements and `len` must equal the number of bags.
 *
 * # Safety
 * Handles must be live; output arrays NULL or valid for `len` writes.
 */
enum MilboostStatus milboost_model_predict(const struct MilboostModel *model,
                                           const struct MilboostDataset *dataset,
                                           double *scores,
                                           int32_t *labels,
                                           size_t len);

/**
 * # Safety
 * `model` must be NULL or a handle not freed before.
 */
void milboost_model_free(struct MilboostModel *model);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string obtained from this library, not freed before.
 */
void milboost_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MILBOOST_H */
