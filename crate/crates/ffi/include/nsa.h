#ifndef NSA_H
#define NSA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every `nsa_*` call.
 */
typedef enum NsaStatus {
  NSA_STATUS_OK = 0,
  NSA_STATUS_NULL_POINTER = 1,
  NSA_STATUS_INVALID_ARGUMENT = 2,
  NSA_STATUS_SHAPE = 3,
  NSA_STATUS_CONFIG = 4,
  NSA_STATUS_DATA = 5,
  NSA_STATUS_IO = 6,
  NSA_STATUS_NON_FINITE = 7,
  NSA_STATUS_BUFFER_TOO_SMALL = 8,
  NSA_STATUS_PANIC = 9,
} NsaStatus;

/**
 * Opaque labelled dataset.
 */
typedef struct NsaDataset NsaDataset;

/**
 * Opaque trained network.
 */
typedef struct NsaModel NsaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The pointer stays
 * valid until the next `nsa_*` call on the same thread.
 */
const char *nsa_last_error(void);

/**
 * Release a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void nsa_string_free(char *s);

/**
 * Parse a model from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum NsaStatus nsa_model_from_json(const char *json, struct NsaModel **out);

/**
 * Serialize a model to JSON. Free the result with [`nsa_string_free`].
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum NsaStatus nsa_model_to_json(const struct NsaModel *model, char **out);

/**
 * # Safety
 * `model` must be null or a handle that has not been freed.
 */
void nsa_model_free(struct NsaModel *model);

/**
 * Hidden width, input count and output count.
 *
 * # Safety
 * `model` must be a live handle; output pointers must be writable.
 */
enum NsaStatus nsa_model_dims(const struct NsaModel *model,
                              size_t *hidden,
                              size_t *inputs,
                              size_t *outputs);

/**
 * Original column indices of the model inputs (`inputs` entries).
 *
 * # Safety
 * `model` must be a live handle; `out` must hold `len` elements.
 */
enum NsaStatus nsa_model_feature_ids(const struct NsaModel *model, size_t *out, size_t len);

/**
 * Logits for a row-major `rows × cols` input; `out` receives `rows × outputs` values.
 *
 * # Safety
 * `x` must hold `rows * cols` values and `out` `out_len` values.
 */
enum NsaStatus nsa_model_forward(const struct NsaModel *model,
                                 const double *x,
                                 size_t rows,
                                 size_t cols,
                                 double *out,
                                 size_t out_len);

/**
 * Rescale every node to a unit input weight vector. `dead` receives the number of nodes
 * whose weights were all zero (may be null).
 *
 * # Safety
 * `model` must be a live handle.
 */
enum NsaStatus nsa_model_normalize(struct NsaModel *model, size_t *dead);

/**
 * Node importance scores (`hidden` entries).
 *
 * # Safety
 * `model` must be a live handle; `out` must hold `len` elements.
 */
enum NsaStatus nsa_model_node_importance(const struct NsaModel *model, double *out, size_t len);

/**
 * Squared group weight of each input (`inputs` entries).
 *
 * # Safety
 * `model` must be a live handle; `out` must hold `len` elements.
 */
enum NsaStatus nsa_model_feature_relevance(const struct NsaModel *model, double *out, size_t len);

/**
 * Keep the `keep` most important hidden nodes.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum NsaStatus nsa_model_prune_nodes(struct NsaModel *model, size_t keep);

/**
 * Keep only the listed input columns (indices into the current inputs).
 *
 * # Safety
 * `model` must be a live handle; `ids` must hold `n` values.
 */
enum NsaStatus nsa_model_prune_features(struct NsaModel *model, const size_t *ids, size_t n);

/**
 * `n × p` k-D XOR training data from the pool of `seed`.
 *
 * # Safety
 * `out` must be writable.
 */
enum NsaStatus nsa_dataset_gen_xor(size_t k,
                                   size_t p,
                                   size_t n,
                                   uint64_t seed,
                                   struct NsaDataset **out);

/**
 * Load a numeric CSV file with a header row; `label` names the class column.
 *
 * # Safety
 * `path` and `label` must be NUL-terminated strings; `out` must be writable.
 */
enum NsaStatus nsa_dataset_from_csv(const char *path, const char *label, struct NsaDataset **out);

/**
 * # Safety
 * `ds` must be null or a handle that has not been freed.
 */
void nsa_dataset_free(struct NsaDataset *ds);

/**
 * Row, column and class counts.
 *
 * # Safety
 * `ds` must be a live handle; output pointers must be writable.
 */
enum NsaStatus nsa_dataset_dims(const struct NsaDataset *ds,
                                size_t *rows,
                                size_t *cols,
                                size_t *classes);

/**
 * Train a plain network of width `hidden`. `config_json` holds training settings as JSON
 * (null for defaults).
 *
 * # Safety
 * `ds` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
 */
enum NsaStatus nsa_train(const struct NsaDataset *ds,
                         size_t hidden,
                         const char *config_json,
                         struct NsaModel **out);

/**
 * Node selection with annealing. `config_json` holds annealing settings as JSON (null
 * for defaults).
 *
 * # Safety
 * `ds` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
 */
enum NsaStatus nsa_run_nsa(const struct NsaDataset *ds,
                           const char *config_json,
                           struct NsaModel **out);

/**
 * Feature and node selection with annealing; `target_features` in the config sets the
 * number of features kept.
 *
 * # Safety
 * `ds` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
 */
enum NsaStatus nsa_run_fsa_nsa(const struct NsaDataset *ds,
                               const char *config_json,
                               struct NsaModel **out);

/**
 * Annealing schedule count at `epoch`.
 *
 * # Safety
 * `out` must be writable.
 */
enum NsaStatus nsa_schedule_value(size_t start,
                                  size_t end,
                                  size_t n_iter,
                                  double mu,
                                  double onset_fraction,
                                  double plateau_fraction,
                                  size_t epoch,
                                  size_t *out);

/**
 * ROC AUC of `scores` against binary `labels` (non-zero is positive).
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
enum NsaStatus nsa_auc(const double *scores, const size_t *labels, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSA_H */
