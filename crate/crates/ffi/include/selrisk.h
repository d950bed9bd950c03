#ifndef SELRISK_H
#define SELRISK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SelriskStatus {
  SELRISK_STATUS_OK = 0,
  SELRISK_STATUS_NULL_POINTER = 1,
  SELRISK_STATUS_INVALID_INPUT = 2,
  SELRISK_STATUS_SINGLE_CLASS = 3,
  SELRISK_STATUS_DIMENSION_MISMATCH = 4,
  SELRISK_STATUS_PARSE = 5,
  SELRISK_STATUS_INTERNAL = 6,
} SelriskStatus;

/**
 * Zero-coverage rule for TCE.
 */
typedef enum SelriskFallback {
  SELRISK_FALLBACK_PER_ALPHA = 0,
  SELRISK_FALLBACK_WHOLE_RANGE = 1,
} SelriskFallback;

/**
 * Calibrated answer/abstain policy.
 */
typedef struct SelriskPolicy SelriskPolicy;

/**
 * Linear probe loaded from its JSON form.
 */
typedef struct SelriskProbe SelriskProbe;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a
 * success. Valid until the next call into this library on the same thread.
 */
const char *selrisk_last_error_message(void);

/**
 * AUROC of `scores` for the positive `labels`, ties counted half.
 *
 * # Safety
 * Arrays must hold `n` elements; `out` must be writable.
 */
enum SelriskStatus selrisk_auroc(const double *scores, const bool *labels, size_t n, double *out);

/**
 * Step-wise average precision with positive `labels`.
 *
 * # Safety
 * Arrays must hold `n` elements; `out` must be writable.
 */
enum SelriskStatus selrisk_auprc(const double *scores, const bool *labels, size_t n, double *out);

/**
 * Area under the risk-coverage curve and its excess over the oracle.
 *
 * # Safety
 * Arrays must hold `n` elements; `aurc_out` and `e_aurc_out` must be writable.
 */
enum SelriskStatus selrisk_rc_area(const double *risks,
                                   const bool *hallucinated,
                                   size_t n,
                                   double *aurc_out,
                                   double *e_aurc_out);

/**
 * Spearman rank correlation.
 *
 * # Safety
 * Arrays must hold `n` elements; `out` must be writable.
 */
enum SelriskStatus selrisk_spearman(const double *a, const double *b, size_t n, double *out);

/**
 * Target calibration error over the grid `alpha_min..=alpha_max` in steps of `alpha_step`.
 *
 * # Safety
 * Calibration arrays hold `n_cal` elements, test arrays `n_test`; `out` must be writable.
 */
enum SelriskStatus selrisk_tce(const double *cal_risks,
                               const bool *cal_hallucinated,
                               size_t n_cal,
                               const double *test_risks,
                               const bool *test_hallucinated,
                               size_t n_test,
                               double alpha_min,
                               double alpha_max,
                               double alpha_step,
                               enum SelriskFallback fallback,
                               double *out);

/**
 * Mean negative log-likelihood of answer-token log-probabilities.
 *
 * # Safety
 * `logprobs` must hold `n` elements; `out` must be writable.
 */
enum SelriskStatus selrisk_sequence_nll(const double *logprobs, size_t n, double *out);

/**
 * Semantic entropy (natural log) of a cluster labelling `0..C-1` over `k` samples.
 *
 * # Safety
 * `cluster_ids` must hold `k` elements; `out` must be writable.
 */
enum SelriskStatus selrisk_semantic_entropy(const size_t *cluster_ids, size_t k, double *out);

/**
 * Greedy mutual-entailment clustering of a row-major `k × k` matrix.
 *
 * # Safety
 * `pairs` must hold `k * k` elements, `cluster_out` `k` writable elements,
 * and `num_clusters_out` must be writable.
 */
enum SelriskStatus selrisk_cluster_by_entailment(const bool *pairs,
                                                 size_t k,
                                                 size_t *cluster_out,
                                                 size_t *num_clusters_out);

/**
 * Calibrates a policy answering iff `risk ≤ tau` with calibration risk at most `alpha`.
 *
 * # Safety
 * Arrays must hold `n` elements; `policy_out` must be writable.
 */
enum SelriskStatus selrisk_policy_calibrate(const double *risks,
                                            const bool *hallucinated,
                                            size_t n,
                                            double alpha,
                                            struct SelriskPolicy **policy_out);

/**
 * Loads a policy from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `policy_out` must be writable.
 */
enum SelriskStatus selrisk_policy_from_json(const char *json, struct SelriskPolicy **policy_out);

/**
 * Threshold of a policy; `-INFINITY` when it abstains on everything.
 *
 * # Safety
 * `policy` must come from this library and not yet be freed.
 */
enum SelriskStatus selrisk_policy_tau(const struct SelriskPolicy *policy, double *out);

/**
 * Writes `true` (answer) or `false` (abstain) per risk.
 *
 * # Safety
 * `policy` must be live; `risks` and `answer_out` must hold `n` elements.
 */
enum SelriskStatus selrisk_policy_apply(const struct SelriskPolicy *policy,
                                        const double *risks,
                                        size_t n,
                                        bool *answer_out);

/**
 * Releases a policy. Null is ignored.
 *
 * # Safety
 * `policy` must come from this library and not be used afterwards.
 */
void selrisk_policy_free(struct SelriskPolicy *policy);

/**
 * Loads a probe from the JSON written by `train-probe`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `probe_out` must be writable.
 */
enum SelriskStatus selrisk_probe_from_json(const char *json, struct SelriskProbe **probe_out);

/**
 * Feature dimension and hidden-state layer the probe reads.
 *
 * # Safety
 * `probe` must be live; out-pointers must be writable.
 */
enum SelriskStatus selrisk_probe_shape(const struct SelriskProbe *probe,
                                       size_t *dim_out,
                                       size_t *layer_out);

/**
 * Positive-class probability for `n` row-major feature rows of width `dim`.
 *
 * # Safety
 * `probe` must be live; `features` must hold `n * dim` elements and `out` `n`.
 */
enum SelriskStatus selrisk_probe_predict(const struct SelriskProbe *probe,
                                         const double *features,
                                         size_t n,
                                         size_t dim,
                                         double *out);

/**
 * Releases a probe. Null is ignored.
 *
 * # Safety
 * `probe` must come from this library and not be used afterwards.
 */
void selrisk_probe_free(struct SelriskProbe *probe);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SELRISK_H */
