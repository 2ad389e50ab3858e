#ifndef RELEX_H
#define RELEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum RelexStatus {
  RELEX_STATUS_OK = 0,
  RELEX_STATUS_NULL_ARGUMENT = 1,
  RELEX_STATUS_INVALID_UTF8 = 2,
  RELEX_STATUS_INVALID_ARGUMENT = 3,
  RELEX_STATUS_IO = 4,
  RELEX_STATUS_FORMAT = 5,
  RELEX_STATUS_TRAINING = 6,
  RELEX_STATUS_INTERNAL = 7,
} RelexStatus;

typedef enum RelexEntityClass {
  RELEX_ENTITY_CLASS_FOOD = 0,
  RELEX_ENTITY_CLASS_CHEMICAL = 1,
} RelexEntityClass;

typedef enum RelexVote {
  RELEX_VOTE_NEGATIVE = 0,
  RELEX_VOTE_POSITIVE = 1,
  RELEX_VOTE_DISCARD = 2,
} RelexVote;

/**
 * Opaque trained baseline model.
 */
typedef struct RelexBaseline RelexBaseline;

/**
 * Opaque dictionary matcher.
 */
typedef struct RelexMatcher RelexMatcher;

/**
 * Per-class precision/recall/F1 with class 1 as positive.
 */
typedef struct RelexMetrics {
  double precision[2];
  double recall[2];
  double f1[2];
  double macro_f1;
  size_t support[2];
} RelexMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *relex_last_error(void);

/**
 * Library version as a static string.
 */
const char *relex_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void relex_string_free(char *s);

/**
 * Build a matcher from a gazetteer CSV.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be valid for writes.
 */
enum RelexStatus relex_matcher_new(const char *path,
                                   enum RelexEntityClass entity_class,
                                   bool strip_plurals,
                                   struct RelexMatcher **out);

/**
 * Match `text` and return a JSON array of
 * `{"start","end","surface","concept_id"}` objects with char offsets.
 *
 * # Safety
 * `matcher` must come from [`relex_matcher_new`]; `text` must be a
 * nul-terminated string; `out_json` must be valid for writes.
 */
enum RelexStatus relex_matcher_find(const struct RelexMatcher *matcher,
                                    const char *text,
                                    char **out_json);

/**
 * # Safety
 * `matcher` must be null or come from [`relex_matcher_new`], freed once.
 */
void relex_matcher_free(struct RelexMatcher *matcher);

/**
 * Sentence spans of `text` as a JSON array of `[start, end]` char offsets.
 *
 * # Safety
 * `text` must be a nul-terminated string; `out_json` must be valid for writes.
 */
enum RelexStatus relex_sentence_spans(const char *text, char **out_json);

/**
 * Mask a candidate pair given as char spans of `sentence`: the food
 * surface becomes `XXX`, the chemical surface `YYY`.
 *
 * # Safety
 * `sentence` must be a nul-terminated string; `out` must be valid for writes.
 */
enum RelexStatus relex_mask(const char *sentence,
                            size_t food_start,
                            size_t food_end,
                            size_t chemical_start,
                            size_t chemical_end,
                            char **out);

/**
 * Unanimity vote over `len` binary labels from `k` classifiers.
 *
 * # Safety
 * `labels` must point to `len` readable bytes; `out` must be valid for writes.
 */
enum RelexStatus relex_vote(const uint8_t *labels, size_t len, size_t k, enum RelexVote *out);

/**
 * Early-stopping decision for a sequence of evaluation losses.
 *
 * # Safety
 * `losses` must point to `len` readable doubles; `out` must be valid for writes.
 */
enum RelexStatus relex_should_stop(const double *losses,
                                   size_t len,
                                   double delta,
                                   size_t patience,
                                   bool *out);

/**
 * Metrics from a 2x2 confusion matrix with class 1 as positive.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum RelexStatus relex_metrics_from_confusion(size_t tp,
                                              size_t fp,
                                              size_t fn_,
                                              size_t tn,
                                              struct RelexMetrics *out);

/**
 * Load a baseline model saved by the pipeline.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be valid for writes.
 */
enum RelexStatus relex_baseline_load(const char *path, struct RelexBaseline **out);

/**
 * Positive-class probability for a masked sentence.
 *
 * # Safety
 * `model` must come from [`relex_baseline_load`]; `masked` must be a
 * nul-terminated string; `out` must be valid for writes.
 */
enum RelexStatus relex_baseline_score(const struct RelexBaseline *model,
                                      const char *masked,
                                      double *out);

/**
 * # Safety
 * `model` must be null or come from [`relex_baseline_load`], freed once.
 */
void relex_baseline_free(struct RelexBaseline *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELEX_H */
