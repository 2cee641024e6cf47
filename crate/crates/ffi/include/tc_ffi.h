#ifndef TC_FFI_H
#define TC_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_UTF8 = 2,
  TC_STATUS_INVALID_ARGUMENT = 3,
  TC_STATUS_IO = 4,
  TC_STATUS_PARSE = 5,
  TC_STATUS_DATA = 6,
  TC_STATUS_CONFIG = 7,
  TC_STATUS_NUMERIC = 8,
  TC_STATUS_PANIC = 9,
} TcStatus;

/*
 An augmentation technique bound to a synonym lexicon.
 */
typedef struct TcAugmenter TcAugmenter;

/*
 A curriculum schedule.
 */
typedef struct TcSchedule TcSchedule;

typedef struct TcTrainSummary {
  double best_accuracy;
  uint64_t best_update;
  /*
   NaN when the run has no test split.
   */
  double test_accuracy;
  uint64_t total_updates;
  uint64_t mined_triplets;
  uint64_t fallback_triplets;
} TcTrainSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call into this library from the same thread.
 */
const char *tc_last_error_message(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void tc_string_free(char *s);

/*
 Positions a count-based operator perturbs in a sentence of `len` tokens.

 # Safety
 `out` must be writable.
 */
enum TcStatus tc_num_perturbed(double tau, uintptr_t len, uintptr_t *out);

/*
 Cosine distance `1 - cos(u, v)`; zero vectors are at distance 1.

 # Safety
 `u` and `v` must hold `len` doubles; `out` must be writable.
 */
enum TcStatus tc_cosine_distance(const double *u, const double *v, uintptr_t len, double *out);

/*
 Triplet hinge loss of one embedding triple.

 # Safety
 `anchor`, `positive` and `negative` must hold `len` doubles; `out` must
 be writable.
 */
enum TcStatus tc_triplet_loss(const double *anchor,
                              const double *positive,
                              const double *negative,
                              uintptr_t len,
                              double margin,
                              double *out);

/*
 Creates an augmenter. `lexicon_path` may be null for an empty lexicon;
 the switchout vocabulary is the lexicon's words.

 # Safety
 String arguments must be NUL-terminated; `out` must be writable.
 */
enum TcStatus tc_augmenter_new(const char *technique,
                               const char *lexicon_path,
                               struct TcAugmenter **out);

/*
 Augments `text` at temperature `tau`. The same `seed` gives the same
 output. The result is written to `out_text`.

 # Safety
 `augmenter` must come from [`tc_augmenter_new`]; `text` must be
 NUL-terminated; `out_text` must be writable.
 */
enum TcStatus tc_augment_text(const struct TcAugmenter *augmenter,
                              const char *text,
                              double tau,
                              uint64_t seed,
                              char **out_text);

/*
 # Safety
 `augmenter` must come from [`tc_augmenter_new`] or be null.
 */
void tc_augmenter_free(struct TcAugmenter *augmenter);

/*
 Builds a preset schedule: `kind` is a schedule name such as
 `"gradual"`, `preset` one of `huff`, `fewrel`, `covc`, `amzn`.

 # Safety
 String arguments must be NUL-terminated; `out` must be writable.
 */
enum TcStatus tc_schedule_preset(const char *kind,
                                 const char *preset,
                                 double tau_final,
                                 uint64_t seed,
                                 struct TcSchedule **out);

/*
 # Safety
 `schedule` must come from [`tc_schedule_preset`]; `out` must be writable.
 */
enum TcStatus tc_schedule_total_updates(const struct TcSchedule *schedule, uint64_t *out);

/*
 # Safety
 `schedule` must come from [`tc_schedule_preset`]; `out` must be writable.
 */
enum TcStatus tc_schedule_num_stages(const struct TcSchedule *schedule, uintptr_t *out);

/*
 Stage index, temperature and augmentation flag in effect at `update`.

 # Safety
 `schedule` must come from [`tc_schedule_preset`]; the out-pointers must
 be writable.
 */
enum TcStatus tc_schedule_stage_at(const struct TcSchedule *schedule,
                                   uint64_t update,
                                   uintptr_t *out_stage,
                                   double *out_tau,
                                   bool *out_augment);

/*
 # Safety
 `schedule` must come from [`tc_schedule_preset`] or be null.
 */
void tc_schedule_free(struct TcSchedule *schedule);

/*
 Trains from a run config file. `out_metrics_csv` may be null; otherwise
 it receives the metric history as CSV.

 # Safety
 `config_path` must be NUL-terminated; `out` must be writable;
 `out_metrics_csv` must be null or writable.
 */
enum TcStatus tc_train_from_config(const char *config_path,
                                   struct TcTrainSummary *out,
                                   char **out_metrics_csv);

/*
 Finite-difference gradient check over `configs` random networks; writes
 the largest relative error.

 # Safety
 `out_max_error` must be writable.
 */
enum TcStatus tc_gradcheck(uint64_t seed, uintptr_t configs, double *out_max_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TC_FFI_H */
