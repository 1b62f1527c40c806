/* C interface to schedkit: learning-rate schedule synthesis, refinement, and last-iterate bounds. */

#ifndef SCHEDKIT_H
#define SCHEDKIT_H

/* Generated by the crate's build script; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Base schedule families; `power` applies to `Poly`, `beta` to `InvT` and
// `InvSqrt`, and `Stepwise` uses the conventional 30/60/90 percent
// milestones with factor 0.1.
typedef enum SkScheduleKind {
  SK_SCHEDULE_KIND_LINEAR = 0,
  SK_SCHEDULE_KIND_POLY = 1,
  SK_SCHEDULE_KIND_COSINE = 2,
  SK_SCHEDULE_KIND_STEPWISE = 3,
  SK_SCHEDULE_KIND_INV_T = 4,
  SK_SCHEDULE_KIND_INV_SQRT = 5,
  SK_SCHEDULE_KIND_CONSTANT = 6,
} SkScheduleKind;

// Result of a toolkit call.
typedef enum SkStatus {
  // The call succeeded.
  SK_STATUS_OK = 0,
  // A required pointer argument was null.
  SK_STATUS_NULL_ARGUMENT = 1,
  // Input text or structure could not be parsed.
  SK_STATUS_PARSE_ERROR = 2,
  // Mathematically invalid input (wrong length, nonpositive values,
  // degenerate norms, and so on).
  SK_STATUS_DOMAIN_ERROR = 3,
} SkStatus;

// Opaque sequence of per-step learning-rate multipliers.
typedef struct SkSchedule SkSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, empty if no
// call has failed yet. The pointer stays valid until the next failing
// toolkit call on the same thread.
const char *sk_last_error_message(void);

// Build a peak-normalized schedule of `steps` multipliers with an optional
// leading warmup ramp covering `warmup` of the horizon (0 disables it).
//
// # Safety
// `out` must be a valid pointer; on success it receives an owned handle.
enum SkStatus sk_schedule_make(enum SkScheduleKind kind,
                               size_t steps,
                               double warmup,
                               double power,
                               double beta,
                               struct SkSchedule **out);

// Turn a logged sequence of Euclidean gradient norms into a refined
// schedule: median-filter the norms with a window of roughly `tau` times
// the horizon, weight steps by inverse squared filtered norms, and convert
// the weights into multipliers. When `clamp_zeros` is false, norms that are
// zero after filtering are an error; when true they are clamped to a small
// fraction of the largest norm.
//
// # Safety
// `norms` must point to `len` readable doubles; `out` must be valid.
enum SkStatus sk_schedule_refine(const double *norms,
                                 size_t len,
                                 double tau,
                                 bool clamp_zeros,
                                 struct SkSchedule **out);

// Number of steps in the schedule; zero when the handle is null.
//
// # Safety
// `schedule` must be null or a live handle from this library.
size_t sk_schedule_len(const struct SkSchedule *schedule);

// Copy the schedule's multipliers into `out`, which must hold exactly
// `len == sk_schedule_len(schedule)` doubles.
//
// # Safety
// `schedule` must be a live handle; `out` must point to `len` writable
// doubles.
enum SkStatus sk_schedule_values(const struct SkSchedule *schedule, double *out, size_t len);

// Release a schedule handle. Null is accepted and ignored.
//
// # Safety
// `schedule` must be null or an owned handle not freed before.
void sk_schedule_free(struct SkSchedule *schedule);

// Evaluate the last-iterate suboptimality bound for running SGD with the
// multipliers `eta` against per-step gradient-norm bounds `gnorms`
// (`gnorms_len` must equal `eta_len`) from a start at most `distance` away
// from the comparator. Writes the bound total to `out_total`.
//
// # Safety
// `eta` and `gnorms` must point to `eta_len` and `gnorms_len` readable
// doubles; `out_total` must be valid.
enum SkStatus sk_bound_total(const double *eta,
                             size_t eta_len,
                             const double *gnorms,
                             size_t gnorms_len,
                             double distance,
                             double *out_total);

// Fit a warmup-plus-polynomial-decay profile to arbitrary multipliers,
// returning the warmup fraction, decay power, and root-mean-square
// residual of the fit.
//
// # Safety
// `values` must point to `len` readable doubles; the three out-pointers
// must be valid.
enum SkStatus sk_fit_poly(const double *values,
                          size_t len,
                          double *out_warmup,
                          double *out_power,
                          double *out_rms);

// The closed-form constant `c(T)` such that linear decay at the tuned
// scale guarantees `f(x_T) - f* <= c(T) DG / sqrt(T)`; defined for
// horizons of at least two.
//
// # Safety
// `out` must be a valid pointer.
enum SkStatus sk_linear_decay_constant(size_t horizon, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SCHEDKIT_H */
