#ifndef CQREL_H
#define CQREL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CQ_ABI_VERSION 1

typedef enum CqStatus {
  CQ_STATUS_OK = 0,
  CQ_STATUS_NULL_POINTER = 1,
  CQ_STATUS_INVALID_UTF8 = 2,
  CQ_STATUS_INVALID_ARGUMENT = 3,
  CQ_STATUS_MALFORMED = 4,
  CQ_STATUS_IO = 5,
  CQ_STATUS_NUMERICAL = 6,
  CQ_STATUS_BUFFER_TOO_SMALL = 7,
  CQ_STATUS_PANIC = 8,
} CqStatus;

typedef enum CqInequality {
  CQ_INEQUALITY_THEOREM = 0,
  CQ_INEQUALITY_EQ3 = 1,
  CQ_INEQUALITY_TWO_STATE = 2,
  CQ_INEQUALITY_JENSEN = 3,
  CQ_INEQUALITY_JENSEN_TRACE = 4,
  CQ_INEQUALITY_TRACE_PAIR = 5,
} CqInequality;

// Opaque channel handle.
typedef struct CqChannel CqChannel;

typedef struct CqRatePoint {
  double rate;
  double s_star;
  double value;
} CqRatePoint;

typedef struct CqGapReport {
  double lhs;
  double rhs;
  // `lhs - rhs`; nonnegative when the inequality holds.
  double gap;
  double scale;
  double imag_residue;
  // NaN when not computed.
  double formulation_residual;
  bool support_restricted;
  // `gap >= -tau * scale` at the default tolerance.
  bool holds;
} CqGapReport;

typedef struct CqTrialSummary {
  size_t n;
  size_t m;
  double rate_nats;
  size_t trials;
  double mean_average_error;
  double mean_max_error;
  // Infinity when no trial made an error.
  double exponent_proxy;
} CqTrialSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t cq_abi_version(void);

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`) and returns the full length including
// the terminator. Pass a null `buf` to query the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t cq_last_error_message(char *buf, size_t len);

// Parses a channel JSON document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum CqStatus cq_channel_from_json(const char *json, struct CqChannel **out);

// Loads a channel JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum CqStatus cq_channel_load(const char *path, struct CqChannel **out);

// # Safety
// `ch` must be null or a handle from this library not yet freed.
void cq_channel_free(struct CqChannel *ch);

// # Safety
// `ch` must be a live handle; `out` must be writable.
enum CqStatus cq_channel_alphabet_size(const struct CqChannel *ch, size_t *out);

// # Safety
// `ch` must be a live handle; `out` must be writable.
enum CqStatus cq_channel_dim(const struct CqChannel *ch, size_t *out);

// `E_q(prior, s)` in nats.
//
// # Safety
// `ch` must be a live handle; `prior` null or valid for `prior_len`
// values; `out` writable.
enum CqStatus cq_eq_aux(const struct CqChannel *ch,
                        const double *prior,
                        size_t prior_len,
                        double s,
                        double *out);

// `dE_q/ds` by extrapolated finite differences.
//
// # Safety
// As [`cq_eq_aux`].
enum CqStatus cq_eq_derivative(const struct CqChannel *ch,
                               const double *prior,
                               size_t prior_len,
                               double s,
                               double *out);

// Holevo quantity in nats.
//
// # Safety
// As [`cq_eq_aux`].
enum CqStatus cq_holevo_quantity(const struct CqChannel *ch,
                                 const double *prior,
                                 size_t prior_len,
                                 double *out);

// Maximized Holevo quantity. The maximizing prior is copied to
// `prior_out` when it is not null.
//
// # Safety
// `ch` live; `out` writable; `prior_out` null or valid for `prior_out_len`.
enum CqStatus cq_capacity_estimate(const struct CqChannel *ch,
                                   uint64_t seed,
                                   double *out,
                                   double *prior_out,
                                   size_t prior_out_len);

// Random-coding exponent at `rate` (nats). The maximizing prior is copied
// to `prior_out` when it is not null.
//
// # Safety
// As [`cq_capacity_estimate`].
enum CqStatus cq_random_coding_exponent(const struct CqChannel *ch,
                                        double rate,
                                        uint64_t seed,
                                        struct CqRatePoint *out,
                                        double *prior_out,
                                        size_t prior_out_len);

// Evaluates one trace inequality on the channel's states.
//
// # Safety
// As [`cq_eq_aux`].
enum CqStatus cq_inequality_gap(const struct CqChannel *ch,
                                enum CqInequality kind,
                                const double *prior,
                                size_t prior_len,
                                double s,
                                struct CqGapReport *out);

// Shorthand for [`cq_inequality_gap`] with [`CqInequality::Theorem`].
//
// # Safety
// As [`cq_eq_aux`].
enum CqStatus cq_theorem_gap(const struct CqChannel *ch,
                             const double *prior,
                             size_t prior_len,
                             double s,
                             struct CqGapReport *out);

// Random-coding trials with square-root-measurement decoding.
//
// # Safety
// As [`cq_eq_aux`].
enum CqStatus cq_simulate(const struct CqChannel *ch,
                          const double *prior,
                          size_t prior_len,
                          size_t n,
                          size_t m,
                          size_t trials,
                          uint64_t seed,
                          struct CqTrialSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CQREL_H */
