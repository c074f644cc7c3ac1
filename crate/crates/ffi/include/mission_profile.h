#ifndef MISSION_PROFILE_H
#define MISSION_PROFILE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; the nonzero library codes match the `mprof` exit codes.
typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_CONFIG = 2,
  MP_STATUS_INPUT = 3,
  MP_STATUS_NUMERICAL = 4,
  MP_STATUS_INVARIANT = 5,
  MP_STATUS_NULL_POINTER = 6,
  MP_STATUS_PANIC = 7,
  MP_STATUS_BUFFER_TOO_SMALL = 8,
} MpStatus;

// A B-spline basis.
typedef struct MpBasis MpBasis;

// An outlyingness report.
typedef struct MpReport MpReport;

// A sample of multivariate functional data.
typedef struct MpSample MpSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call into this library on the same thread.
const char *mp_last_error_message(void);

// Library version, a static string.
const char *mp_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void mp_string_free(char *s);

// Clamped B-spline basis on `[0, domain_end]`.
//
// # Safety
// `out` must be valid for a write.
enum MpStatus mp_basis_new(double domain_end,
                           size_t n_basis,
                           size_t order,
                           size_t penalty_order,
                           struct MpBasis **out);

// # Safety
// `basis` must come from [`mp_basis_new`] and not be freed twice.
void mp_basis_free(struct MpBasis *basis);

// Number of basis functions, 0 for a null handle.
//
// # Safety
// `basis` must be null or a live handle.
size_t mp_basis_n_basis(const struct MpBasis *basis);

// Writes the `n_basis` basis values at `t`.
//
// # Safety
// `out` must hold `out_len` doubles.
enum MpStatus mp_basis_eval(const struct MpBasis *basis, double t, double *out, size_t out_len);

// Penalized least-squares coefficients of one series.
//
// # Safety
// `times` and `values` must hold `n` doubles; `coefficients` must hold
// `coefficients_len` doubles.
enum MpStatus mp_fit_coordinate(const struct MpBasis *basis,
                                const double *times,
                                const double *values,
                                size_t n,
                                double lambda,
                                double *coefficients,
                                size_t coefficients_len);

// Parses a sample from its JSON exchange form.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid for a write.
enum MpStatus mp_sample_from_json(const char *json, struct MpSample **out);

// Serializes a sample; free the result with [`mp_string_free`].
//
// # Safety
// `out` must be valid for a write.
enum MpStatus mp_sample_to_json(const struct MpSample *sample, char **out);

// # Safety
// `sample` must come from this library and not be freed twice.
void mp_sample_free(struct MpSample *sample);

// Number of devices, 0 for a null handle.
//
// # Safety
// `sample` must be null or a live handle.
size_t mp_sample_len(const struct MpSample *sample);

// Number of coordinates, 0 for a null handle.
//
// # Safety
// `sample` must be null or a live handle.
size_t mp_sample_p(const struct MpSample *sample);

// Writes the `p` coordinates of device `device` at time `t`.
//
// # Safety
// `out` must hold `out_len` doubles.
enum MpStatus mp_sample_eval(const struct MpSample *sample,
                             size_t device,
                             double t,
                             double *out,
                             size_t out_len);

// Inner product of devices `i` and `j`.
//
// # Safety
// `out` must be valid for a write.
enum MpStatus mp_sample_inner_product(const struct MpSample *sample,
                                      size_t i,
                                      size_t j,
                                      double *out);

// Outlyingness report on a uniform grid of `grid_size` points.
// `directions == 0` selects the default direction count.
//
// # Safety
// `out` must be valid for a write.
enum MpStatus mp_analyze(const struct MpSample *sample,
                         size_t grid_size,
                         double gamma,
                         size_t directions,
                         uint64_t seed,
                         struct MpReport **out);

// # Safety
// `report` must come from [`mp_analyze`] and not be freed twice.
void mp_report_free(struct MpReport *report);

// Number of devices in the report, 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t mp_report_len(const struct MpReport *report);

// Functional adjusted outlyingness per device.
//
// # Safety
// `out` must hold `out_len` doubles.
enum MpStatus mp_report_fao(const struct MpReport *report, double *out, size_t out_len);

// Depth per device.
//
// # Safety
// `out` must hold `out_len` doubles.
enum MpStatus mp_report_depth(const struct MpReport *report, double *out, size_t out_len);

// Outlier flags per device, 1 for flagged.
//
// # Safety
// `out` must hold `out_len` bytes.
enum MpStatus mp_report_flags(const struct MpReport *report, uint8_t *out, size_t out_len);

// Device indices of the central set, ascending. `count` receives the set
// size even when the buffer is too small.
//
// # Safety
// `out` must hold `out_len` values; `count` must be valid for a write.
enum MpStatus mp_report_central_set(const struct MpReport *report,
                                    size_t *out,
                                    size_t out_len,
                                    size_t *count);

// Serializes a report; free the result with [`mp_string_free`].
//
// # Safety
// `out` must be valid for a write.
enum MpStatus mp_report_to_json(const struct MpReport *report, char **out);

// Medcouple of `n` values.
//
// # Safety
// `values` must hold `n` doubles; `out` must be valid for a write.
enum MpStatus mp_medcouple(const double *values, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MISSION_PROFILE_H */
