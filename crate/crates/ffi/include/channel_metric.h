#ifndef CHANNEL_METRIC_H
#define CHANNEL_METRIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Numeric values match the CLI exit codes where they overlap.
 */
typedef enum CmStatus {
  CM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CM_STATUS_NULL_POINTER = 1,
  /**
   * Invalid input: bad spec, unknown family, malformed matrix.
   */
  CM_STATUS_CONFIG = 2,
  CM_STATUS_NUMERIC = 3,
  CM_STATUS_BUDGET = 4,
  CM_STATUS_DEGENERATE = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  CM_STATUS_PANIC = 6,
} CmStatus;

/**
 * A channel with a tangent, optionally tied to a catalog family point.
 */
typedef struct CmChannelPoint CmChannelPoint;

/**
 * Optimizer settings; start from [`cm_options_default`].
 */
typedef struct CmOptions {
  uint32_t restarts;
  uint32_t max_iter;
  double tol;
  uint64_t seed;
  /**
   * Worker cap; 0 means no cap.
   */
  uint32_t threads;
} CmOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library defaults.
 */
struct CmOptions cm_options_default(void);

/**
 * Point `θ` of a catalog family. `params_json` may be null.
 *
 * # Safety
 * `name` and a non-null `params_json` must be NUL-terminated strings, and
 * `out` must be valid for a pointer write.
 */
enum CmStatus cm_point_from_family(const char *name,
                                   const char *params_json,
                                   double theta,
                                   struct CmChannelPoint **out);

/**
 * Point from a channel-spec JSON document (catalog or explicit Choi form).
 * Explicit specs must carry a tangent.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for a pointer
 * write.
 */
enum CmStatus cm_point_from_spec_json(const char *json, struct CmChannelPoint **out);

/**
 * # Safety
 * `point` must be null or come from a `cm_point_*` constructor and not have
 * been freed.
 */
void cm_point_free(struct CmChannelPoint *point);

/**
 * # Safety
 * `point` must be a live handle; `d_in` and `d_out` valid for writes.
 */
enum CmStatus cm_point_dims(const struct CmChannelPoint *point, size_t *d_in, size_t *d_out);

/**
 * Smallest monotone metric. `options` may be null.
 *
 * # Safety
 * `point` must be a live handle, `options` null or valid, `value` valid
 * for a write.
 */
enum CmStatus cm_g_min(const struct CmChannelPoint *point,
                       const struct CmOptions *options,
                       double *value);

/**
 * Output RLD quantity. `options` may be null.
 *
 * # Safety
 * As [`cm_g_min`].
 */
enum CmStatus cm_g_r_output(const struct CmChannelPoint *point,
                            const struct CmOptions *options,
                            double *value);

/**
 * Upper bound on the largest monotone metric.
 *
 * # Safety
 * `point` must be a live handle and `value` valid for a write.
 */
enum CmStatus cm_g_max_upper(const struct CmChannelPoint *point, double *value);

/**
 * Largest ε keeping `Φ ± εΔ` completely positive. `capped` is set to 1
 * when the tangent vanishes and the radius is the cap, else 0; it may be
 * null.
 *
 * # Safety
 * `point` must be a live handle, `radius` valid for a write, `capped` null
 * or valid.
 */
enum CmStatus cm_cp_ball_radius(const struct CmChannelPoint *point,
                                double *radius,
                                uint8_t *capped);

/**
 * SLD Fisher information of `(ρ, δ)`, both row-major `dim × dim` with
 * interleaved real and imaginary parts.
 *
 * # Safety
 * `rho` and `delta` must each point to `2·dim²` doubles; `value` must be
 * valid for a write.
 */
enum CmStatus cm_sld_fisher(const double *rho, const double *delta, size_t dim, double *value);

/**
 * RLD Fisher information, same layout as [`cm_sld_fisher`].
 *
 * # Safety
 * As [`cm_sld_fisher`].
 */
enum CmStatus cm_rld_fisher(const double *rho, const double *delta, size_t dim, double *value);

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cm_last_error_message(void);

const char *cm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHANNEL_METRIC_H */
