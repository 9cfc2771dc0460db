/* C interface to the ratewatch sequential monitor. */

#ifndef RATEWATCH_H
#define RATEWATCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Arm identifier accepted by [`rw_monitor_ingest`].
 */
#define RW_ARM_A 0

/**
 * Arm identifier accepted by [`rw_monitor_ingest`].
 */
#define RW_ARM_B 1

/**
 * Result code of every FFI call.
 */
typedef enum RwStatus {
  /**
   * The call succeeded.
   */
  RwStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  RwStatus_NullPointer = 1,
  /**
   * An argument was outside its domain (bad α, φ, arm id or timestamp).
   */
  RwStatus_InvalidArgument = 2,
  /**
   * The event's timestamp precedes the monitor clock.
   */
  RwStatus_OutOfOrder = 3,
  /**
   * The requested confidence set came back empty (cannot happen for valid
   * α; reported rather than asserted).
   */
  RwStatus_EmptySet = 4,
  /**
   * An unexpected internal failure; the handle is still valid.
   */
  RwStatus_InternalError = 5,
} RwStatus;

/**
 * Opaque monitor handle.
 */
typedef struct RwMonitor RwMonitor;

/**
 * Flat report snapshot, the C view of a monitor report.
 */
typedef struct RwReport {
  /**
   * Query time.
   */
  double t;
  /**
   * Events seen on arm A.
   */
  uint64_t n_a;
  /**
   * Events seen on arm B.
   */
  uint64_t n_b;
  /**
   * Confidence interval for the cumulative rate of arm A.
   */
  double lo_a;
  double hi_a;
  /**
   * Confidence interval for the cumulative rate of arm B.
   */
  double lo_b;
  double hi_b;
  /**
   * Confidence interval for the difference (B minus A); may be negative.
   */
  double lo_diff;
  double hi_diff;
  /**
   * Natural log of the equality e-process.
   */
  double log_e;
  /**
   * Sequential p-value in (0, 1].
   */
  double p;
  /**
   * True once the e-process has ever reached 1/α.
   */
  bool rejected;
} RwReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Allocate a monitor with mixture precision `phi` and error level `alpha`.
 * Returns null when the parameters are out of domain. Free with
 * [`rw_monitor_free`].
 */
struct RwMonitor *rw_monitor_new(double phi, double alpha);

/**
 * Release a monitor created by [`rw_monitor_new`]. Passing null is a no-op.
 *
 * # Safety
 * `monitor` must be null or a pointer obtained from [`rw_monitor_new`] that
 * has not already been freed.
 */
void rw_monitor_free(struct RwMonitor *monitor);

/**
 * Feed one event. `arm` is [`RW_ARM_A`] or [`RW_ARM_B`]; timestamps must be
 * nondecreasing across calls (ties allowed).
 *
 * # Safety
 * `monitor` must be a live handle from [`rw_monitor_new`], not freed, and
 * not used concurrently from other threads.
 */
enum RwStatus rw_monitor_ingest(struct RwMonitor *monitor, int32_t arm, double ts);

/**
 * Write the anytime-valid snapshot at time `t` (which must not precede the
 * last ingested event) into `out`.
 *
 * # Safety
 * `monitor` must be a live handle and `out` a valid, writable report struct.
 */
enum RwStatus rw_monitor_report(const struct RwMonitor *monitor, double t, struct RwReport *out);

/**
 * [`rw_monitor_report`] at the default clock, the last event time.
 *
 * # Safety
 * Same contract as [`rw_monitor_report`].
 */
enum RwStatus rw_monitor_report_now(const struct RwMonitor *monitor, struct RwReport *out);

/**
 * Natural log of the equality e-process for the given counts, written to
 * `out`.
 *
 * # Safety
 * `out` must be a valid, writable double.
 */
enum RwStatus rw_log_e_process(uint64_t n_a, uint64_t n_b, double phi, double *out);

/**
 * Sequential p-value `min(1, 1/E)` for the given counts, written to `out`.
 *
 * # Safety
 * `out` must be a valid, writable double.
 */
enum RwStatus rw_sequential_p(uint64_t n_a, uint64_t n_b, double phi, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RATEWATCH_H */
