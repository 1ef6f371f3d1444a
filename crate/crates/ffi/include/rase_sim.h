#ifndef RASE_SIM_H
#define RASE_SIM_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RaseStatus {
  RASE_STATUS_OK = 0,
  RASE_STATUS_NULL_ARGUMENT = 1,
  RASE_STATUS_INVALID_UTF8 = 2,
  RASE_STATUS_PARSE_ERROR = 3,
  RASE_STATUS_INVALID_INPUT = 4,
  RASE_STATUS_UNKNOWN_ID = 5,
  RASE_STATUS_INSUFFICIENT_CAPACITY = 6,
  RASE_STATUS_NO_PATH = 7,
  RASE_STATUS_EXPERIMENT_FAILED = 8,
  RASE_STATUS_PANIC = 9,
} RaseStatus;

/**
 * Substrate network with mutable residual capacities.
 */
typedef struct RaseNetwork RaseNetwork;

/**
 * Result of a completed experiment.
 */
typedef struct RaseReport RaseReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *rase_last_error_message(void);

/**
 * Releases a string produced by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void rase_string_free(char *s);

/**
 * Builds a network from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RaseStatus rase_network_from_json(const char *json, struct RaseNetwork **out);

/**
 * Releases a network. Null is ignored.
 *
 * # Safety
 * `net` must come from [`rase_network_from_json`] and not have been freed.
 */
void rase_network_free(struct RaseNetwork *net);

/**
 * Reserves `demand` cores on `host`. Nothing changes on failure.
 *
 * # Safety
 * `net` must be a live handle and `host` a NUL-terminated string.
 */
enum RaseStatus rase_network_allocate_cpu(struct RaseNetwork *net, const char *host, double demand);

/**
 * Returns `amount` cores to `host`.
 *
 * # Safety
 * `net` must be a live handle and `host` a NUL-terminated string.
 */
enum RaseStatus rase_network_release_cpu(struct RaseNetwork *net, const char *host, double amount);

/**
 * Writes the unreserved cores of `host` to `out`.
 *
 * # Safety
 * `net` must be a live handle, `host` a NUL-terminated string and `out` writable.
 */
enum RaseStatus rase_network_residual_cpu(const struct RaseNetwork *net,
                                          const char *host,
                                          double *out);

/**
 * Writes the unreserved bandwidth (Mbps) of `link` to `out`.
 *
 * # Safety
 * `net` must be a live handle, `link` a NUL-terminated string and `out` writable.
 */
enum RaseStatus rase_network_residual_bandwidth(const struct RaseNetwork *net,
                                                const char *link,
                                                double *out);

/**
 * Writes the propagation delay (ms) of the least-delay path from `src` to
 * `dst` using only links with at least `min_bandwidth` Mbps left.
 *
 * # Safety
 * `net` must be a live handle, `src`/`dst` NUL-terminated strings and `out` writable.
 */
enum RaseStatus rase_shortest_path_cost(const struct RaseNetwork *net,
                                        const char *src,
                                        const char *dst,
                                        double min_bandwidth,
                                        double *out);

/**
 * Encodes an SFC header from an id and `len` VNF names.
 *
 * # Safety
 * `sfc_id` and each of the `len` entries of `chain` must be NUL-terminated
 * strings; `out` must be writable.
 */
enum RaseStatus rase_header_encode(const char *sfc_id,
                                   const char *const *chain,
                                   size_t len,
                                   char **out);

/**
 * Decodes an SFC header into its id and its VNF names joined by commas.
 *
 * # Safety
 * `header` must be a NUL-terminated string; `out_sfc_id` and `out_chain`
 * must be writable.
 */
enum RaseStatus rase_header_decode(const char *header, char **out_sfc_id, char **out_chain);

/**
 * Runs an experiment described by `config_json`. Relative file references
 * resolve against `base_dir`, or the working directory when it is null.
 * No report files are written.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string, `base_dir` null or
 * NUL-terminated, and `out` writable.
 */
enum RaseStatus rase_experiment_run(const char *config_json,
                                    const char *base_dir,
                                    struct RaseReport **out);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must come from [`rase_experiment_run`] and not have been freed.
 */
void rase_report_free(struct RaseReport *report);

/**
 * Writes the fraction of accepted requests to `out`.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum RaseStatus rase_report_acceptance_ratio(const struct RaseReport *report, double *out);

/**
 * Writes the mean latency (ms) over accepted chains to `out`, or NaN when
 * nothing was accepted.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum RaseStatus rase_report_mean_latency(const struct RaseReport *report, double *out);

/**
 * Serializes the report as JSON.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum RaseStatus rase_report_to_json(const struct RaseReport *report, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RASE_SIM_H */
