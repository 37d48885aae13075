#ifndef CRANE_SIM_H
#define CRANE_SIM_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CraneStatus {
  CRANE_STATUS_OK = 0,
  CRANE_STATUS_NULL_POINTER = 1,
  CRANE_STATUS_INVALID_UTF8 = 2,
  CRANE_STATUS_CONFIG = 3,
  CRANE_STATUS_INVALID_ARGUMENT = 4,
  CRANE_STATUS_NUMERICAL_BLOWUP = 5,
  CRANE_STATUS_IO = 6,
  CRANE_STATUS_PANIC = 7,
} CraneStatus;

/**
 * Parsed experiment configuration.
 */
typedef struct CraneConfig CraneConfig;

/**
 * Result of one closed-loop run.
 */
typedef struct CraneEpisode CraneEpisode;

/**
 * Episode metrics. `response_time` is meaningful only when `settled` is true.
 */
typedef struct CraneMetrics {
  double mse;
  double max_error;
  double response_time;
  bool settled;
  double chattering_energy;
  double control_effort;
} CraneMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *crane_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *crane_last_error(void);

/**
 * The shipped default profile.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum CraneStatus crane_config_default(struct CraneConfig **out);

/**
 * Parses a configuration from TOML text.
 *
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum CraneStatus crane_config_parse(const char *text, struct CraneConfig **out);

/**
 * Loads a configuration file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum CraneStatus crane_config_load(const char *path, struct CraneConfig **out);

/**
 * Normalized TOML text of a configuration; free it with [`crane_string_free`].
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum CraneStatus crane_config_to_toml(const struct CraneConfig *config, char **out);

/**
 * # Safety
 * `config` must come from this library and not be used afterwards. Null is a no-op.
 */
void crane_config_free(struct CraneConfig *config);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is a no-op.
 */
void crane_string_free(char *s);

/**
 * Runs one episode. `controller` is one of `hsmc`, `hsmc-sign`, `pid`,
 * `lqr`; `scenario` is a preset name such as `none`, `high` or `switch-low`.
 *
 * # Safety
 * Pointers must be valid; strings nul-terminated; `out` writable.
 */
enum CraneStatus crane_run_episode(const struct CraneConfig *config,
                                   const char *controller,
                                   const char *scenario,
                                   uint64_t seed,
                                   struct CraneEpisode **out);

/**
 * # Safety
 * `episode` must come from this library and not be used afterwards. Null is a no-op.
 */
void crane_episode_free(struct CraneEpisode *episode);

/**
 * Number of trace rows, or 0 for a null handle.
 *
 * # Safety
 * `episode` must be null or come from this library.
 */
size_t crane_episode_len(const struct CraneEpisode *episode);

/**
 * # Safety
 * `episode` must come from this library; `out` must be writable.
 */
enum CraneStatus crane_episode_metrics(const struct CraneEpisode *episode,
                                       struct CraneMetrics *out);

/**
 * Copies one trace column into `buf`. `written` receives the number of rows
 * copied; pass a null `buf` to query the row count. Fails if `cap` is smaller
 * than the row count.
 *
 * # Safety
 * `buf` must hold `cap` doubles when non-null; other pointers must be valid.
 */
enum CraneStatus crane_episode_column(const struct CraneEpisode *episode,
                                      const char *name,
                                      double *buf,
                                      size_t cap,
                                      size_t *written);

/**
 * Writes the full trace as CSV.
 *
 * # Safety
 * `episode` must come from this library; `path` must be nul-terminated.
 */
enum CraneStatus crane_episode_write_csv(const struct CraneEpisode *episode, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRANE_SIM_H */
