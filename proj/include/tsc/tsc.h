/* SPDX-License-Identifier: Apache-2.0 */
#ifndef TSC_TSC_H
#define TSC_TSC_H

#include <stddef.h>
#include <stdint.h>

#if defined(TSC_BUILDING_LIBRARY)
#define TSC_API __attribute__((visibility("default")))
#else
#define TSC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tsc_status {
  TSC_OK = 0,
  TSC_ERR_MALFORMED_DOCUMENT,
  TSC_ERR_INVALID_TOPOLOGY,
  TSC_ERR_DANGLING_REFERENCE,
  TSC_ERR_UNSUPPORTED_GEOMETRY,
  TSC_ERR_UNKNOWN_INTERSECTION,
  TSC_ERR_INVALID_PLAN,
  TSC_ERR_PHASE_NOT_AT_INTERSECTION,
  TSC_ERR_NOT_ACTION_BOUNDARY,
  TSC_ERR_UNKNOWN_ENTITY,
  TSC_ERR_EPISODE_FINISHED,
  TSC_ERR_INVALID_ACTION,
  TSC_ERR_SHAPE_MISMATCH,
  TSC_ERR_EMPTY_GROUP,
  TSC_ERR_MISSING_GRADIENT,
  TSC_ERR_BUFFER_NOT_FULL,
  TSC_ERR_INVALID_CYCLE,
  TSC_ERR_INVALID_CONFIG,
  TSC_ERR_CHECKPOINT_VERSION_MISMATCH,
  TSC_ERR_IO,
  TSC_ERR_INVALID_ARGUMENT,
  TSC_ERR_INTERNAL
} tsc_status;

typedef struct tsc_scenario tsc_scenario;
typedef struct tsc_env tsc_env;

TSC_API const char* tsc_status_name(tsc_status status);
/* Message of the last failed call on this thread; "" if none. */
TSC_API const char* tsc_last_error(void);
TSC_API void tsc_string_free(char* s);

/* ---- scenarios ---- */

TSC_API tsc_status tsc_scenario_parse(const char* json, tsc_scenario** out);
TSC_API tsc_status tsc_scenario_load(const char* path, tsc_scenario** out);
/* Canonical JSON; release with tsc_string_free. */
TSC_API tsc_status tsc_scenario_to_json(const tsc_scenario* scenario, char** out);
TSC_API void tsc_scenario_free(tsc_scenario* scenario);

typedef struct tsc_grid_options {
  int rows;
  int cols;
  int min_lanes;
  int max_lanes;
  double min_length_m;
  double max_length_m;
  double vehicles_per_hour;
  double demand_start_s;
  double demand_duration_s;
  double left_ratio;
  double right_ratio;
  int routes_per_entry;
  double jitter_fraction;
  double horizon_s;
  uint64_t seed;
} tsc_grid_options;

TSC_API void tsc_grid_options_default(tsc_grid_options* options);
TSC_API tsc_status tsc_generate_grid(const tsc_grid_options* options, char** json_out);

/* ---- environment ---- */

TSC_API tsc_status tsc_env_create(const tsc_scenario* scenario, uint64_t seed, tsc_env** out);
TSC_API void tsc_env_free(tsc_env* env);
TSC_API tsc_status tsc_env_reset(tsc_env* env, uint64_t seed);
TSC_API int tsc_env_num_agents(const tsc_env* env);
TSC_API tsc_status tsc_env_num_phases(const tsc_env* env, int agent, int* out);
TSC_API tsc_status tsc_env_num_movements(const tsc_env* env, int agent, int* out);
TSC_API tsc_status tsc_env_current_phase(const tsc_env* env, int agent, int* out);
/* Writes min(len, movements) lane-normalised counts. */
TSC_API tsc_status tsc_env_movement_counts(const tsc_env* env, int agent, double* counts, size_t len);
/* actions: one phase per agent. rewards (nullable) receives one value per agent. */
TSC_API tsc_status tsc_env_step(tsc_env* env, const int* actions, size_t n, double* rewards, int* done);

/* ---- training and evaluation ---- */

typedef struct tsc_metrics {
  double travel_time;
  double delay;
  double wait_time;
  double throughput;
  double travel_time_std;
  double delay_std;
  double wait_time_std;
  double throughput_std;
  int episodes;
  int identities_hold;
} tsc_metrics;

typedef struct tsc_train_summary {
  int frames;
  int gradient_steps;
  double final_td_loss;
  double final_phase_loss;
  double final_volume_loss;
} tsc_train_summary;

/* config_json: {"format": 1, "train": {...}}; NULL uses defaults.
   log_path and checkpoint_path may be NULL. summary may be NULL. */
TSC_API tsc_status tsc_train(const tsc_scenario* scenario, const char* config_json, const char* log_path,
                             const char* checkpoint_path, tsc_train_summary* summary);

typedef struct tsc_eval_options {
  const char* controller; /* fixed | sotl | maxpressure | unilight */
  const char* checkpoint; /* required for unilight */
  int comm;               /* unilight only: feed UniComm predictions */
  int episodes;
  uint64_t seed;
} tsc_eval_options;

TSC_API void tsc_eval_options_default(tsc_eval_options* options);
/* csv_out (nullable) receives the metrics CSV; release with tsc_string_free. */
TSC_API tsc_status tsc_evaluate(const tsc_scenario* scenario, const tsc_eval_options* options, tsc_metrics* metrics,
                                char** csv_out);
/* Per-tick event dump of one episode at options->seed: "tick,vehicle,event,lane". */
TSC_API tsc_status tsc_trace(const tsc_scenario* scenario, const tsc_eval_options* options, char** out);

#ifdef __cplusplus
}
#endif

#endif
