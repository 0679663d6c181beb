#ifndef DYNPERC_DYNPERC_H
#define DYNPERC_DYNPERC_H

/* C interface to the dynperc library. Every function returns a dp_status;
 * on failure dp_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * dp_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DP_API __declspec(dllexport)
#else
#define DP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dp_status {
  DP_OK = 0,
  DP_ERR_INVALID_ARGUMENT = 1,
  DP_ERR_LOOP_EDGE = 2,
  DP_ERR_DUPLICATE_EDGE = 3,
  DP_ERR_DISCONNECTED = 4,
  DP_ERR_OUT_OF_RANGE = 5,
  DP_ERR_TOO_LARGE = 6,
  DP_ERR_NOT_IRREDUCIBLE = 7,
  DP_ERR_NOT_REVERSIBLE = 8,
  DP_ERR_SINGULAR_SYSTEM = 9,
  DP_ERR_EMPTY_SET = 10,
  DP_ERR_FULL_SET = 11,
  DP_ERR_SAME_STATE = 12,
  DP_ERR_ZERO_MASS = 13,
  DP_ERR_BAD_SUBSET = 14,
  DP_ERR_PROFILE_UNAVAILABLE = 15,
  DP_ERR_DEGENERATE_P = 16,
  DP_ERR_NOT_TRANSITIVE = 17,
  DP_ERR_PRECONDITION_FAILED = 18,
  DP_ERR_CONFIG = 19,
  DP_ERR_IO = 20,
  DP_ERR_INTERNAL = 99
} dp_status;

typedef struct dp_graph dp_graph;
typedef struct dp_config dp_config;
typedef struct dp_result dp_result;

DP_API const char* dp_version(void);
/* Message of the last failure on this thread; empty after a success. */
DP_API const char* dp_last_error(void);
DP_API const char* dp_status_name(dp_status status);
DP_API void dp_string_free(char* s);

/* Graphs. builder is one of cycle, path, star, complete, hypercube, torus. */
DP_API dp_status dp_graph_build(const char* builder, size_t n, size_t d, dp_graph** out);
DP_API dp_status dp_graph_read_file(const char* path, dp_graph** out);
DP_API dp_status dp_graph_counts(const dp_graph* g, size_t* vertices, size_t* edges);
DP_API dp_status dp_graph_descriptor(const dp_graph* g, char** out);
DP_API void dp_graph_free(dp_graph* g);

/* Exact quantities of the full process (walk plus environment). */
DP_API dp_status dp_full_relaxation_time(const dp_graph* g, double mu, double p, double* out);
DP_API dp_status dp_full_hitting_time(const dp_graph* g, double mu, double p, size_t x, uint64_t eta, size_t y,
                                      double* out);
/* Mean spacing of regeneration times over n regenerations from vertex 0. */
DP_API dp_status dp_regeneration_mean_spacing(const dp_graph* g, double mu, double p, size_t n, uint64_t seed,
                                              double* mean, double* std_error);

/* Experiments. The catalog is a JSON array of {name, description, anchor}. */
DP_API dp_status dp_experiment_list(char** json_out);

DP_API dp_status dp_config_new(const char* experiment, dp_config** out);
/* format is "toml", "json" or "auto" (NULL means "auto"). */
DP_API dp_status dp_config_parse(const char* text, const char* format, dp_config** out);
DP_API dp_status dp_config_load(const char* path, dp_config** out);
/* "key=value"; dotted keys reach nested tables, commas build lists. */
DP_API dp_status dp_config_set(dp_config* cfg, const char* assignment);
DP_API dp_status dp_config_validate(const dp_config* cfg);
DP_API dp_status dp_config_to_json(const dp_config* cfg, char** out);
DP_API void dp_config_free(dp_config* cfg);

/* Runs the configured experiment. With write_artifacts != 0 the report,
 * manifest, summary and resolved config are written to the output
 * directory. */
DP_API dp_status dp_experiment_run(const dp_config* cfg, int write_artifacts, dp_result** out);
/* 1 when every exact (non-statistical) verdict passed. */
DP_API int dp_result_exact_pass(const dp_result* r);
DP_API int dp_result_all_pass(const dp_result* r);
DP_API double dp_result_empirical_constant(const dp_result* r);
DP_API dp_status dp_result_report_json(const dp_result* r, char** out);
DP_API dp_status dp_result_report_csv(const dp_result* r, char** out);
DP_API dp_status dp_result_summary(const dp_result* r, char** out);
DP_API void dp_result_free(dp_result* r);

#ifdef __cplusplus
}
#endif

#endif
