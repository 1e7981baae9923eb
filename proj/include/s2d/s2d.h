#ifndef S2D_S2D_H
#define S2D_S2D_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define S2D_API __declspec(dllexport)
#else
#define S2D_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum s2d_status {
  S2D_OK = 0,
  S2D_ERR_INVALID_SPEC = 1,
  S2D_ERR_DIMENSION = 2,
  S2D_ERR_NUMERIC = 3,
  S2D_ERR_PRECONDITION = 4,
  S2D_ERR_UNSUPPORTED = 5,
  S2D_ERR_CONTRACT = 6,
  S2D_ERR_GRID_REJECTED = 7,
  S2D_ERR_VALIDATION = 8,
  S2D_ERR_IO = 9,
  S2D_ERR_NULL_ARG = 10,
  S2D_ERR_INTERNAL = 11
} s2d_status;

/* Opaque experiment handle: a validated configuration plus its warnings. */
typedef struct s2d_experiment s2d_experiment;

typedef void (*s2d_log_fn)(const char* message, void* user);

S2D_API const char* s2d_version(void);
S2D_API const char* s2d_status_name(s2d_status status);
/* Message of the last failed call on this thread; empty when none. */
S2D_API const char* s2d_last_error(void);
/* Strings returned through char** outputs are owned by the caller. */
S2D_API void s2d_string_free(char* s);
/* Progress messages from long-running calls; NULL disables. */
S2D_API void s2d_set_log_callback(s2d_log_fn fn, void* user);

/* Loading only parses JSON. The config is validated on the first call that needs it
   (validate, config_json, warnings, train, cross_density). */
S2D_API s2d_status s2d_experiment_from_file(const char* path, s2d_experiment** out);
S2D_API s2d_status s2d_experiment_from_json(const char* json, s2d_experiment** out);
/* Overrides one field by dotted path ("agent.lr", "seeds", "cross_density.enabled") with a JSON value. */
S2D_API s2d_status s2d_experiment_set(s2d_experiment* exp, const char* path, const char* json_value);
S2D_API s2d_status s2d_experiment_validate(s2d_experiment* exp);
S2D_API s2d_status s2d_experiment_config_json(s2d_experiment* exp, char** out);
S2D_API s2d_status s2d_experiment_warnings(s2d_experiment* exp, char** out_json_array);
S2D_API void s2d_experiment_destroy(s2d_experiment* exp);

/* Train every seed and write artifacts; *out_manifest (optional) receives the manifest JSON.
   Returns the most severe per-seed failure, if any. */
S2D_API s2d_status s2d_experiment_train(s2d_experiment* exp, char** out_manifest);
S2D_API s2d_status s2d_experiment_cross_density(s2d_experiment* exp, char** out_manifest);

S2D_API s2d_status s2d_sharpness_from_files(const char* snapshot_path, const char* batch_path, double rho, double p,
                                            uint64_t eval_seed, double* out_sharpness, int* out_degenerate);
/* env_json may be NULL for the fixed-goal 4x4 gridworld. */
S2D_API s2d_status s2d_check_pbrs(const char* env_json, double gamma, double tol, char** out_certificate);
S2D_API s2d_status s2d_plot(const char* landscape_csv, const char* svg_path);
S2D_API s2d_status s2d_report(const char* const* run_dirs, size_t count, char** out_json, char** out_text);

#ifdef __cplusplus
}
#endif

#endif
