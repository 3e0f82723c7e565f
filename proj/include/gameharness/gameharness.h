#ifndef GAMEHARNESS_H
#define GAMEHARNESS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GH_API __declspec(dllexport)
#else
#define GH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes for the command-line tool. */
typedef enum gh_status {
  GH_OK = 0,
  GH_ERR_INTERNAL = 1,
  GH_ERR_USAGE = 2,
  GH_ERR_CONFIG = 3,   /* invalid configuration, unknown game, missing file */
  GH_ERR_BACKEND = 4,  /* model backend failure, including missing credentials */
  GH_ERR_GAME = 5,     /* illegal action, terminal state, unparsable reply */
  GH_ERR_STATS = 6     /* too few pairs, zero variance */
} gh_status;

typedef struct gh_env gh_env;
typedef struct gh_state gh_state;
typedef struct gh_backend gh_backend;

/* Strings returned through `char**` are owned by the caller; release them
 * with gh_free. */
GH_API void gh_free(char* s);

/* Last error on the calling thread as one JSON line:
 * {"status":3,"error":"InvalidConfig","message":"..."}; "" after success.
 * Backend errors also carry "kind" and, for HTTP failures, "http_status". */
GH_API const char* gh_last_error(void);

GH_API const char* gh_version(void);

/* ---- environments ---- */

/* `config_json` may be NULL for defaults. */
GH_API gh_status gh_env_create(const char* game, const char* config_json, gh_env** out);
GH_API void gh_env_destroy(gh_env* env);

GH_API gh_status gh_env_reset(const gh_env* env, uint64_t seed, gh_state** out);
/* JSON array of move tokens. */
GH_API gh_status gh_env_legal_actions(const gh_env* env, const gh_state* state, char** out_json);
/* `action` is a move token as returned by gh_env_legal_actions. `next`,
 * `reward` and `terminal` may each be NULL. */
GH_API gh_status gh_env_step(const gh_env* env, const gh_state* state, const char* action, gh_state** next,
                             double* reward, int* terminal);
GH_API gh_status gh_state_score(const gh_state* state, double* reported);

GH_API gh_status gh_state_to_json(const gh_state* state, char** out_json);
GH_API gh_status gh_state_from_json(const char* json, gh_state** out);
GH_API void gh_state_destroy(gh_state* state);

/* Text observation: mode is "raw_text" or "structured_text". */
GH_API gh_status gh_state_render_text(const gh_state* state, const char* mode, char** out);
/* Writes the annotated PNG; `style_json` may be NULL for the bundled style. */
GH_API gh_status gh_state_render_png(const gh_state* state, const char* style_json, const char* path);

/* ---- backends ---- */

/* `spec` is the short form ("scripted:demo", "random_legal", "oracle_2048",
 * "oracle_sokoban", "http:<model>@<base-url>") or a JSON object. */
GH_API gh_status gh_backend_create(const char* spec, uint64_t seed, gh_backend** out);
GH_API void gh_backend_destroy(gh_backend* backend);
/* {"healthy":bool,"kind":...,"model":...,"detail":...} */
GH_API gh_status gh_backend_probe(gh_backend* backend, char** out_json);

/* ---- episodes and runs ---- */

/* Plays one episode. Request keys: game, backend, seed, turn_budget,
 * condition, template, env, fallback, max_parse_retries, enriched_perception.
 * Returns the episode record as JSON. */
GH_API gh_status gh_play(const char* request_json, char** out_record_json);

/* Run configuration JSON; see README. Return a run summary as JSON. */
GH_API gh_status gh_run_eval(const char* config_json, char** out_summary_json);
GH_API gh_status gh_run_optimize(const char* config_json, char** out_summary_json);
/* Recomputes reports/ of an existing run directory. */
GH_API gh_status gh_run_stats(const char* run_dir, char** out_summary_json);
/* Validates a run configuration and returns its normalized snapshot. */
GH_API gh_status gh_config_normalize(const char* config_json, char** out_json);

/* Random-play baseline for one game; `config_json` may be NULL. */
GH_API gh_status gh_random_baseline(const char* game, const char* config_json, int runs, uint64_t seed,
                                    size_t workers, char** out_json);

/* ---- statistics ---- */

GH_API gh_status gh_paired_t_test(const double* with_scores, const double* without_scores, size_t n,
                                  double* mean_diff, double* t, double* p);
GH_API gh_status gh_glass_delta(double model_mean, double baseline_mean, double baseline_std, double* out);

#ifdef __cplusplus
}
#endif

#endif
