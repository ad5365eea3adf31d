#ifndef SNLS_SNLS_H
#define SNLS_SNLS_H

/* C interface to the damped stochastic NLS Galerkin simulator.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns an snls_status; the
 * message of the most recent failure on the calling thread is available
 * through snls_last_error.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SNLS_BUILDING_LIBRARY)
#    define SNLS_API __declspec(dllexport)
#  else
#    define SNLS_API __declspec(dllimport)
#  endif
#else
#  define SNLS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define SNLS_ABI_VERSION 1u

typedef enum snls_status {
  SNLS_OK = 0,
  SNLS_ERR_ARGUMENT = 1, /* null handle, bad buffer, out of range index */
  SNLS_ERR_CONFIG = 2,   /* invalid configuration or violated precondition */
  SNLS_ERR_SHAPE = 3,    /* field length does not match the basis */
  SNLS_ERR_BLOWUP = 4,   /* V-norm guard tripped */
  SNLS_ERR_IO = 5,
  SNLS_ERR_CHECKS_FAILED = 6, /* verify mode found failing checks */
  SNLS_ERR_INTERNAL = 7
} snls_status;

typedef struct snls_config snls_config;
typedef struct snls_model snls_model;
typedef struct snls_trajectory snls_trajectory;

typedef struct snls_sample {
  double t;
  double mass;
  double energy;
  double v_norm_sq;
  double z;
  double l_alpha1_norm;
  double hs_norm_sq;
} snls_sample;

typedef void (*snls_log_fn)(const char* line, void* user);

SNLS_API uint32_t snls_abi_version(void);
SNLS_API const char* snls_version(void);
SNLS_API const char* snls_status_string(snls_status status);

/* Copies the last error message (NUL terminated, truncated to size) and
 * returns its full length. */
SNLS_API size_t snls_last_error(char* buffer, size_t size);

/* --- configuration */
SNLS_API snls_status snls_config_parse(const char* text, snls_config** out);
SNLS_API snls_status snls_config_load(const char* path, snls_config** out);
SNLS_API void snls_config_free(snls_config* cfg);
SNLS_API snls_status snls_config_set_seed(snls_config* cfg, uint64_t seed);
SNLS_API snls_status snls_config_set_paths(snls_config* cfg, uint64_t paths);
SNLS_API snls_status snls_config_get_seed(const snls_config* cfg, uint64_t* seed);
SNLS_API snls_status snls_config_get_paths(const snls_config* cfg, uint64_t* paths);
/* 16 hex digits plus NUL: size must be at least 17. */
SNLS_API snls_status snls_config_checksum(const snls_config* cfg, char* buffer, size_t size);
/* Constants of the noise operators and the damping conditions, as
 * "key = value" lines. *needed receives the full length (may be NULL). */
SNLS_API snls_status snls_config_report(const snls_config* cfg, char* buffer, size_t size,
                                        size_t* needed);

/* --- model and trajectories */
SNLS_API snls_status snls_model_create(const snls_config* cfg, snls_model** out);
SNLS_API void snls_model_free(snls_model* model);
SNLS_API size_t snls_model_mode_count(const snls_model* model);
SNLS_API int snls_model_level(const snls_model* model);

/* Simulates from the configured initial datum on Brownian path `path`. */
SNLS_API snls_status snls_simulate(const snls_model* model, uint64_t path, snls_trajectory** out);
/* Same from explicit coefficients, interleaved (re, im), 2 * n_modes doubles. */
SNLS_API snls_status snls_simulate_from(const snls_model* model, const double* re_im,
                                        size_t n_modes, uint64_t path, snls_trajectory** out);
SNLS_API void snls_trajectory_free(snls_trajectory* traj);
SNLS_API size_t snls_trajectory_length(const snls_trajectory* traj);
SNLS_API snls_status snls_trajectory_sample(const snls_trajectory* traj, size_t index,
                                            snls_sample* out);
SNLS_API snls_status snls_trajectory_final_state(const snls_trajectory* traj, double* re_im,
                                                 size_t n_modes);

/* --- harness: mode is "simulate", "ensemble", "invariant" or "verify".
 * Log lines go to `log` when non-NULL. */
SNLS_API snls_status snls_run(const char* mode, const snls_config* cfg, const char* out_dir,
                              snls_log_fn log, void* user);

#ifdef __cplusplus
}
#endif

#endif /* SNLS_SNLS_H */
