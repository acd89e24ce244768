#ifndef NSV_NSV_H
#define NSV_NSV_H

/* C interface of the Navier-Stokes-Vlasov simulator.
 *
 * Every function returns an nsv_status. On failure a thread-local message is
 * available through nsv_last_error() until the next call on the same thread.
 * Handles are opaque; each *_create / *_parse / *_load has a matching *_free
 * that accepts NULL. Strings returned through char** are owned by the caller
 * and released with nsv_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NSV_API __declspec(dllexport)
#elif defined(NSV_BUILDING_LIBRARY)
#define NSV_API __attribute__((visibility("default")))
#else
#define NSV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nsv_status {
  NSV_OK = 0,
  NSV_ERR_INVALID_ARGUMENT = 1,
  NSV_ERR_CONFIG = 2,
  NSV_ERR_IO = 3,
  NSV_ERR_FORMAT = 4,
  NSV_ERR_NOT_CONVERGED = 5,
  NSV_ERR_INTERNAL = 6
} nsv_status;

typedef enum nsv_log_level {
  NSV_LOG_TRACE = 0,
  NSV_LOG_DEBUG = 1,
  NSV_LOG_INFO = 2,
  NSV_LOG_WARN = 3,
  NSV_LOG_ERROR = 4,
  NSV_LOG_OFF = 6
} nsv_log_level;

typedef struct nsv_config nsv_config;
typedef struct nsv_sim nsv_sim;

/* Diagnostics of the current state, same quantities as diagnostics.csv. */
typedef struct nsv_diagnostics {
  double t;
  double fluid_energy;
  double particle_functional;
  double visc_dissipation;
  double drag_dissipation;
  double energy_residual;
  double mass;
  double mass_drift;
  double linf_f;
  double linf_bound;
  double m6;
  double momentum[2];
  int picard_iters;
  double contraction_last;
} nsv_diagnostics;

NSV_API const char* nsv_last_error(void);
NSV_API const char* nsv_version(void);
NSV_API void nsv_string_free(char* s);
NSV_API nsv_status nsv_set_log_level(nsv_log_level level);

/* Configuration */
NSV_API nsv_status nsv_config_parse(const char* text, nsv_config** out);
NSV_API nsv_status nsv_config_load(const char* path, nsv_config** out);
NSV_API nsv_status nsv_config_set(nsv_config* cfg, const char* key, const char* value);
NSV_API nsv_status nsv_config_render(const nsv_config* cfg, char** out);
NSV_API void nsv_config_free(nsv_config* cfg);

/* In-memory simulation */
NSV_API nsv_status nsv_sim_create(const nsv_config* cfg, nsv_sim** out);
NSV_API nsv_status nsv_sim_load_snapshot(const char* path, nsv_sim** out);
NSV_API nsv_status nsv_sim_advance(nsv_sim* sim, double t_end);
NSV_API nsv_status nsv_sim_save_snapshot(const nsv_sim* sim, const char* path);
NSV_API nsv_status nsv_sim_time(const nsv_sim* sim, double* t);
NSV_API nsv_status nsv_sim_diagnostics(const nsv_sim* sim, nsv_diagnostics* out);
/* Copies the velocity components (n_x * n_x each, row-major in x1). */
NSV_API nsv_status nsv_sim_velocity(const nsv_sim* sim, double* u1, double* u2, size_t count);
NSV_API void nsv_sim_free(nsv_sim* sim);

/* Whole-run drivers writing into the configured output directory.
 * output_dir may be NULL to keep the configured one. */
NSV_API nsv_status nsv_run(const nsv_config* cfg, const char* output_dir);
NSV_API nsv_status nsv_resume(const char* snapshot_path, double until, const char* output_dir);
/* Writes verify_report.json; *passed reports the invariant checks. */
NSV_API nsv_status nsv_verify(const nsv_config* cfg, const char* output_dir, int* passed);

#ifdef __cplusplus
}
#endif

#endif /* NSV_NSV_H */
