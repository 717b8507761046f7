/* C interface to the riccatitron library.
 *
 * Every fallible call returns an rt_status. On failure the message is
 * available from rt_last_error() on the same thread until the next call.
 * Strings returned through char** out-parameters are owned by the caller
 * and released with rt_string_free. Matrices are dense row-major.
 */
#ifndef RICCATITRON_H_
#define RICCATITRON_H_

#include <stddef.h>

#if defined(RT_BUILDING_LIBRARY)
#define RT_API __attribute__((visibility("default")))
#else
#define RT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rt_status {
  RT_OK = 0,
  RT_ERR_INTERNAL = 1,
  RT_ERR_CONFIG = 2,
  RT_ERR_NUMERIC = 3,
  RT_ERR_PROTOCOL = 4
} rt_status;

typedef struct rt_system rt_system;
typedef struct rt_controller rt_controller;

RT_API const char* rt_version(void);
RT_API const char* rt_last_error(void);
RT_API void rt_string_free(char* s);

/* A is dx*dx, B is dx*du, Rx is dx*dx, Ru is du*du. */
RT_API rt_status rt_system_create(int dx, int du, const double* A, const double* B, const double* Rx,
                                  const double* Ru, rt_system** out);
/* Loads the "system" block of an experiment config file. */
RT_API rt_status rt_system_load(const char* config_path, rt_system** out);
RT_API void rt_system_destroy(rt_system* system);
RT_API rt_status rt_system_dims(const rt_system* system, int* dx, int* du);

/* JSON with P, K, Sigma, Acl, kappa, gamma, psi_star, beta_star, gamma_star
 * and residual. */
RT_API rt_status rt_dare_report(const rt_system* system, char** json_out);

/* Riccatitron for horizon T with default parameters. controller_json may be
 * NULL or a controller object with the config-file keys (learner, kappa0,
 * gamma0, overrides). */
RT_API rt_status rt_controller_create(const rt_system* system, long T, const char* controller_json,
                                      rt_controller** out);
RT_API void rt_controller_destroy(rt_controller* controller);
/* u_out receives du entries. */
RT_API rt_status rt_controller_act(rt_controller* controller, const double* x, double* u_out);
RT_API rt_status rt_controller_observe(rt_controller* controller, const double* w);
RT_API rt_status rt_controller_info(const rt_controller* controller, int* h, int* m, long* round);

/* Runs the experiment in config_path. comparator_mode may be NULL (use the
 * config) or "prefix", "fixed", "both". result_json_out receives
 * {"output_dir", "regret_csv", "baseline_csv", "metadata"}; nothing is
 * written to disk. */
RT_API rt_status rt_run_experiment(const char* config_path, const char* comparator_mode,
                                   char** result_json_out);

/* Counterexample sweep. epsilon may be NULL for the default. result_json_out
 * receives {"csv", "metadata"}. */
RT_API rt_status rt_counterexample(const long* T_list, size_t count, const double* epsilon, int projected,
                                   char** result_json_out);

#ifdef __cplusplus
}
#endif

#endif /* RICCATITRON_H_ */
