#ifndef PANVEIN_H
#define PANVEIN_H

/* C interface to the pancreatic-vein solver library. All functions return a
 * pv_status; on failure pv_last_error() describes the most recent error on
 * the calling thread. Handles are opaque and must be released with the
 * matching *_free function. */

#include <stddef.h>
#include <stdint.h>

#if defined(PANVEIN_BUILDING_LIBRARY)
#define PV_API __attribute__((visibility("default")))
#else
#define PV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pv_status {
  PV_OK = 0,
  PV_INVALID_ARGUMENT = 1,
  PV_DOMAIN,
  PV_PROFILE_VALIDITY,
  PV_BRACKET,
  PV_PARAMETER_REGIME,
  PV_NON_CONVERGENCE,
  PV_DIVERGENCE,
  PV_INTEGRATION_FAILURE,
  PV_SINGULAR,
  PV_CONDITIONING,
  PV_MODE,
  PV_DEGENERATE_QUADRATIC,
  PV_STEP_SIZE,
  PV_BLOW_UP,
  PV_VALIDATION,
  PV_IO,
  PV_INTERNAL = 99
} pv_status;

typedef struct pv_params {
  double c, eps, L, G_in, a, b, d_i, alpha1, alpha2;
} pv_params;

typedef struct pv_equilibrium {
  double G_star, I_star;
  double lambda1_re, lambda1_im, lambda2_re, lambda2_im;
  double M, rho;
} pv_equilibrium;

typedef struct pv_stability {
  double b_matrix[4]; /* row-major */
  double quad_coeffs[3];
  double root_re[2], root_im[2];
  double lead_re;
  int verdict; /* 0 stable, 1 marginal, 2 unstable */
} pv_stability;

typedef struct pv_sigma pv_sigma;
typedef struct pv_profile pv_profile;
typedef struct pv_scenario pv_scenario;

PV_API const char* pv_version(void);
PV_API const char* pv_status_string(pv_status status);
PV_API const char* pv_last_error(void);

PV_API pv_params pv_params_default(void);
PV_API pv_status pv_params_validate(const pv_params* params);

PV_API pv_status pv_sigma_homogeneous(double base, double length, pv_sigma** out);
PV_API pv_status pv_sigma_linear(double end0, double endL, double length, pv_sigma** out);
PV_API pv_status pv_sigma_quadratic(double end0, double vertex, double endL, double length,
                                    pv_sigma** out);
PV_API pv_status pv_sigma_eval(const pv_sigma* sigma, double x, double* out);
PV_API void pv_sigma_free(pv_sigma* sigma);

PV_API pv_status pv_find_equilibrium(const pv_params* params, double sigma, pv_equilibrium* out);

PV_API pv_status pv_solve_shooting(const pv_params* params, const pv_sigma* sigma, int grid_n,
                                   double tol, pv_profile** out);
PV_API pv_status pv_solve_picard(const pv_params* params, double sigma, int grid_n, double tol,
                                 pv_profile** out);
PV_API pv_status pv_solve_eps_collocation(const pv_params* params, const pv_sigma* sigma,
                                          int grid_n, pv_profile** out);
PV_API pv_status pv_solve_eps_block(const pv_params* params, double sigma, int grid_n,
                                    pv_profile** out);

PV_API size_t pv_profile_size(const pv_profile* profile);
/* Copies up to `capacity` nodes into each non-null buffer. */
PV_API pv_status pv_profile_copy(const pv_profile* profile, double* x, double* G, double* I,
                                 size_t capacity);
PV_API pv_status pv_profile_residuals(const pv_profile* profile, double* res_G, double* res_I);
PV_API void pv_profile_free(pv_profile* profile);

PV_API pv_status pv_analyze_stability(const pv_profile* profile, const pv_params* params,
                                      const pv_sigma* sigma, pv_stability* out);

PV_API pv_status pv_scenario_load(const char* path, pv_scenario** out);
PV_API pv_status pv_scenario_parse(const char* text, pv_scenario** out);
PV_API pv_status pv_scenario_set_mode(pv_scenario* scenario, const char* mode);
PV_API pv_status pv_scenario_set_out_dir(pv_scenario* scenario, const char* dir);
PV_API pv_status pv_scenario_set_grid_n(pv_scenario* scenario, int grid_n);
PV_API pv_status pv_scenario_set_tol(pv_scenario* scenario, double tol);
PV_API pv_status pv_scenario_set_workers(pv_scenario* scenario, int workers);
PV_API pv_status pv_scenario_set_seed(pv_scenario* scenario, uint64_t seed);
PV_API pv_status pv_scenario_run(pv_scenario* scenario);
/* Valid until the next run or free. */
PV_API const char* pv_scenario_summary(const pv_scenario* scenario);
PV_API const char* pv_scenario_echo(const pv_scenario* scenario);
PV_API size_t pv_scenario_manifest_size(const pv_scenario* scenario);
PV_API pv_status pv_scenario_manifest_entry(const pv_scenario* scenario, size_t index,
                                            const char** file, const char** sha256);
PV_API size_t pv_scenario_timing_size(const pv_scenario* scenario);
PV_API pv_status pv_scenario_timing_entry(const pv_scenario* scenario, size_t index,
                                          const char** stage, double* seconds);
PV_API void pv_scenario_free(pv_scenario* scenario);

#ifdef __cplusplus
}
#endif

#endif
