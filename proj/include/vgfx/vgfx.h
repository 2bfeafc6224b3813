/* C interface to the vgfx currency-option pricing and calibration library.
 *
 * Every fallible call takes a context, returns a vgfx_status and leaves a
 * message retrievable with vgfx_last_error(). Objects are opaque handles
 * released by their matching _destroy function. A context must not be used
 * from two threads at once; distinct contexts are independent. */
#ifndef VGFX_VGFX_H
#define VGFX_VGFX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(VGFX_BUILDING_LIBRARY)
#define VGFX_API __declspec(dllexport)
#else
#define VGFX_API __declspec(dllimport)
#endif
#else
#define VGFX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes in the command-line tool. */
typedef enum vgfx_status {
  VGFX_OK = 0,
  VGFX_ERR_USAGE = 1,   /* invalid argument, flag, configuration or parameter */
  VGFX_ERR_DATA = 2,    /* unreadable or malformed input data, I/O failure */
  VGFX_ERR_NUMERIC = 3  /* quadrature or other numerical failure */
} vgfx_status;

typedef enum vgfx_model { VGFX_MODEL_GK = 0, VGFX_MODEL_VG = 1, VGFX_MODEL_SVG = 2 } vgfx_model;

typedef enum vgfx_pricer {
  VGFX_PRICER_GK = 0,
  VGFX_PRICER_CLOSED_FORM = 1,
  VGFX_PRICER_MIXING_FALLBACK = 2,
  VGFX_PRICER_MONTE_CARLO = 3
} vgfx_pricer;

typedef struct vgfx_context vgfx_context;
typedef struct vgfx_returns vgfx_returns;
typedef struct vgfx_quotes vgfx_quotes;

typedef struct vgfx_market {
  double spot;
  double r_d;
  double r_f;
} vgfx_market;

typedef struct vgfx_vg_params {
  double sigma;
  double nu;
  double theta;
} vgfx_vg_params;

/* European call. maturity is in years. */
typedef struct vgfx_option {
  double strike;
  double maturity;
} vgfx_option;

typedef struct vgfx_quadrature {
  double rel_tol;
  double abs_tol;
  int max_subdivisions;
} vgfx_quadrature;

typedef struct vgfx_simplex {
  double reflection;
  double expansion;
  double contraction;
  double shrink;
  double x_tol;
  double f_tol;
  int max_iters;
  int restarts;
} vgfx_simplex;

typedef struct vgfx_mc_result {
  double price;
  double standard_error;
  double forward_ratio;
  double forward_ratio_error;
} vgfx_mc_result;

typedef struct vgfx_calibration {
  vgfx_model model;
  double sigma;
  double nu;
  double theta;
  double loss;
  int iterations;
  int evaluations;
  int converged;
  int fallback_used;
  int moment_fallback;
  int carried_forward;
} vgfx_calibration;

VGFX_API const char* vgfx_version(void);
/* Name of a status code, e.g. "usage error". */
VGFX_API const char* vgfx_status_name(vgfx_status status);

VGFX_API vgfx_status vgfx_context_create(vgfx_context** out);
VGFX_API void vgfx_context_destroy(vgfx_context* ctx);
/* Message of the last failed call on ctx; empty after a success. Valid until
 * the next call on ctx. */
VGFX_API const char* vgfx_last_error(const vgfx_context* ctx);

VGFX_API void vgfx_quadrature_default(vgfx_quadrature* out);
VGFX_API void vgfx_simplex_default(vgfx_simplex* out);

/* Pricing. A NULL quadrature pointer selects the defaults. */
VGFX_API vgfx_status vgfx_price_gk(vgfx_context* ctx, const vgfx_market* market, double sigma,
                                   const vgfx_option* option, double* price);
/* Closed form, falling back to the mixing quadrature when the closed form's
 * parameter conditions fail; *pricer reports which one ran (may be NULL). */
VGFX_API vgfx_status vgfx_price_vg(vgfx_context* ctx, const vgfx_market* market, const vgfx_vg_params* params,
                                   const vgfx_option* option, const vgfx_quadrature* quad, double* price,
                                   vgfx_pricer* pricer);
VGFX_API vgfx_status vgfx_price_vg_closed(vgfx_context* ctx, const vgfx_market* market,
                                          const vgfx_vg_params* params, const vgfx_option* option,
                                          const vgfx_quadrature* quad, double* price);
VGFX_API vgfx_status vgfx_price_vg_mixing(vgfx_context* ctx, const vgfx_market* market,
                                          const vgfx_vg_params* params, const vgfx_option* option,
                                          const vgfx_quadrature* quad, double* price);
VGFX_API vgfx_status vgfx_price_vg_mc(vgfx_context* ctx, const vgfx_market* market, const vgfx_vg_params* params,
                                      const vgfx_option* option, uint64_t paths, uint64_t seed,
                                      vgfx_mc_result* out);

/* Daily log-return series. */
VGFX_API vgfx_status vgfx_returns_load(vgfx_context* ctx, const char* path, vgfx_returns** out);
VGFX_API vgfx_status vgfx_returns_from_array(vgfx_context* ctx, const double* values, size_t n,
                                             vgfx_returns** out);
VGFX_API size_t vgfx_returns_size(const vgfx_returns* returns);
VGFX_API void vgfx_returns_destroy(vgfx_returns* returns);

/* NULL simplex selects the defaults. */
VGFX_API vgfx_status vgfx_fit_historical(vgfx_context* ctx, const vgfx_returns* returns, vgfx_model model,
                                         const vgfx_simplex* simplex, vgfx_calibration* out);

/* Option quotes. r_d / r_f may be NULL to read the rate columns, or point
 * to constants that replace them. */
VGFX_API vgfx_status vgfx_quotes_load(vgfx_context* ctx, const char* path, const double* r_d, const double* r_f,
                                      vgfx_quotes** out);
VGFX_API size_t vgfx_quotes_size(const vgfx_quotes* quotes);
VGFX_API size_t vgfx_quotes_reject_count(const vgfx_quotes* quotes);
/* Keeps quotes with volume strictly above min_volume. */
VGFX_API vgfx_status vgfx_quotes_filter(vgfx_context* ctx, const vgfx_quotes* quotes, int64_t min_volume,
                                        vgfx_quotes** out);
VGFX_API void vgfx_quotes_destroy(vgfx_quotes* quotes);

/* Fits every quote in `chain` as one week, starting from `initial` (required,
 * projected into the parameter box). NULL simplex / quad select the defaults. */
VGFX_API vgfx_status vgfx_fit_weekly(vgfx_context* ctx, const vgfx_quotes* chain, vgfx_model model,
                                     const vgfx_vg_params* initial, const vgfx_simplex* simplex,
                                     const vgfx_quadrature* quad, vgfx_calibration* out);

/* Pipeline commands: "simulate", "fit-historical", "fit-weekly", "evaluate"
 * or "generate". config_json is a configuration document (NULL or "" for
 * the defaults). On success *summary_json receives a JSON summary to be
 * released with vgfx_string_free; warnings are listed under "warnings". */
VGFX_API vgfx_status vgfx_run(vgfx_context* ctx, const char* command, const char* config_json,
                              char** summary_json);
/* The default configuration as JSON; release with vgfx_string_free. */
VGFX_API vgfx_status vgfx_default_config(vgfx_context* ctx, char** config_json);
VGFX_API void vgfx_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* VGFX_VGFX_H */
