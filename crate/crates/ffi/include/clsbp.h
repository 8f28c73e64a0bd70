#ifndef CLSBP_H
#define CLSBP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum ClsbpStatus {
  CLSBP_STATUS_OK = 0,
  CLSBP_STATUS_NULL_POINTER = 1,
  CLSBP_STATUS_VALIDATION = 2,
  CLSBP_STATUS_NUMERICAL = 3,
  CLSBP_STATUS_IO = 4,
  CLSBP_STATUS_BUFFER_TOO_SMALL = 5,
  CLSBP_STATUS_PANIC = 6,
} ClsbpStatus;

/**
 * Sampler settings.
 */
typedef struct ClsbpConfig ClsbpConfig;

/**
 * Outcomes, treatments, covariates and optional propensity scores.
 */
typedef struct ClsbpObservations ClsbpObservations;

/**
 * A finished fit with its retained draws.
 */
typedef struct ClsbpPosterior ClsbpPosterior;

/**
 * Posterior mean and equal-tailed credible bounds.
 */
typedef struct ClsbpSummary {
  double point;
  double lower;
  double upper;
  double level;
} ClsbpSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the buffer size needed for the full message.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
size_t clsbp_last_error_message(char *buf, size_t len);

/**
 * New configuration with default settings.
 */
struct ClsbpConfig *clsbp_config_new(void);

/**
 * # Safety
 * `cfg` must be null or a pointer from `clsbp_config_new` not yet freed.
 */
void clsbp_config_free(struct ClsbpConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live pointer from `clsbp_config_new`.
 */
enum ClsbpStatus clsbp_config_set_sticks(struct ClsbpConfig *cfg, size_t sticks);

/**
 * Burn-in, retained draws and thinning interval.
 *
 * # Safety
 * `cfg` must be a live pointer from `clsbp_config_new`.
 */
enum ClsbpStatus clsbp_config_set_chain(struct ClsbpConfig *cfg,
                                        size_t burn_in,
                                        size_t keep,
                                        size_t thin);

/**
 * # Safety
 * `cfg` must be a live pointer from `clsbp_config_new`.
 */
enum ClsbpStatus clsbp_config_set_seed(struct ClsbpConfig *cfg, uint64_t seed);

/**
 * Degrees of freedom and scale of the inverse-gamma prior on component variances.
 *
 * # Safety
 * `cfg` must be a live pointer from `clsbp_config_new`.
 */
enum ClsbpStatus clsbp_config_set_variance_prior(struct ClsbpConfig *cfg, double nu0, double s0_sq);

/**
 * Whether the propensity score enters the atom maps and/or the weight map.
 *
 * # Safety
 * `cfg` must be a live pointer from `clsbp_config_new`.
 */
enum ClsbpStatus clsbp_config_set_pscore(struct ClsbpConfig *cfg, bool in_atoms, bool in_weights);

/**
 * # Safety
 * `cfg` must be a live pointer from `clsbp_config_new`.
 */
enum ClsbpStatus clsbp_config_set_standardize(struct ClsbpConfig *cfg, bool standardize);

/**
 * Copies `n` subjects into a new observation set. `x` is `n × d` row-major;
 * `pihat` may be null.
 *
 * # Safety
 * `y`, `z` must hold `n` values, `x` must hold `n * d`, `pihat` must be null
 * or hold `n`, and `out` must be writable.
 */
enum ClsbpStatus clsbp_observations_new(const double *y,
                                        const double *z,
                                        const double *x,
                                        size_t n,
                                        size_t d,
                                        const double *pihat,
                                        struct ClsbpObservations **out);

/**
 * # Safety
 * `obs` must be null or a live observation pointer.
 */
void clsbp_observations_free(struct ClsbpObservations *obs);

/**
 * Number of subjects and covariates.
 *
 * # Safety
 * `obs` must be a live observation pointer; `n` and `d` must be writable or null.
 */
enum ClsbpStatus clsbp_observations_dims(const struct ClsbpObservations *obs, size_t *n, size_t *d);

/**
 * Copies the true per-subject effects of a simulated set into `buf` (length `n`).
 *
 * # Safety
 * `obs` must be a live observation pointer; `buf` must hold `len` doubles.
 */
enum ClsbpStatus clsbp_observations_true_effects(const struct ClsbpObservations *obs,
                                                 double *buf,
                                                 size_t len);

/**
 * Simulates one data set, e.g. `"sim1:t=0:n=500"` or `"sim2:linear:homogeneous"`.
 *
 * # Safety
 * `scenario` must be a NUL-terminated string and `out` writable.
 */
enum ClsbpStatus clsbp_simulate(const char *scenario,
                                uint64_t seed,
                                struct ClsbpObservations **out);

/**
 * Runs the sampler. With `fit_propensity` the propensity scores are
 * estimated by logistic regression first.
 *
 * # Safety
 * `obs` and `cfg` must be live pointers and `out` writable.
 */
enum ClsbpStatus clsbp_fit(const struct ClsbpObservations *obs,
                           const struct ClsbpConfig *cfg,
                           bool fit_propensity,
                           struct ClsbpPosterior **out);

/**
 * # Safety
 * `post` must be null or a live posterior pointer.
 */
void clsbp_posterior_free(struct ClsbpPosterior *post);

/**
 * Number of retained draws and subjects.
 *
 * # Safety
 * `post` must be a live posterior pointer; `keep` and `n` writable or null.
 */
enum ClsbpStatus clsbp_posterior_dims(const struct ClsbpPosterior *post, size_t *keep, size_t *n);

/**
 * Copies the `keep × n` CATE draws, row-major, into `buf`.
 *
 * # Safety
 * `post` must be a live posterior pointer; `buf` must hold `len` doubles.
 */
enum ClsbpStatus clsbp_posterior_cate(const struct ClsbpPosterior *post, double *buf, size_t len);

/**
 * Average treatment effect over the fitted subjects.
 *
 * # Safety
 * `post` must be a live posterior pointer and `out` writable.
 */
enum ClsbpStatus clsbp_posterior_ate(const struct ClsbpPosterior *post,
                                     double level,
                                     struct ClsbpSummary *out);

/**
 * Average CATE over the subjects listed in `members` (zero-based indices).
 *
 * # Safety
 * `post` must be a live posterior pointer, `members` must hold `m` indices
 * and `out` must be writable.
 */
enum ClsbpStatus clsbp_posterior_subgroup(const struct ClsbpPosterior *post,
                                          const size_t *members,
                                          size_t m,
                                          double level,
                                          struct ClsbpSummary *out);

/**
 * Quantile treatment effects at covariate profile `x` (raw scale, length `d`)
 * for each of the `k` levels in `alphas`. Pass NaN for `pihat` when the
 * model does not use propensity scores.
 *
 * # Safety
 * `post` must be a live posterior pointer, `x` must hold `d` doubles,
 * `alphas` `k` doubles and `out` room for `k` summaries.
 */
enum ClsbpStatus clsbp_posterior_qte(const struct ClsbpPosterior *post,
                                     const double *x,
                                     size_t d,
                                     double pihat,
                                     const double *alphas,
                                     size_t k,
                                     double level,
                                     struct ClsbpSummary *out);

/**
 * Posterior mean predictive density of `y` at profile `x` under treatment
 * `z`, evaluated on the `g` points of `grid`.
 *
 * # Safety
 * `post` must be a live posterior pointer, `x` must hold `d` doubles and
 * `grid` and `out` must each hold `g` doubles.
 */
enum ClsbpStatus clsbp_posterior_predictive(const struct ClsbpPosterior *post,
                                            const double *x,
                                            size_t d,
                                            double pihat,
                                            double z,
                                            const double *grid,
                                            size_t g,
                                            double *out);

/**
 * Mixture CDF of draw `draw` at profile `x` under treatment `z`, at `y`.
 * Useful for checking quantiles from C.
 *
 * # Safety
 * `post` must be a live posterior pointer, `x` must hold `d` doubles and
 * `out` must be writable.
 */
enum ClsbpStatus clsbp_posterior_draw_cdf(const struct ClsbpPosterior *post,
                                          size_t draw,
                                          const double *x,
                                          size_t d,
                                          double pihat,
                                          double z,
                                          double y,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLSBP_H */
