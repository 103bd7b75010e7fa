#ifndef SPATFUN_H
#define SPATFUN_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpatfunStatus {
  SPATFUN_STATUS_OK = 0,
  SPATFUN_STATUS_NULL_POINTER = 1,
  SPATFUN_STATUS_INVALID_ARGUMENT = 2,
  SPATFUN_STATUS_NUMERICAL = 3,
  SPATFUN_STATUS_IO = 4,
  SPATFUN_STATUS_PANIC = 5,
} SpatfunStatus;

typedef enum SpatfunRegion {
  SPATFUN_REGION_CUBE = 0,
  SPATFUN_REGION_BALL = 1,
} SpatfunRegion;

typedef enum SpatfunGrowthKind {
  /**
   * `alpha_N = value`.
   */
  SPATFUN_GROWTH_KIND_BOUNDED = 0,
  /**
   * `alpha_N = N^value`.
   */
  SPATFUN_GROWTH_KIND_POWER = 1,
  /**
   * `alpha_N = N^value ln N`.
   */
  SPATFUN_GROWTH_KIND_POWER_LOG = 2,
} SpatfunGrowthKind;

/**
 * Opaque symmetric kernel operator on a midpoint grid.
 */
typedef struct SpatfunOperator SpatfunOperator;

/**
 * Opaque set of sampling locations.
 */
typedef struct SpatfunPointSet SpatfunPointSet;

typedef struct SpatfunRateFit {
  double slope;
  double intercept;
  double r_squared;
} SpatfunRateFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated, into `buf`.
 * Returns the full message length excluding the terminator (0 when none),
 * so a return value `>= len` means the message was truncated.
 */
size_t spatfun_last_error(char *buf, size_t len);

/**
 * Builds a point set from `n` points of dimension `dim`, row-major.
 */
enum SpatfunStatus spatfun_pointset_new(size_t dim,
                                        const double *coords,
                                        size_t n,
                                        struct SpatfunPointSet **out);

/**
 * Reads a point set from a CSV file with header `x1,...,xd`.
 */
enum SpatfunStatus spatfun_pointset_load(const char *path, struct SpatfunPointSet **out);

/**
 * Regular grid design of `n` target points on the region scaled by `alpha_N`.
 */
enum SpatfunStatus spatfun_grid_design(size_t dim,
                                       enum SpatfunRegion region,
                                       enum SpatfunGrowthKind growth,
                                       double growth_value,
                                       size_t n,
                                       struct SpatfunPointSet **out);

void spatfun_pointset_free(struct SpatfunPointSet *set);

/**
 * Number of points; 0 for a null handle.
 */
size_t spatfun_pointset_len(const struct SpatfunPointSet *set);

/**
 * Dimension; 0 for a null handle.
 */
size_t spatfun_pointset_dim(const struct SpatfunPointSet *set);

/**
 * Largest fraction of points within distance `rho` of any one point.
 */
enum SpatfunStatus spatfun_intensity(const struct SpatfunPointSet *set, double rho, double *out);

/**
 * Ordered pairs (including the diagonal) at distance at most `m`.
 */
enum SpatfunStatus spatfun_pair_count(const struct SpatfunPointSet *set, double m, uint64_t *out);

/**
 * Closed-form mean loss of the tent field on `N` equispaced points.
 */
enum SpatfunStatus spatfun_exact_tent_loss(size_t n, double alpha, double *out);

enum SpatfunStatus spatfun_f_lambda(double lambda, double *out);

/**
 * `cov(X^2, Y^2)` for jointly normal mean-zero `X, Y`.
 */
enum SpatfunStatus spatfun_gaussian_sq_cov(double sigma, double nu, double rho, double *out);

/**
 * Wraps a `grid_size x grid_size` row-major kernel on the midpoint grid.
 */
enum SpatfunStatus spatfun_operator_new(size_t grid_size,
                                        const double *kernel,
                                        struct SpatfunOperator **out);

void spatfun_operator_free(struct SpatfunOperator *op);

enum SpatfunStatus spatfun_operator_hs_norm(const struct SpatfunOperator *op, double *out);

/**
 * Writes the `k` largest eigenvalues, descending, into `values`.
 */
enum SpatfunStatus spatfun_operator_eigenvalues(const struct SpatfunOperator *op,
                                                size_t k,
                                                double *values);

/**
 * Log-log least squares of `losses` on `xs`.
 */
enum SpatfunStatus spatfun_rate_fit(const double *xs,
                                    const double *losses,
                                    size_t n,
                                    struct SpatfunRateFit *out);

/**
 * Runs the experiment described by the JSON file at `config_path`, writing
 * its CSV outputs (and SVG plots when `svg` is nonzero) into `out_dir`.
 */
enum SpatfunStatus spatfun_run_experiment(const char *config_path,
                                          const char *out_dir,
                                          int32_t svg);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPATFUN_H */
