#ifndef MRFLAB_H
#define MRFLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  MRFLAB_STATUS_OK = 0,
  MRFLAB_STATUS_NULL_POINTER = 1,
  MRFLAB_STATUS_INVALID_GRID = 2,
  MRFLAB_STATUS_DIMENSION_MISMATCH = 3,
  MRFLAB_STATUS_DOMAIN = 4,
  MRFLAB_STATUS_TOO_LARGE = 5,
  MRFLAB_STATUS_EMPTY = 6,
  MRFLAB_STATUS_RESOLUTION = 7,
  MRFLAB_STATUS_CORRELATION = 8,
  MRFLAB_STATUS_PARSE = 9,
  MRFLAB_STATUS_IO = 10,
  /**
   * A Rust panic was caught at the boundary.
   */
  MRFLAB_STATUS_PANIC = 11,
} MrflabStatus;

/**
 * Observations on a grid, one byte per node.
 */
typedef struct MrflabDataset MrflabDataset;

/**
 * Rectangular grid with 4-neighbour edges.
 */
typedef struct MrflabGrid MrflabGrid;

/**
 * A likelihood (exact or one of the approximations) bound to a dataset.
 */
typedef struct MrflabLikelihood MrflabLikelihood;

/**
 * Retained draws of a Metropolis-Hastings chain.
 */
typedef struct MrflabSamples MrflabSamples;

/**
 * Contrastive-divergence settings.
 */
typedef struct {
  size_t k;
  double step_size;
  size_t max_iters;
  size_t num_particles;
  bool persistent;
  double grad_tol;
  uint64_t seed;
} MrflabCdConfig;

/**
 * Diagnostics of a contrastive-divergence fit.
 */
typedef struct {
  double grad_norm;
  size_t iters_used;
  bool converged;
} MrflabMleInfo;

/**
 * Random-walk Metropolis-Hastings settings.
 */
typedef struct {
  size_t steps;
  /**
   * Proposal variance per coordinate.
   */
  double sigma_q2;
  double prior_low;
  double prior_high;
  double burn_in_fraction;
  size_t thin;
  uint64_t seed;
} MrflabMhConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mrflab_version(void);

/**
 * Message for the last failure on this thread, or NULL if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *mrflab_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
MrflabStatus mrflab_grid_new(size_t rows, size_t cols, MrflabGrid **out);

/**
 * # Safety
 * `grid` must come from `mrflab_grid_new` and not be used afterwards.
 */
void mrflab_grid_free(MrflabGrid *grid);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
size_t mrflab_grid_num_nodes(const MrflabGrid *grid);

/**
 * Number of edges (parameters), or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
size_t mrflab_grid_num_edges(const MrflabGrid *grid);

/**
 * Endpoints of edge `index`; nodes are numbered row-major.
 *
 * # Safety
 * `grid` must be a live grid handle; `u` and `v` valid pointers.
 */
MrflabStatus mrflab_grid_edge(const MrflabGrid *grid, size_t index, size_t *u, size_t *v);

/**
 * Exact `log Z(theta)`.
 *
 * # Safety
 * `grid` must be a live handle, `theta` point to `p` doubles, `out` be valid.
 */
MrflabStatus mrflab_log_partition(const MrflabGrid *grid,
                                  const double *theta,
                                  size_t p,
                                  double *out);

/**
 * Draw `n` observations by Gibbs sampling at `theta`.
 *
 * # Safety
 * `grid` must be a live handle, `theta` point to `p` doubles, `out` be valid.
 */
MrflabStatus mrflab_dataset_sample(const MrflabGrid *grid,
                                   const double *theta,
                                   size_t p,
                                   size_t n,
                                   uint64_t seed,
                                   size_t burn_in_sweeps,
                                   size_t spacing_sweeps,
                                   MrflabDataset **out);

/**
 * Build a dataset from `n` row-major observations of `num_nodes` bytes
 * each, every byte 0 or 1.
 *
 * # Safety
 * `grid` must be a live handle, `bits` point to `n * num_nodes` bytes.
 */
MrflabStatus mrflab_dataset_from_bits(const MrflabGrid *grid,
                                      const uint8_t *bits,
                                      size_t n,
                                      MrflabDataset **out);

/**
 * Read a `.mrfdat` file; returns both its grid and its observations.
 *
 * # Safety
 * `file` must be a NUL-terminated path; the output slots must be valid.
 */
MrflabStatus mrflab_dataset_read(const char *file, MrflabGrid **grid_out, MrflabDataset **out);

/**
 * # Safety
 * `file` must be a NUL-terminated path; handles must be live.
 */
MrflabStatus mrflab_dataset_write(const char *file,
                                  const MrflabGrid *grid,
                                  const MrflabDataset *data);

/**
 * Number of observations, or 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live dataset handle.
 */
size_t mrflab_dataset_len(const MrflabDataset *data);

/**
 * Per-edge agreement counts, written to `agree[0..p]`.
 *
 * # Safety
 * Handles must be live and `agree` point to `p` writable elements.
 */
MrflabStatus mrflab_dataset_agreements(const MrflabDataset *data,
                                       const MrflabGrid *grid,
                                       size_t *agree,
                                       size_t p);

/**
 * # Safety
 * `data` must come from a dataset constructor and not be used afterwards.
 */
void mrflab_dataset_free(MrflabDataset *data);

MrflabCdConfig mrflab_cd_config_default(void);

/**
 * Fit theta by contrastive divergence; writes `p` estimates to `theta_out`.
 * `config` and `info` may be null (defaults / not reported).
 *
 * # Safety
 * Handles must be live, `theta_out` point to `p` writable doubles.
 */
MrflabStatus mrflab_fit_mle(const MrflabDataset *data,
                            const MrflabGrid *grid,
                            const MrflabCdConfig *config,
                            double *theta_out,
                            size_t p,
                            MrflabMleInfo *info);

/**
 * Exact likelihood via the transfer-window recursion.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
MrflabStatus mrflab_likelihood_exact(const MrflabDataset *data,
                                     const MrflabGrid *grid,
                                     MrflabLikelihood **out);

/**
 * MLE-induced likelihood with exchangeable Gaussian copula correlation
 * `rho` (0 for independent marginals).
 *
 * # Safety
 * Handles must be live, `theta_hat` point to `p` doubles, `out` valid.
 */
MrflabStatus mrflab_likelihood_mle(const MrflabDataset *data,
                                   const MrflabGrid *grid,
                                   const double *theta_hat,
                                   size_t p,
                                   double rho,
                                   MrflabLikelihood **out);

/**
 * Pseudolikelihood.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
MrflabStatus mrflab_likelihood_pseudo(const MrflabDataset *data,
                                      const MrflabGrid *grid,
                                      MrflabLikelihood **out);

/**
 * Laplace (quadratic) surrogate around `theta_hat`. Moments are exact on
 * enumerable grids and sampled with `seed` otherwise.
 *
 * # Safety
 * Handles must be live, `theta_hat` point to `p` doubles, `out` valid.
 */
MrflabStatus mrflab_likelihood_laplace(const MrflabDataset *data,
                                       const MrflabGrid *grid,
                                       const double *theta_hat,
                                       size_t p,
                                       uint64_t seed,
                                       MrflabLikelihood **out);

/**
 * Log-likelihood at `theta`.
 *
 * # Safety
 * `lik` must be live, `theta` point to `p` doubles, `out` valid.
 */
MrflabStatus mrflab_likelihood_eval(MrflabLikelihood *lik,
                                    const double *theta,
                                    size_t p,
                                    double *out);

/**
 * Number of parameters, or 0 for a null handle.
 *
 * # Safety
 * `lik` must be null or live.
 */
size_t mrflab_likelihood_num_params(const MrflabLikelihood *lik);

/**
 * # Safety
 * `lik` must come from a likelihood constructor and not be used afterwards.
 */
void mrflab_likelihood_free(MrflabLikelihood *lik);

MrflabMhConfig mrflab_mh_config_default(void);

/**
 * Run a chain on `lik`. `theta0` may be null to start at the prior
 * midpoint; otherwise it holds `p` doubles.
 *
 * # Safety
 * `lik` and `config` must be live/valid, `out` a valid handle slot.
 */
MrflabStatus mrflab_run_chain(MrflabLikelihood *lik,
                              const MrflabMhConfig *config,
                              const double *theta0,
                              size_t p,
                              MrflabSamples **out);

/**
 * Number of retained draws, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or live.
 */
size_t mrflab_samples_len(const MrflabSamples *s);

/**
 * Fraction of accepted proposals, or NaN for a null handle.
 *
 * # Safety
 * `s` must be null or live.
 */
double mrflab_samples_acceptance_rate(const MrflabSamples *s);

/**
 * Copy the retained draws, row-major `len x p`, into `out[0..len*p]`.
 *
 * # Safety
 * `s` must be live and `out` point to `len` writable doubles.
 */
MrflabStatus mrflab_samples_copy(const MrflabSamples *s, double *out, size_t len);

/**
 * Posterior mean and standard deviation per coordinate.
 *
 * # Safety
 * `s` must be live; `mean` and `sd` point to `p` writable doubles.
 */
MrflabStatus mrflab_samples_summary(const MrflabSamples *s, double *mean, double *sd, size_t p);

/**
 * # Safety
 * `s` must come from `mrflab_run_chain` and not be used afterwards.
 */
void mrflab_samples_free(MrflabSamples *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MRFLAB_H */
