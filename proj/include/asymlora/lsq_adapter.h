#pragma once

#include <cstdint>

#include "asymlora/stiefel.h"
#include "asymlora/types.h"

namespace asymlora {

/// Least-squares adaptation problem: targets Y = (W0 + delta) X + b0 + n with
/// X ~ (0, sigma) and n ~ N(0, noise_var I). The adapter keeps b = b0.
struct LinearFineTuneTask {
  Matrix w0;     // d_out x d_in
  Vector b0;     // d_out
  Matrix delta;  // d_out x d_in, W_targ - W0
  Matrix sigma;  // d_in x d_in, Cov[X]
  double noise_var = 0.0;

  Index d_in() const { return w0.cols(); }
  Index d_out() const { return w0.rows(); }
  Matrix w_targ() const { return w0 + delta; }

  /// Throws ValidationError on shape mismatch, asymmetric or indefinite
  /// sigma (tolerance 1e-10), or negative noise variance.
  void validate() const;
};

/// Wishart-style positive definite covariance G G^T / d + ridge I.
Matrix random_covariance(Index dim, double ridge, std::uint64_t seed);

/// Random task with a rank-`delta_rank` shift of Frobenius norm `delta_scale`
/// and a random positive definite covariance.
LinearFineTuneTask random_task(Index d_in, Index d_out, Index delta_rank,
                               double delta_scale, double noise_var,
                               std::uint64_t seed);

struct SolveOptions {
  double max_condition = 1e12;
  /// Adds 1e-10 * Tr(Q sigma Q^T) / r * I instead of failing on a
  /// near-singular projected covariance.
  bool ridge_fallback = false;
};

/// B* = delta sigma Q^T (Q sigma Q^T)^-1, the optimal B with A frozen to Q.
Matrix solve_freeze_A(const LinearFineTuneTask &task, const OrthonormalFrame &q,
                      const SolveOptions &options = {});

/// A* = U^T delta, the optimal A with B frozen to U. Independent of sigma.
Matrix solve_freeze_B(const LinearFineTuneTask &task, const OrthonormalFrame &u);

/// d_out s^2 + Tr[delta sigma delta^T] - Tr[Q sigma delta^T delta sigma Q^T (Q sigma Q^T)^-1]
double expected_loss_freeze_A(const LinearFineTuneTask &task,
                              const OrthonormalFrame &q,
                              const SolveOptions &options = {});

/// d_out s^2 + Tr[delta sigma delta^T] - Tr[U^T delta sigma delta^T U]
double expected_loss_freeze_B(const LinearFineTuneTask &task,
                              const OrthonormalFrame &u);

/// Population loss of an arbitrary pair: d_out s^2 + Tr[(delta - BA) sigma (delta - BA)^T].
double expected_loss(const LinearFineTuneTask &task, const Matrix &b,
                     const Matrix &a);

/// Best loss over all rank-r updates (both factors trained): d_out s^2 plus
/// the squared singular values of delta sigma^{1/2} beyond the r-th.
double optimal_loss_train_both(const LinearFineTuneTask &task, Index rank);

/// Monte Carlo estimate of the least-squares loss of (W0 + BA, b0).
///
/// Samples are processed in chunks of kMonteCarloChunk; chunk k draws from
/// derive_seed(seed, k), and chunk sums are added in chunk order.
double empirical_loss(const LinearFineTuneTask &task, const Matrix &b,
                      const Matrix &a, Index n_samples, std::uint64_t seed);

inline constexpr Index kMonteCarloChunk = 4096;

struct AsymmetryTrial {
  double loss_freeze_A = 0.0;  // L(Q, B*)
  double loss_freeze_B = 0.0;  // L(A*, U)
  double gap = 0.0;            // loss_freeze_B - loss_freeze_A
};

/// Draws U from derive_seed(seed, 0) and Q from derive_seed(seed, 1) and
/// evaluates both closed-form losses.
AsymmetryTrial asymmetry_trial(const LinearFineTuneTask &task, Index rank,
                               std::uint64_t seed,
                               const SolveOptions &options = {});

/// Tr[sigma Q^T M^-1 Q sigma D^T D] - Tr[Q^T Q sigma Q^T M^-1 Q sigma D^T D]
/// with M = Q sigma Q^T.
///
/// Non-negative for generic random inputs but not for every input: with
/// sigma = [[1, .5], [.5, 1]], Q = [1 0], D = [1 -1] it equals -0.25.
double trace_inequality_residual(const Matrix &sigma, const Matrix &delta,
                                 const OrthonormalFrame &q,
                                 const SolveOptions &options = {});

/// B_eq = B* A* F (Q F)^-1, so that B_eq Q x = B* A* x for every x in col(F).
/// Throws SingularityError (with the condition number of QF) when QF is singular.
Matrix lowrank_sigma_equivalent_B(const Matrix &b_star, const Matrix &a_star,
                                  const Matrix &f, const OrthonormalFrame &q);

/// variance * (1 - r/d) * Tr[U_X U_X^T D^T D]
double asymptotic_gap(const OrthonormalFrame &u_x, const Matrix &delta, Index r,
                      Index d, double variance);

} // namespace asymlora
